// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/matrix.hpp"

#include <cmath>
#include <string>

#include "para/errors.hpp"

namespace para {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix extents must be positive, got " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
    data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix extents must be positive, got " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
    if (data_.size() != rows * cols) {
        throw DimensionError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                             std::to_string(rows * cols));
    }
    for (double x : data_) {
        if (!std::isfinite(x)) throw DomainError("matrix entries must be finite");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
}

} // namespace para
