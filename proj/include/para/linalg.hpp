// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "para/matrix.hpp"

namespace para {

/// Thin QR factors of an m x n matrix with m >= n.
struct QrFactors {
    Matrix q;        ///< m x n, orthonormal columns
    Matrix r_upper;  ///< n x n, upper triangular with non-negative diagonal
};

/// Full SVD of an n x n matrix: input = u * diag(sigma) * v^T.
struct SvdFactors {
    Matrix u;
    std::vector<double> sigma;  ///< non-increasing, non-negative
    Matrix v;
};

/// Largest side accepted by svd_square.
inline constexpr std::size_t kMaxSvdSide = 1024;

/// Householder thin QR. Rows of R with a negative diagonal are flipped together
/// with the matching column of Q, so full-rank inputs have a unique
/// factorization. Entries below the diagonal of r_upper are exact zeros.
/// Throws DimensionError when rows < cols.
QrFactors householder_qr(const Matrix& m);

/// One-sided Jacobi SVD of a square matrix of side <= kMaxSvdSide.
/// Left singular vectors for (numerically) zero singular values are completed
/// to an orthonormal basis. Throws DimensionError on non-square input.
SvdFactors svd_square(const Matrix& m);

/// a * b with a fixed i-k-j accumulation order. Throws DimensionError when
/// a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

/// a^T * b without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);

/// max |(m^T m - I)_ij|, the orthonormal-columns defect.
double orthonormality_defect(const Matrix& m);

} // namespace para
