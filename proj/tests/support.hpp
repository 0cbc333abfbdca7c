// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "para/adapter.hpp"
#include "para/matrix.hpp"

namespace para::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = dist(rng);
    return m;
}

// Triple loop in j-k order, deliberately different from the library kernel.
inline Matrix naive_product(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double acc = 0.0L;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
            c(i, j) = static_cast<double>(acc);
        }
    }
    return c;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

inline double fro(const Matrix& m) {
    long double s = 0.0L;
    for (double x : m.data()) s += static_cast<long double>(x) * x;
    return std::sqrt(static_cast<double>(s));
}

inline double relative_fro(const Matrix& got, const Matrix& want) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const long double d = static_cast<long double>(got.data()[i]) - want.data()[i];
        s += d * d;
    }
    const double denom = fro(want);
    return std::sqrt(static_cast<double>(s)) / (denom > 0.0 ? denom : 1.0);
}

// Max deviation relative to the largest value; the shorter vector is padded with zeros.
inline double relative_sigma_error(const std::vector<double>& got, const std::vector<double>& want) {
    const std::size_t n = std::max(got.size(), want.size());
    double worst = 0.0;
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = i < got.size() ? got[i] : 0.0;
        const double w = i < want.size() ? want[i] : 0.0;
        worst = std::max(worst, std::abs(g - w));
        top = std::max(top, std::abs(w));
    }
    return top > 0.0 ? worst / top : worst;
}

inline AdapterLayer random_layer(std::size_t d1, std::size_t d2, std::size_t r, std::mt19937_64& rng,
                                 double scale = 1.0, int index = 1, LayerType type = LayerType::q) {
    AdapterLayer layer{.key = {index, type, "layers." + std::to_string(index - 1) + "." + std::string(to_string(type))},
                       .b = random_matrix(d1, r, rng),
                       .a = random_matrix(r, d2, rng),
                       .scale = scale,
                       .storage_dtype = Dtype::f32};
    return layer;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("para-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace para::testing
