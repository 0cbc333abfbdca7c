// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "para/errors.hpp"

namespace para {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Column-major scratch copy, one contiguous column per slot.
std::vector<std::vector<double>> to_columns(const Matrix& m) {
    std::vector<std::vector<double>> cols(m.cols(), std::vector<double>(m.rows()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) cols[j][i] = m(i, j);
    }
    return cols;
}

double dot(const std::vector<double>& x, const std::vector<double>& y, std::size_t from = 0) {
    double s = 0.0;
    for (std::size_t i = from; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

} // namespace

QrFactors householder_qr(const Matrix& m) {
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    if (rows < cols) {
        throw DimensionError("householder_qr needs rows >= cols, got " + shape_str(m) + "; transpose first");
    }

    auto work = to_columns(m);
    // Reflector k acts on rows k..rows-1; a zero vector marks an identity step.
    std::vector<std::vector<double>> reflectors(cols);

    for (std::size_t k = 0; k < cols; ++k) {
        auto& x = work[k];
        double norm = 0.0;
        for (std::size_t i = k; i < rows; ++i) norm = std::hypot(norm, x[i]);
        auto& v = reflectors[k];
        v.assign(rows, 0.0);
        if (norm == 0.0) continue;

        const double alpha = x[k] > 0.0 ? -norm : norm;
        for (std::size_t i = k; i < rows; ++i) v[i] = x[i];
        v[k] -= alpha;
        const double vv = dot(v, v, k);
        if (vv == 0.0) {
            v.assign(rows, 0.0);
            continue;
        }
        for (std::size_t j = k; j < cols; ++j) {
            auto& c = work[j];
            const double f = 2.0 * dot(v, c, k) / vv;
            for (std::size_t i = k; i < rows; ++i) c[i] -= f * v[i];
        }
        x[k] = alpha;
        for (std::size_t i = k + 1; i < rows; ++i) x[i] = 0.0;
    }

    Matrix r(cols, cols);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 0; i <= j; ++i) r(i, j) = work[j][i];
    }

    // Q = H_0 H_1 ... H_{n-1} [I; 0], applied right to left.
    std::vector<std::vector<double>> q(cols, std::vector<double>(rows, 0.0));
    for (std::size_t j = 0; j < cols; ++j) q[j][j] = 1.0;
    for (std::size_t k = cols; k-- > 0;) {
        const auto& v = reflectors[k];
        const double vv = dot(v, v, k);
        if (vv == 0.0) continue;
        for (std::size_t j = k; j < cols; ++j) {
            auto& c = q[j];
            const double f = 2.0 * dot(v, c, k) / vv;
            for (std::size_t i = k; i < rows; ++i) c[i] -= f * v[i];
        }
    }

    for (std::size_t k = 0; k < cols; ++k) {
        if (r(k, k) < 0.0) {
            for (std::size_t j = k; j < cols; ++j) r(k, j) = -r(k, j);
            for (auto& e : q[k]) e = -e;
        }
    }

    Matrix qm(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) qm(i, j) = q[j][i];
    }
    return {std::move(qm), std::move(r)};
}

SvdFactors svd_square(const Matrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("svd_square needs a square matrix, got " + shape_str(m));
    const std::size_t n = m.rows();
    if (n > kMaxSvdSide) {
        throw DimensionError("svd_square side " + std::to_string(n) + " exceeds " + std::to_string(kMaxSvdSide));
    }

    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr int kMaxSweeps = 80;

    auto w = to_columns(m);
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

    // Hestenes rotations until every column pair is orthogonal to working precision.
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = dot(w[p], w[p]);
                const double beta = dot(w[q], w[q]);
                const double gamma = dot(w[p], w[q]);
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha) * std::sqrt(beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w[p][i];
                    const double wq = w[q][i];
                    w[p][i] = c * wp - s * wq;
                    w[q][i] = s * wp + c * wq;
                    const double vp = v[p][i];
                    const double vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(dot(w[j], w[j]));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    SvdFactors out{Matrix(n, n), std::vector<double>(n), Matrix(n, n)};
    const double sigma_max = norms[order[0]];
    const double floor = static_cast<double>(n) * eps * sigma_max;

    std::vector<std::vector<double>> ucols;
    ucols.reserve(n);
    std::vector<std::size_t> missing;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.sigma[k] = norms[j];
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v[j][i];
        std::vector<double> col(n, 0.0);
        if (norms[j] > floor && norms[j] > 0.0) {
            for (std::size_t i = 0; i < n; ++i) col[i] = w[j][i] / norms[j];
        } else {
            missing.push_back(k);
        }
        ucols.push_back(std::move(col));
    }

    // Complete the left basis for null directions with the standard basis
    // vector that survives projection best (two Gram-Schmidt passes).
    for (std::size_t k : missing) {
        std::vector<double> best;
        double best_norm = -1.0;
        for (std::size_t e = 0; e < n; ++e) {
            std::vector<double> cand(n, 0.0);
            cand[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t c = 0; c < n; ++c) {
                    if (c == k) continue;
                    const double d = dot(ucols[c], cand);
                    if (d == 0.0) continue;
                    for (std::size_t i = 0; i < n; ++i) cand[i] -= d * ucols[c][i];
                }
            }
            const double nrm = std::sqrt(dot(cand, cand));
            if (nrm > best_norm) {
                best_norm = nrm;
                best = std::move(cand);
            }
        }
        for (auto& x : best) x /= best_norm;
        ucols[k] = std::move(best);
    }

    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) out.u(i, k) = ucols[k][i];
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul shape mismatch: " + shape_str(a) + " * " + shape_str(b));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn shape mismatch: " + shape_str(a) + "^T * " + shape_str(b));
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto arow = a.row(k);
        auto brow = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            auto crow = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

double frobenius_norm(const Matrix& m) {
    double scale = 0.0;
    for (double x : m.data()) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double x : m.data()) s += (x / scale) * (x / scale);
    return scale * std::sqrt(s);
}

double orthonormality_defect(const Matrix& m) {
    const Matrix g = matmul_tn(m, m);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
            worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

} // namespace para
