// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "para/errors.hpp"

namespace para {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(const Matrix& m) { return {m.data().data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())}; }

Matrix from_eigen(const Eigen::MatrixXd& m) {
    Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(std::size_t(i), std::size_t(j)) = m(i, j);
    }
    return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

Matrix materialize(const AdapterLayer& layer) {
    const std::size_t d1 = layer.b.rows();
    const std::size_t d2 = layer.a.cols();
    const std::size_t r = layer.b.cols();
    if (d2 != 0 && d1 > kOracleMaxEntries / d2) {
        throw SizeGuardError("refusing to materialize a " + std::to_string(d1) + "x" + std::to_string(d2) + " update");
    }
    if (layer.a.rows() != r) throw DimensionError("lora factors do not share an inner dimension");

    Matrix phi(d1, d2);
    for (std::size_t i = 0; i < d1; ++i) {
        double* out = phi.row(i).data();
        for (std::size_t k = 0; k < r; ++k) {
            const double bik = layer.scale * layer.b(i, k);
            const double* arow = layer.a.row(k).data();
            for (std::size_t j = 0; j < d2; ++j) out[j] += bik * arow[j];
        }
    }
    return phi;
}

OracleSvd::OracleSvd(Matrix u, std::vector<double> sigma, Matrix v)
    : u_(std::move(u)), sigma_(std::move(sigma)), v_(std::move(v)) {}

Matrix OracleSvd::truncate(std::size_t k) const {
    k = std::min(k, sigma_.size());
    Matrix out(u_.rows(), v_.rows());
    for (std::size_t i = 0; i < u_.rows(); ++i) {
        double* row = out.row(i).data();
        for (std::size_t t = 0; t < k; ++t) {
            const double coeff = u_(i, t) * sigma_[t];
            for (std::size_t j = 0; j < v_.rows(); ++j) row[j] += coeff * v_(j, t);
        }
    }
    return out;
}

OracleSvd oracle_svd(const AdapterLayer& layer) {
    const Matrix phi = materialize(layer);
    const Eigen::MatrixXd dense = view(phi);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return OracleSvd(from_eigen(svd.matrixU()), to_vector(svd.singularValues()), from_eigen(svd.matrixV()));
}

std::vector<double> oracle_sigma(const AdapterLayer& layer) { return oracle_sigma(materialize(layer)); }

std::vector<double> oracle_sigma(const Matrix& m) {
    const Eigen::MatrixXd dense = view(m);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
    return to_vector(svd.singularValues());
}

double frobenius_distance(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw DimensionError("frobenius_distance needs equal shapes");
    }
    double sum = 0.0;
    const auto xs = x.data();
    const auto ys = y.data();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - ys[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

} // namespace para
