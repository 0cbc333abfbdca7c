// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Brute-force reference used by tests and `para verify`. It materializes the
// full d1 x d2 update and decomposes it in the ambient space with Eigen; it
// shares no kernels with the QR route it is meant to check.

#include <cstddef>
#include <vector>

#include "para/adapter.hpp"
#include "para/matrix.hpp"

namespace para {

/// Largest d1 * d2 the oracle will materialize.
inline constexpr std::size_t kOracleMaxEntries = 16'777'216;

/// scale * B * A, formed explicitly. Throws SizeGuardError above kOracleMaxEntries.
Matrix materialize(const AdapterLayer& layer);

/// Thin SVD of a materialized update.
class OracleSvd {
public:
    OracleSvd(Matrix u, std::vector<double> sigma, Matrix v);

    /// All min(d1, d2) singular values, descending.
    const std::vector<double>& sigma() const noexcept { return sigma_; }

    /// sum_{i < k} sigma_i u_i v_i^T; k is clamped to the number of values.
    Matrix truncate(std::size_t k) const;

private:
    Matrix u_;
    std::vector<double> sigma_;
    Matrix v_;
};

/// Full SVD of the materialized effective update.
OracleSvd oracle_svd(const AdapterLayer& layer);

/// Singular values only of the materialized update (cheaper).
std::vector<double> oracle_sigma(const AdapterLayer& layer);

/// Singular values of an arbitrary matrix.
std::vector<double> oracle_sigma(const Matrix& m);

/// sqrt(sum (x_ij - y_ij)^2). Throws DimensionError on a shape mismatch.
double frobenius_distance(const Matrix& x, const Matrix& y);

} // namespace para
