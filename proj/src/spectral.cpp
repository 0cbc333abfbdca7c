// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/spectral.hpp"

#include <algorithm>
#include <optional>

#include "para/errors.hpp"
#include "para/linalg.hpp"
#include "para/parallel.hpp"

namespace para {

double SpectralDecomposition::energy() const noexcept {
    double e = 0.0;
    for (double s : sigma) e += s * s;
    return e;
}

SpectralDecomposition decompose_layer(const AdapterLayer& layer) {
    layer.validate();
    const std::size_t r = layer.rank();

    QrFactors qb = householder_qr(layer.b);
    QrFactors qa = householder_qr(layer.a.transposed());

    // Interaction matrix R_B * R_A^T.
    Matrix interaction(r, r);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            double s = 0.0;
            // Both factors are upper triangular: only k >= max(i, j) contributes.
            for (std::size_t k = std::max(i, j); k < r; ++k) s += qb.r_upper(i, k) * qa.r_upper(j, k);
            interaction(i, j) = s;
        }
    }

    SvdFactors inner = svd_square(interaction);
    SpectralDecomposition out{
        .key = layer.key,
        .u = matmul(qb.q, inner.u),
        .sigma = std::move(inner.sigma),
        .v = matmul(qa.q, inner.v),
    };
    const double scale = std::abs(layer.scale);
    for (double& s : out.sigma) s *= scale;
    if (layer.scale < 0.0) {
        for (double& x : out.u.data()) x = -x;
    }
    return out;
}

std::vector<SpectralDecomposition> decompose_all(const AdapterSet& set, unsigned threads) {
    std::vector<std::optional<SpectralDecomposition>> slots(set.layers.size());
    parallel_for(set.layers.size(), threads, [&](std::size_t i) { slots[i] = decompose_layer(set.layers[i]); });
    std::vector<SpectralDecomposition> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

double GlobalSpectrum::total_energy() const noexcept {
    double e = 0.0;
    for (const auto& entry : entries) e += entry.value * entry.value;
    return e;
}

GlobalSpectrum pool_spectrum(std::span<const SpectralDecomposition> decomps) {
    if (decomps.empty()) throw EmptyInputError("cannot pool the spectrum of zero layers");
    GlobalSpectrum pooled;
    for (std::size_t l = 0; l < decomps.size(); ++l) {
        const auto& d = decomps[l];
        pooled.layer_ranks.push_back(d.original_rank());
        for (std::size_t j = 0; j < d.sigma.size(); ++j) pooled.entries.push_back({d.sigma[j], d.key, j, l});
    }
    std::stable_sort(pooled.entries.begin(), pooled.entries.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.key != b.key) return a.key < b.key;
        if (a.position != b.position) return a.position < b.position;
        return a.layer < b.layer;
    });
    return pooled;
}

} // namespace para
