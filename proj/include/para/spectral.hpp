// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "para/adapter.hpp"
#include "para/layer_key.hpp"
#include "para/matrix.hpp"

namespace para {

/// Compact SVD of one layer's effective update: u * diag(sigma) * v^T equals
/// scale * B * A, with sigma descending and already multiplied by the scale.
struct SpectralDecomposition {
    LayerKey key;
    Matrix u;                   ///< d1 x r
    std::vector<double> sigma;  ///< length r
    Matrix v;                   ///< d2 x r

    std::size_t original_rank() const noexcept { return sigma.size(); }
    std::size_t d1() const noexcept { return u.rows(); }
    std::size_t d2() const noexcept { return v.rows(); }
    double energy() const noexcept;  ///< sum of sigma^2
};

/// Decomposes B * A through QR(B) and QR(A^T): the r x r interaction matrix
/// R_B * R_A^T carries the whole spectrum, and the d1 x d2 product is never
/// formed. Cost O((d1 + d2) r^2 + r^3).
SpectralDecomposition decompose_layer(const AdapterLayer& layer);

/// Decomposes every layer, fanning out over `threads` workers (0 = hardware
/// concurrency). The result is identical for every thread count.
std::vector<SpectralDecomposition> decompose_all(const AdapterSet& set, unsigned threads = 1);

/// One pooled singular value with its provenance.
struct SpectrumEntry {
    double value = 0.0;
    LayerKey key;
    std::size_t position = 0;  ///< index within the layer's sigma
    std::size_t layer = 0;     ///< index into the decomposition list
};

/// All singular values of all layers, sorted descending; ties go to the lower
/// (layer_index, layer_type, position).
struct GlobalSpectrum {
    std::vector<SpectrumEntry> entries;
    std::vector<std::size_t> layer_ranks;  ///< original rank per decomposition

    std::size_t size() const noexcept { return entries.size(); }
    /// Sum of sigma^2 accumulated in descending order.
    double total_energy() const noexcept;
};

/// Throws EmptyInputError on an empty collection.
GlobalSpectrum pool_spectrum(std::span<const SpectralDecomposition> decomps);

} // namespace para
