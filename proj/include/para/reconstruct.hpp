// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "para/adapter.hpp"
#include "para/allocation.hpp"
#include "para/report.hpp"
#include "para/spectral.hpp"

namespace para {

/// A pruned layer. Factors hold the effective (scale-folded) update and are
/// absent when every position was dropped.
struct CompressedLayer {
    LayerKey key;
    std::optional<Matrix> b_hat;  ///< d1 x new_rank
    std::optional<Matrix> a_hat;  ///< new_rank x d2
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    std::size_t original_rank = 0;
    std::size_t new_rank = 0;
    double frobenius_error = 0.0;  ///< sqrt of the dropped sigma^2
    double retained_energy = 1.0;
};

/// Keeps the masked singular triplets, compacts away the rest (and any kept
/// exact zeros), and splits each kept sigma symmetrically:
/// b_hat = U_k sqrt(S_k), a_hat = sqrt(S_k) V_k^T.
/// Throws MaskLengthError when the mask length differs from the rank.
CompressedLayer prune_and_reconstruct(const SpectralDecomposition& decomp, const std::vector<bool>& mask);

struct CompressionResult {
    std::vector<CompressedLayer> layers;
    CompressionReport report;
    AdapterSet adapter;  ///< layers of rank >= 1 with scale 1, ready to save
};

/// Applies `plan` to every layer. `decomps` must be decompose_all(set).
/// Throws PlanMismatchError when the plan's keys differ from the set's.
CompressionResult compress(const AdapterSet& set, std::span<const SpectralDecomposition> decomps,
                           const KeepPlan& plan, unsigned threads = 1);

/// Convenience overload that decomposes first.
CompressionResult compress(const AdapterSet& set, const KeepPlan& plan, unsigned threads = 1);

} // namespace para
