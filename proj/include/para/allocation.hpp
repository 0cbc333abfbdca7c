// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "para/layer_key.hpp"
#include "para/spectral.hpp"

namespace para {

/// gamma and epsilon are the budget and energy policies; local and topk are
/// the uniform-rank and reverse ablations; threshold applies a given cutoff.
enum class PolicyKind { gamma, epsilon, local, topk, threshold };

std::string_view to_string(PolicyKind k) noexcept;

/// A rank-selection policy and its parameter.
struct Policy {
    PolicyKind kind = PolicyKind::gamma;
    double value = 0.25;

    /// Throws DomainError when the value is outside the policy's range:
    /// gamma/epsilon in (0, 1], local/topk a non-negative whole number,
    /// threshold non-negative.
    void validate() const;
    /// "gamma-0.25", "local-4": stable names for output directories.
    std::string label() const;
};

/// Throws DomainError for unknown names.
PolicyKind parse_policy_kind(std::string_view name);

/// Per-layer keep masks over singular-value positions.
struct KeepPlan {
    Policy policy;
    /// Global cutoff; NaN when no single threshold describes the plan
    /// (local, top-k, or an empty gamma budget).
    double threshold = std::numeric_limits<double>::quiet_NaN();
    std::map<LayerKey, std::vector<bool>> keep;
    std::size_t kept_total = 0;
    double retained_energy_fraction = 0.0;

    /// Sum of sigma^2 over dropped positions.
    double pruned_energy = 0.0;

    bool has_threshold() const noexcept { return !std::isnan(threshold); }
};

/// round-half-up(gamma * B_init)
std::size_t gamma_budget(double gamma, std::size_t b_init);

/// Keeps exactly round-half-up(gamma * B_init) values: the head of the pooled
/// order. threshold is the last kept value. Throws DomainError for gamma
/// outside (0, 1].
KeepPlan threshold_gamma(const GlobalSpectrum& spectrum, double gamma);

/// Keeps the shortest head of the pooled order whose sigma^2 reaches
/// epsilon * E_total; zero values are never kept. Throws DomainError for
/// epsilon outside (0, 1] and DegenerateError when every value is zero.
KeepPlan threshold_epsilon(const GlobalSpectrum& spectrum, double epsilon);

/// Keeps every value >= tau (the inclusive mask, no budget enforcement).
KeepPlan threshold_fixed(const GlobalSpectrum& spectrum, double tau);

/// Keeps the min(r_local, r) largest values of every layer independently.
KeepPlan local_uniform_plan(std::span<const SpectralDecomposition> decomps, std::int64_t r_local);

/// Drops the k globally largest values and keeps the rest. Throws DomainError
/// unless 0 <= k <= B_init.
KeepPlan drop_top_k_plan(std::span<const SpectralDecomposition> decomps, std::int64_t k);

/// Dispatches on policy.kind. `spectrum` must be pool_spectrum(decomps).
KeepPlan make_plan(const Policy& policy, std::span<const SpectralDecomposition> decomps,
                   const GlobalSpectrum& spectrum);

} // namespace para
