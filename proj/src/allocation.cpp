// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "para/errors.hpp"

namespace para {

namespace {

// Marks the first `count` pooled entries as kept and fills in the totals.
KeepPlan head_plan(const GlobalSpectrum& spectrum, std::size_t count, Policy policy) {
    KeepPlan plan;
    plan.policy = policy;
    std::vector<std::vector<bool>> masks;
    masks.reserve(spectrum.layer_ranks.size());
    for (std::size_t r : spectrum.layer_ranks) masks.emplace_back(r, false);

    double kept = 0.0;
    double dropped = 0.0;
    for (std::size_t i = 0; i < spectrum.entries.size(); ++i) {
        const auto& e = spectrum.entries[i];
        const double energy = e.value * e.value;
        if (i < count) {
            masks[e.layer][e.position] = true;
            kept += energy;
        } else {
            dropped += energy;
        }
    }
    plan.kept_total = count;
    const double total = spectrum.total_energy();
    plan.retained_energy_fraction = total > 0.0 ? kept / total : 1.0;
    plan.pruned_energy = dropped;

    std::vector<const LayerKey*> keys(spectrum.layer_ranks.size(), nullptr);
    for (const auto& e : spectrum.entries) keys[e.layer] = &e.key;
    for (std::size_t l = 0; l < masks.size(); ++l) plan.keep.emplace(*keys[l], std::move(masks[l]));
    return plan;
}

std::int64_t whole_value(const Policy& p) { return static_cast<std::int64_t>(p.value); }

} // namespace

std::string_view to_string(PolicyKind k) noexcept {
    switch (k) {
        case PolicyKind::gamma: return "gamma";
        case PolicyKind::epsilon: return "epsilon";
        case PolicyKind::local: return "local";
        case PolicyKind::topk: return "topk";
        case PolicyKind::threshold: return "threshold";
    }
    return "?";
}

PolicyKind parse_policy_kind(std::string_view name) {
    for (PolicyKind k : {PolicyKind::gamma, PolicyKind::epsilon, PolicyKind::local, PolicyKind::topk,
                         PolicyKind::threshold}) {
        if (to_string(k) == name) return k;
    }
    throw DomainError("unknown policy '" + std::string(name) + "'; expected gamma, epsilon, local, topk or threshold");
}

void Policy::validate() const {
    const std::string name(to_string(kind));
    if (!std::isfinite(value)) throw DomainError(name + " value must be finite");
    switch (kind) {
        case PolicyKind::gamma:
        case PolicyKind::epsilon:
            if (!(value > 0.0 && value <= 1.0)) {
                throw DomainError(name + " must lie in (0, 1], got " + std::to_string(value));
            }
            break;
        case PolicyKind::local:
        case PolicyKind::topk:
            if (value < 0.0 || value != std::floor(value) || value > 9.0e15) {
                throw DomainError(name + " value must be a non-negative whole number, got " + std::to_string(value));
            }
            break;
        case PolicyKind::threshold:
            if (value < 0.0) throw DomainError("threshold must be non-negative");
            break;
    }
}

std::string Policy::label() const {
    std::ostringstream os;
    os.precision(15);
    os << to_string(kind) << '-' << value;
    return os.str();
}

std::size_t gamma_budget(double gamma, std::size_t b_init) {
    const double target = std::floor(gamma * static_cast<double>(b_init) + 0.5);
    return std::min(b_init, static_cast<std::size_t>(std::max(0.0, target)));
}

KeepPlan threshold_gamma(const GlobalSpectrum& spectrum, double gamma) {
    const Policy policy{PolicyKind::gamma, gamma};
    policy.validate();
    if (spectrum.entries.empty()) throw EmptyInputError("spectrum is empty");
    const std::size_t budget = gamma_budget(gamma, spectrum.size());
    KeepPlan plan = head_plan(spectrum, budget, policy);
    if (budget > 0) plan.threshold = spectrum.entries[budget - 1].value;
    return plan;
}

KeepPlan threshold_epsilon(const GlobalSpectrum& spectrum, double epsilon) {
    const Policy policy{PolicyKind::epsilon, epsilon};
    policy.validate();
    if (spectrum.entries.empty()) throw EmptyInputError("spectrum is empty");
    const double total = spectrum.total_energy();
    if (!(total > 0.0)) throw DegenerateError("every singular value is zero; energy targets are undefined");

    const double target = epsilon * total;
    double cumulative = 0.0;
    std::size_t count = 0;
    for (const auto& e : spectrum.entries) {
        if (e.value <= 0.0) break;
        cumulative += e.value * e.value;
        ++count;
        if (cumulative >= target) break;
    }
    KeepPlan plan = head_plan(spectrum, count, policy);
    plan.threshold = spectrum.entries[count - 1].value;
    return plan;
}

KeepPlan threshold_fixed(const GlobalSpectrum& spectrum, double tau) {
    Policy{PolicyKind::threshold, tau}.validate();
    if (spectrum.entries.empty()) throw EmptyInputError("spectrum is empty");
    std::size_t count = 0;
    while (count < spectrum.size() && spectrum.entries[count].value >= tau) ++count;
    KeepPlan plan = head_plan(spectrum, count, Policy{PolicyKind::threshold, tau});
    plan.threshold = tau;
    return plan;
}

KeepPlan local_uniform_plan(std::span<const SpectralDecomposition> decomps, std::int64_t r_local) {
    if (r_local < 0) throw DomainError("local rank must be non-negative");
    KeepPlan plan;
    plan.policy = {PolicyKind::local, static_cast<double>(r_local)};
    double kept = 0.0;
    double total = 0.0;
    for (const auto& d : decomps) {
        const std::size_t r = d.original_rank();
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(r_local), r);
        std::vector<bool> mask(r, false);
        for (std::size_t j = 0; j < r; ++j) {
            const double energy = d.sigma[j] * d.sigma[j];
            total += energy;
            if (j < k) {
                mask[j] = true;
                kept += energy;
            } else {
                plan.pruned_energy += energy;
            }
        }
        plan.kept_total += k;
        plan.keep.emplace(d.key, std::move(mask));
    }
    plan.retained_energy_fraction = total > 0.0 ? kept / total : 1.0;
    return plan;
}

KeepPlan drop_top_k_plan(std::span<const SpectralDecomposition> decomps, std::int64_t k) {
    const GlobalSpectrum spectrum = pool_spectrum(decomps);
    if (k < 0 || static_cast<std::uint64_t>(k) > spectrum.size()) {
        throw DomainError("topk must lie in [0, " + std::to_string(spectrum.size()) + "], got " + std::to_string(k));
    }
    const auto drop = static_cast<std::size_t>(k);
    // Keeping the tail is the complement of keeping the head.
    KeepPlan plan = head_plan(spectrum, drop, Policy{PolicyKind::topk, static_cast<double>(k)});
    for (auto& [key, mask] : plan.keep) mask.flip();

    double head = 0.0;
    for (std::size_t i = 0; i < drop; ++i) head += spectrum.entries[i].value * spectrum.entries[i].value;
    const double tail = plan.pruned_energy;
    const double total = spectrum.total_energy();
    plan.pruned_energy = head;
    plan.kept_total = spectrum.size() - drop;
    plan.retained_energy_fraction = total > 0.0 ? tail / total : 1.0;
    return plan;
}

KeepPlan make_plan(const Policy& policy, std::span<const SpectralDecomposition> decomps,
                   const GlobalSpectrum& spectrum) {
    policy.validate();
    switch (policy.kind) {
        case PolicyKind::gamma: return threshold_gamma(spectrum, policy.value);
        case PolicyKind::epsilon: return threshold_epsilon(spectrum, policy.value);
        case PolicyKind::local: return local_uniform_plan(decomps, whole_value(policy));
        case PolicyKind::topk: return drop_top_k_plan(decomps, whole_value(policy));
        case PolicyKind::threshold: return threshold_fixed(spectrum, policy.value);
    }
    throw DomainError("unhandled policy");
}

} // namespace para
