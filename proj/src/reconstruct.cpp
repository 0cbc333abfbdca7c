// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/reconstruct.hpp"

#include <cmath>
#include <string>

#include "para/errors.hpp"
#include "para/parallel.hpp"

namespace para {

CompressedLayer prune_and_reconstruct(const SpectralDecomposition& decomp, const std::vector<bool>& mask) {
    const std::size_t r = decomp.original_rank();
    if (mask.size() != r) {
        throw MaskLengthError("mask for layer " + describe(decomp.key) + " has length " + std::to_string(mask.size()) +
                              ", expected " + std::to_string(r));
    }

    CompressedLayer out;
    out.key = decomp.key;
    out.d1 = decomp.d1();
    out.d2 = decomp.d2();
    out.original_rank = r;

    std::vector<std::size_t> kept;
    double kept_energy = 0.0;
    double dropped_energy = 0.0;
    for (std::size_t j = 0; j < r; ++j) {
        const double energy = decomp.sigma[j] * decomp.sigma[j];
        if (mask[j] && decomp.sigma[j] > 0.0) {
            kept.push_back(j);
            kept_energy += energy;
        } else {
            dropped_energy += energy;
        }
    }
    out.new_rank = kept.size();
    out.frobenius_error = std::sqrt(dropped_energy);
    const double total = kept_energy + dropped_energy;
    out.retained_energy = total > 0.0 ? kept_energy / total : 1.0;
    if (kept.empty()) return out;

    Matrix b(out.d1, kept.size());
    Matrix a(kept.size(), out.d2);
    for (std::size_t c = 0; c < kept.size(); ++c) {
        const std::size_t j = kept[c];
        const double root = std::sqrt(decomp.sigma[j]);
        for (std::size_t i = 0; i < out.d1; ++i) b(i, c) = decomp.u(i, j) * root;
        for (std::size_t i = 0; i < out.d2; ++i) a(c, i) = decomp.v(i, j) * root;
    }
    out.b_hat = std::move(b);
    out.a_hat = std::move(a);
    return out;
}

CompressionResult compress(const AdapterSet& set, std::span<const SpectralDecomposition> decomps,
                           const KeepPlan& plan, unsigned threads) {
    if (decomps.size() != set.layers.size()) {
        throw PlanMismatchError("expected " + std::to_string(set.layers.size()) + " decompositions, got " +
                                std::to_string(decomps.size()));
    }
    if (plan.keep.size() != set.layers.size()) {
        throw PlanMismatchError("plan covers " + std::to_string(plan.keep.size()) + " layers, adapter has " +
                                std::to_string(set.layers.size()));
    }
    std::vector<const std::vector<bool>*> masks(set.layers.size());
    for (std::size_t i = 0; i < set.layers.size(); ++i) {
        const auto& key = set.layers[i].key;
        if (!(decomps[i].key == key)) throw PlanMismatchError("decomposition order differs from the adapter's");
        const auto it = plan.keep.find(key);
        if (it == plan.keep.end()) throw PlanMismatchError("plan has no mask for layer " + key.module_path);
        masks[i] = &it->second;
    }

    CompressionResult result;
    result.layers.resize(set.layers.size());
    parallel_for(set.layers.size(), threads,
                 [&](std::size_t i) { result.layers[i] = prune_and_reconstruct(decomps[i], *masks[i]); });

    auto& report = result.report;
    report.policy = plan.policy;
    if (plan.has_threshold()) report.threshold = plan.threshold;
    report.n_layers = set.n_layers;
    report.skipped = set.skipped;
    report.rank_matrix.assign(static_cast<std::size_t>(std::max(0, set.n_layers)),
                              std::vector<std::optional<std::size_t>>(kAllLayerTypes.size()));

    auto& totals = report.totals;
    double kept_energy = 0.0;
    for (std::size_t i = 0; i < set.layers.size(); ++i) {
        const auto& c = result.layers[i];
        const double energy = decomps[i].energy();
        report.per_layer.push_back(
            {c.key, c.d1, c.d2, c.original_rank, c.new_rank, c.retained_energy, c.frobenius_error});
        totals.b_init += c.original_rank;
        totals.kept_total += c.new_rank;
        totals.parameter_count_before += c.original_rank * (c.d1 + c.d2);
        totals.parameter_count_after += c.new_rank * (c.d1 + c.d2);
        totals.total_energy += energy;
        totals.pruned_energy += c.frobenius_error * c.frobenius_error;
        kept_energy += energy * c.retained_energy;
        if (c.key.layer_index >= 1 && c.key.layer_index <= set.n_layers) {
            report.rank_matrix[static_cast<std::size_t>(c.key.layer_index - 1)]
                              [static_cast<std::size_t>(c.key.layer_type)] = c.new_rank;
        }
        if (c.new_rank == 0) report.dropped_layers.push_back(c.key.module_path);
    }
    totals.reduction_fraction =
        totals.parameter_count_before > 0
            ? 1.0 - static_cast<double>(totals.parameter_count_after) / static_cast<double>(totals.parameter_count_before)
            : 0.0;
    totals.retained_energy_fraction = totals.total_energy > 0.0 ? kept_energy / totals.total_energy : 1.0;
    totals.average_rank =
        set.layers.empty() ? 0.0 : static_cast<double>(totals.kept_total) / static_cast<double>(set.layers.size());

    auto& out = result.adapter;
    out.init_rank = set.init_rank;
    out.alpha = set.alpha;
    out.config = set.config;
    for (std::size_t i = 0; i < set.layers.size(); ++i) {
        auto& c = result.layers[i];
        if (c.new_rank == 0) continue;
        out.layers.push_back({.key = c.key,
                              .b = *c.b_hat,
                              .a = *c.a_hat,
                              .scale = 1.0,
                              .storage_dtype = set.layers[i].storage_dtype});
    }
    out.n_layers = set.n_layers;
    return result;
}

CompressionResult compress(const AdapterSet& set, const KeepPlan& plan, unsigned threads) {
    const auto decomps = decompose_all(set, threads);
    return compress(set, decomps, plan, threads);
}

} // namespace para
