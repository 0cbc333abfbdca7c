// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "para/adapter.hpp"
#include "para/allocation.hpp"
#include "para/layer_key.hpp"

namespace para {

struct LayerReport {
    LayerKey key;
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    std::size_t original_rank = 0;
    std::size_t new_rank = 0;
    double retained_energy = 1.0;  ///< fraction of this layer's sigma^2 kept
    double frobenius_error = 0.0;  ///< ||phi - phi_hat||_F
};

struct ReportTotals {
    std::size_t b_init = 0;
    std::size_t kept_total = 0;  ///< sum of new ranks
    std::size_t parameter_count_before = 0;
    std::size_t parameter_count_after = 0;
    double reduction_fraction = 0.0;
    double retained_energy_fraction = 1.0;
    double total_energy = 0.0;
    double pruned_energy = 0.0;
    double average_rank = 0.0;  ///< kept_total / number of layers
};

struct CompressionReport {
    Policy policy;
    std::optional<double> threshold;
    int n_layers = 0;
    std::vector<LayerReport> per_layer;
    ReportTotals totals;
    /// n_layers rows x 6 layer types; nullopt where no adapter exists.
    std::vector<std::vector<std::optional<std::size_t>>> rank_matrix;
    std::vector<std::string> dropped_layers;  ///< module paths pruned to rank 0
    std::vector<SkippedTensor> skipped;
};

nlohmann::json to_json(const CompressionReport& report);
/// One row per layer with a header line.
std::string to_csv(const CompressionReport& report);

/// Reads back the per-layer part of a JSON or CSV report. Throws FormatError.
std::vector<LayerReport> layer_reports_from_json(const nlohmann::json& report);
std::vector<LayerReport> layer_reports_from_csv(const std::string& text);

} // namespace para
