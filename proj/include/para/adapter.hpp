// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "para/dtype.hpp"
#include "para/layer_key.hpp"
#include "para/matrix.hpp"

namespace para {

/// One LoRA pair. The effective weight update is scale * b * a.
struct AdapterLayer {
    LayerKey key;
    Matrix b;  ///< d1 x rank
    Matrix a;  ///< rank x d2
    double scale = 1.0;
    Dtype storage_dtype = Dtype::f32;

    std::size_t rank() const noexcept { return b.cols(); }
    std::size_t d1() const noexcept { return b.rows(); }
    std::size_t d2() const noexcept { return a.cols(); }

    /// Throws PairingError when b.cols() != a.rows().
    void validate() const;
};

/// A tensor that was present in the checkpoint but not turned into a layer.
struct SkippedTensor {
    std::string name;
    std::string reason;
};

/// A full adapter checkpoint. Layers are kept sorted by key.
struct AdapterSet {
    std::vector<AdapterLayer> layers;
    int n_layers = 0;           ///< N, the largest layer_index
    std::size_t init_rank = 0;  ///< config "r"
    double alpha = 0.0;         ///< config "lora_alpha"
    nlohmann::json config = nlohmann::json::object();  ///< raw adapter_config.json, passed through on save
    std::vector<SkippedTensor> skipped;

    /// Sum of ranks over layers.
    std::size_t total_rank() const noexcept;
    /// Sum of rank * (d1 + d2) over layers.
    std::size_t parameter_count() const noexcept;
};

/// Sorts layers by key and fills n_layers; throws PairingError on duplicate keys
/// and on layers violating AdapterLayer::validate.
void normalize(AdapterSet& set);

} // namespace para
