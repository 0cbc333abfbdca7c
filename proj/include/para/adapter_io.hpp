// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "para/adapter.hpp"

namespace para {

inline constexpr const char* kWeightsFile = "adapter_model.safetensors";
inline constexpr const char* kConfigFile = "adapter_config.json";

struct LoadOptions {
    LayerTypeMap layer_map = LayerTypeMap::defaults();
};

/// Loads `<dir>/adapter_model.safetensors` and `<dir>/adapter_config.json`.
///
/// Each `<prefix>.lora_A.weight` [r, d2] / `<prefix>.lora_B.weight` [d1, r]
/// pair becomes one layer with scale alpha / r, where alpha and r honour the
/// config's `alpha_pattern` / `rank_pattern` and `use_rslora` switches the
/// scale to alpha / sqrt(r). Tensors that are not 2-D LoRA weights are listed
/// in AdapterSet::skipped.
///
/// Throws IoError, FormatError, PairingError or UnknownLayerTypeError.
AdapterSet load_adapter(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Writes the set as a safetensors file plus adapter_config.json. Layers of
/// rank 0 cannot be represented and must already be removed. Every layer gets
/// a `rank_pattern` and an `alpha_pattern` entry with alpha = scale * rank,
/// so loaders reproduce each layer's scale under the plain alpha / r rule.
///
/// Throws EmptySetError when there are no layers, IoError on write failure.
void save_adapter(const AdapterSet& set, const std::filesystem::path& dir);

/// Key used for a module in rank_pattern / alpha_pattern: the module path
/// without PEFT's "base_model.model." wrapper prefix.
std::string pattern_key(const std::string& module_path);

} // namespace para
