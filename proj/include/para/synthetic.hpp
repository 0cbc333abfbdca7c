// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "para/adapter.hpp"

namespace para {

/// sigma_i = decay^(i-1)
struct PowerLaw {
    double decay = 0.5;
};

/// Every singular value equal to `value`.
struct Flat {
    double value = 1.0;
};

/// `big_count` randomly chosen layers carry all-`big_val` spectra, the rest
/// all-`small_val` spectra.
struct Bimodal {
    std::size_t big_count = 0;
    double big_val = 10.0;
    double small_val = 0.01;
};

using SpectrumProfile = std::variant<PowerLaw, Flat, Bimodal>;

/// "power_law:<decay>", "flat[:<value>]", "bimodal:<big_count>:<big_val>:<small_val>".
/// Throws DomainError.
SpectrumProfile parse_profile(std::string_view text);

struct SynthParams {
    int n_layers = 2;  ///< transformer blocks; each gets one adapter per type
    std::size_t d1 = 64;
    std::size_t d2 = 64;
    std::size_t rank = 16;
    SpectrumProfile profile = PowerLaw{};
    std::uint64_t seed = 0;
    double alpha = 0.0;  ///< lora_alpha; 0 means "equal to rank" (scale 1)
    Dtype dtype = Dtype::f32;
    std::vector<LayerType> types{kAllLayerTypes.begin(), kAllLayerTypes.end()};
};

/// Builds n_layers * |types| adapters whose effective update scale * B * A has
/// exactly the planted spectrum: B = U sqrt(S / scale), A = sqrt(S / scale) V^T
/// with U, V random orthonormal. Deterministic in `seed` on a given platform.
/// Values are double precision; they are rounded to `dtype` only when saved.
/// Throws DimensionError when rank > min(d1, d2) or an extent is zero.
AdapterSet generate_synthetic(const SynthParams& params);

/// Planted singular values of one layer (descending), before any rounding.
std::vector<double> planted_spectrum(const SpectrumProfile& profile, std::size_t rank, bool big_layer);

/// Module path the generator uses for (block, type), 0-based block.
std::string synthetic_module_path(int block, LayerType type);

} // namespace para
