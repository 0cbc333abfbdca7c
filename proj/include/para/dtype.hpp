// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace para {

/// Floating-point storage types an adapter tensor may use on disk.
enum class Dtype { f32, f16, bf16 };

std::string_view to_string(Dtype d) noexcept;            ///< "f32", "f16", "bf16"
std::string_view safetensors_name(Dtype d) noexcept;     ///< "F32", "F16", "BF16"
std::optional<Dtype> parse_dtype(std::string_view s) noexcept;              ///< accepts the lower-case names
std::optional<Dtype> dtype_from_safetensors(std::string_view s) noexcept;  ///< accepts the upper-case names
std::size_t element_size(Dtype d) noexcept;

// Round-to-nearest-even encoders straight from double (no intermediate float
// rounding). Throw DomainError when the value overflows the target format.
std::uint16_t encode_f16(double x);
std::uint16_t encode_bf16(double x);
double decode_f16(std::uint16_t bits) noexcept;
double decode_bf16(std::uint16_t bits) noexcept;

/// Little-endian bytes -> doubles. `bytes.size()` must be a multiple of the element size.
std::vector<double> decode_buffer(Dtype d, std::span<const std::uint8_t> bytes);
/// Doubles -> little-endian bytes at the requested precision.
std::vector<std::uint8_t> encode_buffer(Dtype d, std::span<const double> values);

/// Nearest representable value at storage precision.
double quantize(Dtype d, double x);

} // namespace para
