// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/dtype.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "para/errors.hpp"

namespace para {

namespace {

// Generic binary16-style encoder: `mant_bits` stored fraction bits, IEEE bias.
std::uint16_t encode_small(double x, int mant_bits, int exp_bits, const char* name) {
    if (!std::isfinite(x)) throw DomainError(std::string("cannot encode non-finite value as ") + name);
    const std::uint16_t sign = std::signbit(x) ? static_cast<std::uint16_t>(1u << 15) : 0;
    const double a = std::abs(x);
    if (a == 0.0) return sign;

    const int bias = (1 << (exp_bits - 1)) - 1;
    const int min_exp = 1 - bias;  // exponent of the smallest normal
    const int max_field = (1 << exp_bits) - 1;

    int e2 = 0;
    const double frac = std::frexp(a, &e2);  // a = frac * 2^e2, frac in [0.5, 1)
    const int exponent = e2 - 1;

    std::uint32_t bits = 0;
    if (exponent < min_exp) {
        // Subnormal range: integer count of 2^(min_exp - mant_bits) steps.
        const double steps = std::nearbyint(std::ldexp(a, mant_bits - min_exp));
        bits = static_cast<std::uint32_t>(steps);  // a carry into 1<<mant_bits is the smallest normal
    } else {
        double m = std::nearbyint(std::ldexp(frac, mant_bits + 1));  // in [2^mant, 2^(mant+1)]
        int field = exponent + bias;
        if (m >= std::ldexp(1.0, mant_bits + 1)) {
            m = std::ldexp(1.0, mant_bits);
            ++field;
        }
        if (field >= max_field) throw DomainError(std::string("value overflows ") + name);
        bits = (static_cast<std::uint32_t>(field) << mant_bits) |
               (static_cast<std::uint32_t>(m) - (1u << mant_bits));
    }
    return static_cast<std::uint16_t>(sign | bits);
}

double decode_small(std::uint16_t bits, int mant_bits, int exp_bits) noexcept {
    const bool negative = (bits >> 15) & 1u;
    const int bias = (1 << (exp_bits - 1)) - 1;
    const std::uint32_t field = (bits >> mant_bits) & ((1u << exp_bits) - 1);
    const std::uint32_t mant = bits & ((1u << mant_bits) - 1);
    double value = 0.0;
    if (field == 0) {
        value = std::ldexp(static_cast<double>(mant), 1 - bias - mant_bits);
    } else if (field == (1u << exp_bits) - 1) {
        value = mant ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
    } else {
        value = std::ldexp(static_cast<double>(mant | (1u << mant_bits)),
                           static_cast<int>(field) - bias - mant_bits);
    }
    return negative ? -value : value;
}

static_assert(std::endian::native == std::endian::little, "only little-endian hosts are supported");

} // namespace

std::string_view to_string(Dtype d) noexcept {
    switch (d) {
        case Dtype::f32: return "f32";
        case Dtype::f16: return "f16";
        case Dtype::bf16: return "bf16";
    }
    return "?";
}

std::string_view safetensors_name(Dtype d) noexcept {
    switch (d) {
        case Dtype::f32: return "F32";
        case Dtype::f16: return "F16";
        case Dtype::bf16: return "BF16";
    }
    return "?";
}

std::optional<Dtype> parse_dtype(std::string_view s) noexcept {
    for (Dtype d : {Dtype::f32, Dtype::f16, Dtype::bf16}) {
        if (to_string(d) == s) return d;
    }
    return std::nullopt;
}

std::optional<Dtype> dtype_from_safetensors(std::string_view s) noexcept {
    for (Dtype d : {Dtype::f32, Dtype::f16, Dtype::bf16}) {
        if (safetensors_name(d) == s) return d;
    }
    return std::nullopt;
}

std::size_t element_size(Dtype d) noexcept { return d == Dtype::f32 ? 4 : 2; }

std::uint16_t encode_f16(double x) { return encode_small(x, 10, 5, "f16"); }
std::uint16_t encode_bf16(double x) { return encode_small(x, 7, 8, "bf16"); }
double decode_f16(std::uint16_t bits) noexcept { return decode_small(bits, 10, 5); }
double decode_bf16(std::uint16_t bits) noexcept { return decode_small(bits, 7, 8); }

std::vector<double> decode_buffer(Dtype d, std::span<const std::uint8_t> bytes) {
    const std::size_t width = element_size(d);
    if (bytes.size() % width != 0) throw FormatError("tensor byte length is not a multiple of the element size");
    std::vector<double> out(bytes.size() / width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint8_t* p = bytes.data() + i * width;
        if (d == Dtype::f32) {
            float f;
            std::memcpy(&f, p, 4);
            out[i] = f;
        } else {
            std::uint16_t h;
            std::memcpy(&h, p, 2);
            out[i] = d == Dtype::f16 ? decode_f16(h) : decode_bf16(h);
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_buffer(Dtype d, std::span<const double> values) {
    const std::size_t width = element_size(d);
    std::vector<std::uint8_t> out(values.size() * width);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint8_t* p = out.data() + i * width;
        if (d == Dtype::f32) {
            const double x = values[i];
            if (!std::isfinite(x) || std::abs(x) > std::numeric_limits<float>::max()) {
                throw DomainError("value does not fit in f32");
            }
            const float f = static_cast<float>(x);
            std::memcpy(p, &f, 4);
        } else {
            const std::uint16_t h = d == Dtype::f16 ? encode_f16(values[i]) : encode_bf16(values[i]);
            std::memcpy(p, &h, 2);
        }
    }
    return out;
}

double quantize(Dtype d, double x) {
    switch (d) {
        case Dtype::f32: return static_cast<float>(x);
        case Dtype::f16: return decode_f16(encode_f16(x));
        case Dtype::bf16: return decode_bf16(encode_bf16(x));
    }
    return x;
}

} // namespace para
