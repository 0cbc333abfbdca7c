// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "para/errors.hpp"
#include "para/linalg.hpp"

namespace para {

namespace {

// Box-Muller over raw mt19937_64 output so the stream does not depend on the
// standard library's distribution implementations.
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

Matrix random_orthonormal(std::size_t rows, std::size_t cols, Gaussian& rng) {
    Matrix g(rows, cols);
    for (double& x : g.data()) x = rng();
    return householder_qr(g).q;
}

double parse_number(std::string_view s, std::string_view what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw DomainError("profile " + std::string(what) + " '" + std::string(s) + "' is not a number");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto at = text.find(sep, start);
        parts.push_back(text.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
        if (at == std::string_view::npos) break;
        start = at + 1;
    }
    return parts;
}

} // namespace

SpectrumProfile parse_profile(std::string_view text) {
    const auto parts = split(text, ':');
    const auto name = parts[0];
    if (name == "power_law" && parts.size() == 2) {
        const double decay = parse_number(parts[1], "decay");
        if (!(decay > 0.0 && decay <= 1.0)) throw DomainError("power_law decay must lie in (0, 1]");
        return PowerLaw{decay};
    }
    if (name == "flat" && parts.size() <= 2) {
        const double value = parts.size() == 2 ? parse_number(parts[1], "value") : 1.0;
        if (value < 0.0) throw DomainError("flat value must be non-negative");
        return Flat{value};
    }
    if (name == "bimodal" && parts.size() == 4) {
        const double count = parse_number(parts[1], "big_count");
        if (count < 0.0 || count != std::floor(count)) throw DomainError("bimodal big_count must be a whole number");
        Bimodal b{static_cast<std::size_t>(count), parse_number(parts[2], "big_val"),
                  parse_number(parts[3], "small_val")};
        if (b.big_val < 0.0 || b.small_val < 0.0) throw DomainError("bimodal values must be non-negative");
        return b;
    }
    throw DomainError("unknown spectrum profile '" + std::string(text) +
                      "'; expected power_law:<decay>, flat[:<value>] or bimodal:<count>:<big>:<small>");
}

std::vector<double> planted_spectrum(const SpectrumProfile& profile, std::size_t rank, bool big_layer) {
    std::vector<double> sigma(rank);
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            for (std::size_t i = 0; i < rank; ++i) {
                if constexpr (std::is_same_v<P, PowerLaw>) {
                    sigma[i] = std::pow(p.decay, static_cast<double>(i));
                } else if constexpr (std::is_same_v<P, Flat>) {
                    sigma[i] = p.value;
                } else {
                    sigma[i] = big_layer ? p.big_val : p.small_val;
                }
            }
        },
        profile);
    return sigma;
}

std::string synthetic_module_path(int block, LayerType type) {
    std::string path = "base_model.model.model.layers." + std::to_string(block) + ".";
    switch (type) {
        case LayerType::q: return path + "self_attn.q_proj";
        case LayerType::k: return path + "self_attn.k_proj";
        case LayerType::v: return path + "self_attn.v_proj";
        case LayerType::o: return path + "self_attn.o_proj";
        case LayerType::m1: return path + "mlp.up_proj";
        case LayerType::m2: return path + "mlp.down_proj";
    }
    return path;
}

AdapterSet generate_synthetic(const SynthParams& params) {
    if (params.n_layers <= 0 || params.rank == 0 || params.d1 == 0 || params.d2 == 0 || params.types.empty()) {
        throw DimensionError("synthetic adapter needs positive layers, rank, d1, d2 and at least one type");
    }
    if (params.rank > std::min(params.d1, params.d2)) {
        throw DimensionError("rank " + std::to_string(params.rank) + " exceeds min(d1, d2) = " +
                             std::to_string(std::min(params.d1, params.d2)));
    }
    std::vector<LayerType> types = params.types;
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());

    const std::size_t count = static_cast<std::size_t>(params.n_layers) * types.size();
    Gaussian rng(params.seed);

    std::vector<bool> big(count, false);
    if (const auto* bimodal = std::get_if<Bimodal>(&params.profile)) {
        if (bimodal->big_count > count) {
            throw DimensionError("bimodal big_count " + std::to_string(bimodal->big_count) + " exceeds layer count " +
                                 std::to_string(count));
        }
        // Partial Fisher-Yates on layer slots.
        std::vector<std::size_t> slots(count);
        for (std::size_t i = 0; i < count; ++i) slots[i] = i;
        for (std::size_t i = 0; i < bimodal->big_count; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (count - i));
            std::swap(slots[i], slots[j]);
            big[slots[i]] = true;
        }
    }

    AdapterSet set;
    set.init_rank = params.rank;
    set.alpha = params.alpha > 0.0 ? params.alpha : static_cast<double>(params.rank);
    const double scale = set.alpha / static_cast<double>(params.rank);
    set.config = {
        {"peft_type", "LORA"},
        {"r", params.rank},
        {"lora_alpha", set.alpha},
        {"bias", "none"},
    };

    std::size_t slot = 0;
    for (int block = 0; block < params.n_layers; ++block) {
        for (LayerType type : types) {
            const auto sigma = planted_spectrum(params.profile, params.rank, big[slot++]);
            Matrix u = random_orthonormal(params.d1, params.rank, rng);
            Matrix v = random_orthonormal(params.d2, params.rank, rng);
            Matrix b(params.d1, params.rank);
            Matrix a(params.rank, params.d2);
            for (std::size_t j = 0; j < params.rank; ++j) {
                const double root = std::sqrt(sigma[j] / scale);
                for (std::size_t i = 0; i < params.d1; ++i) b(i, j) = u(i, j) * root;
                for (std::size_t i = 0; i < params.d2; ++i) a(j, i) = v(i, j) * root;
            }
            set.layers.push_back({.key = {block + 1, type, synthetic_module_path(block, type)},
                                  .b = std::move(b),
                                  .a = std::move(a),
                                  .scale = scale,
                                  .storage_dtype = params.dtype});
        }
    }
    normalize(set);
    return set;
}

} // namespace para
