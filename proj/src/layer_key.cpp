// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/layer_key.hpp"

#include <algorithm>
#include <charconv>

#include "para/errors.hpp"

namespace para {

std::string_view to_string(LayerType t) noexcept {
    switch (t) {
        case LayerType::q: return "q";
        case LayerType::k: return "k";
        case LayerType::v: return "v";
        case LayerType::o: return "o";
        case LayerType::m1: return "m1";
        case LayerType::m2: return "m2";
    }
    return "?";
}

std::optional<LayerType> parse_layer_type(std::string_view s) noexcept {
    for (LayerType t : kAllLayerTypes) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

std::string describe(const LayerKey& key) {
    return std::to_string(key.layer_index) + "." + std::string(to_string(key.layer_type));
}

LayerTypeMap LayerTypeMap::defaults() {
    LayerTypeMap map;
    map.set("q_proj", LayerType::q);
    map.set("k_proj", LayerType::k);
    map.set("v_proj", LayerType::v);
    map.set("o_proj", LayerType::o);
    map.set("out_proj", LayerType::o);
    map.set("up_proj", LayerType::m1);
    map.set("fc1", LayerType::m1);
    map.set("down_proj", LayerType::m2);
    map.set("fc2", LayerType::m2);
    map.set("query", LayerType::q);
    map.set("key", LayerType::k);
    map.set("value", LayerType::v);
    map.set("attention.output.dense", LayerType::o);
    map.set("intermediate.dense", LayerType::m1);
    map.set("output.dense", LayerType::m2);
    return map;
}

LayerTypeMap LayerTypeMap::parse(std::string_view text) {
    LayerTypeMap map;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        const std::string_view item = text.substr(start, end - start);
        if (!item.empty()) {
            const auto eq = item.find('=');
            if (eq == std::string_view::npos || eq == 0) {
                throw DomainError("layer map entry '" + std::string(item) + "' is not suffix=type");
            }
            const auto type = parse_layer_type(item.substr(eq + 1));
            if (!type) throw DomainError("layer map entry '" + std::string(item) + "' names an unknown type");
            map.set(std::string(item.substr(0, eq)), *type);
        }
        start = end + 1;
    }
    if (map.entries_.empty()) throw DomainError("layer map is empty");
    return map;
}

void LayerTypeMap::set(std::string suffix, LayerType type) {
    for (auto& [s, t] : entries_) {
        if (s == suffix) {
            t = type;
            return;
        }
    }
    entries_.emplace_back(std::move(suffix), type);
}

std::optional<LayerType> LayerTypeMap::classify(std::string_view module_path) const {
    std::optional<LayerType> best;
    std::size_t best_len = 0;
    for (const auto& [suffix, type] : entries_) {
        if (suffix.size() > module_path.size() || suffix.size() <= best_len) continue;
        if (!module_path.ends_with(suffix)) continue;
        const std::size_t at = module_path.size() - suffix.size();
        if (at != 0 && module_path[at - 1] != '.') continue;
        best = type;
        best_len = suffix.size();
    }
    return best;
}

std::optional<int> parse_layer_index(std::string_view module_path) {
    std::size_t start = 0;
    while (start <= module_path.size()) {
        const std::size_t end = std::min(module_path.find('.', start), module_path.size());
        const std::string_view part = module_path.substr(start, end - start);
        if (!part.empty() && std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            int value = 0;
            auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
            if (ec == std::errc() && ptr == part.data() + part.size() && value < (1 << 30)) return value + 1;
            return std::nullopt;
        }
        start = end + 1;
    }
    return std::nullopt;
}

} // namespace para
