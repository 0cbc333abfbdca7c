// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace para {

/// Adapted projection kinds; declaration order is the canonical tie order.
enum class LayerType { q, k, v, o, m1, m2 };

inline constexpr std::array<LayerType, 6> kAllLayerTypes = {LayerType::q,  LayerType::k,  LayerType::v,
                                                            LayerType::o,  LayerType::m1, LayerType::m2};

std::string_view to_string(LayerType t) noexcept;
std::optional<LayerType> parse_layer_type(std::string_view s) noexcept;

/// Identity of one adapter pair. Ordering and equality use only
/// (layer_index, layer_type); module_path is carried for naming.
struct LayerKey {
    int layer_index = 1;  ///< 1-based transformer block
    LayerType layer_type = LayerType::q;
    std::string module_path;

    friend bool operator==(const LayerKey& a, const LayerKey& b) noexcept {
        return a.layer_index == b.layer_index && a.layer_type == b.layer_type;
    }
    friend std::strong_ordering operator<=>(const LayerKey& a, const LayerKey& b) noexcept {
        if (auto c = a.layer_index <=> b.layer_index; c != 0) return c;
        return static_cast<int>(a.layer_type) <=> static_cast<int>(b.layer_type);
    }
};

/// "<index>.<type>", e.g. "3.m1".
std::string describe(const LayerKey& key);

/// Maps dotted module-path suffixes to layer types. The longest matching
/// suffix (on component boundaries) wins.
class LayerTypeMap {
public:
    /// q_proj/k_proj/v_proj/o_proj, up_proj|fc1 -> m1, down_proj|fc2 -> m2,
    /// plus BERT/ViT style query/key/value/attention.output.dense/
    /// intermediate.dense/output.dense.
    static LayerTypeMap defaults();

    /// Parses "suffix=type,suffix=type". Throws DomainError on bad entries.
    static LayerTypeMap parse(std::string_view text);

    void set(std::string suffix, LayerType type);
    std::optional<LayerType> classify(std::string_view module_path) const;

    const std::vector<std::pair<std::string, LayerType>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, LayerType>> entries_;
};

/// First all-digit dotted component of the path, converted to 1-based.
std::optional<int> parse_layer_index(std::string_view module_path);

} // namespace para
