// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/adapter_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "para/errors.hpp"
#include "para/safetensors.hpp"

namespace para {

namespace {

using json = nlohmann::json;

constexpr std::string_view kWrapperPrefix = "base_model.model.";

struct LoraName {
    std::string prefix;
    bool is_a = false;
};

// "<prefix>.lora_A.weight" or "<prefix>.lora_A.<adapter>.weight".
std::optional<LoraName> split_lora_name(const std::string& name) {
    constexpr std::string_view suffix = ".weight";
    if (!std::string_view(name).ends_with(suffix)) return std::nullopt;
    const std::string_view stem = std::string_view(name).substr(0, name.size() - suffix.size());
    for (bool is_a : {true, false}) {
        const std::string marker = is_a ? ".lora_A" : ".lora_B";
        const auto at = stem.rfind(marker);
        if (at == std::string_view::npos || at == 0) continue;
        const std::string_view rest = stem.substr(at + marker.size());
        if (!rest.empty() && (rest[0] != '.' || rest.find('.', 1) != std::string_view::npos || rest.size() == 1)) {
            continue;
        }
        return LoraName{std::string(stem.substr(0, at)), is_a};
    }
    return std::nullopt;
}

// Longest key that matches the module path on a component boundary.
const json* match_pattern(const json& patterns, const std::string& module_path) {
    if (!patterns.is_object()) return nullptr;
    const json* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [key, value] : patterns.items()) {
        if (key.empty() || key.size() > module_path.size() || key.size() <= best_len) continue;
        if (!std::string_view(module_path).ends_with(key)) continue;
        const std::size_t at = module_path.size() - key.size();
        if (at != 0 && module_path[at - 1] != '.') continue;
        best = &value;
        best_len = key.size();
    }
    return best;
}

double config_number(const json& config, const char* key, double fallback) {
    const auto it = config.find(key);
    if (it == config.end() || it->is_null()) return fallback;
    if (!it->is_number()) throw FormatError(std::string("adapter config field '") + key + "' is not a number");
    return it->get<double>();
}

json read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json config;
    try {
        config = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("malformed " + path.string() + ": " + e.what());
    }
    if (!config.is_object()) throw FormatError(path.string() + " is not a JSON object");
    for (const char* key : {"rank_pattern", "alpha_pattern"}) {
        const auto it = config.find(key);
        if (it == config.end() || it->is_null()) continue;
        if (!it->is_object()) throw FormatError(std::string("adapter config field '") + key + "' is not an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_number()) throw FormatError(std::string(key) + " entry '" + k + "' is not a number");
        }
    }
    return config;
}

Matrix tensor_matrix(const safetensors::File& file, const safetensors::TensorEntry& t, Dtype dtype) {
    auto values = decode_buffer(dtype, file.bytes(t));
    try {
        return Matrix(t.shape[0], t.shape[1], std::move(values));
    } catch (const DomainError&) {
        throw FormatError("tensor '" + t.name + "' contains non-finite values");
    }
}

std::string last_component(const std::string& path) {
    const auto dot = path.rfind('.');
    return dot == std::string::npos ? path : path.substr(dot + 1);
}

} // namespace

void AdapterLayer::validate() const {
    if (b.cols() != a.rows()) {
        throw PairingError("layer " + key.module_path + ": lora_B has " + std::to_string(b.cols()) +
                           " columns but lora_A has " + std::to_string(a.rows()) + " rows");
    }
}

std::size_t AdapterSet::total_rank() const noexcept {
    std::size_t total = 0;
    for (const auto& l : layers) total += l.rank();
    return total;
}

std::size_t AdapterSet::parameter_count() const noexcept {
    std::size_t total = 0;
    for (const auto& l : layers) total += l.rank() * (l.d1() + l.d2());
    return total;
}

void normalize(AdapterSet& set) {
    std::stable_sort(set.layers.begin(), set.layers.end(),
                     [](const AdapterLayer& x, const AdapterLayer& y) { return x.key < y.key; });
    int n = 0;
    for (std::size_t i = 0; i < set.layers.size(); ++i) {
        const auto& layer = set.layers[i];
        layer.validate();
        if (i > 0 && set.layers[i - 1].key == layer.key) {
            throw PairingError("modules " + set.layers[i - 1].key.module_path + " and " + layer.key.module_path +
                               " both map to layer " + describe(layer.key));
        }
        n = std::max(n, layer.key.layer_index);
    }
    set.n_layers = n;
}

std::string pattern_key(const std::string& module_path) {
    if (std::string_view(module_path).starts_with(kWrapperPrefix)) return module_path.substr(kWrapperPrefix.size());
    return module_path;
}

AdapterSet load_adapter(const std::filesystem::path& dir, const LoadOptions& options) {
    AdapterSet set;
    set.config = read_config(dir / kConfigFile);
    const safetensors::File file = safetensors::read(dir / kWeightsFile);

    set.init_rank = static_cast<std::size_t>(std::max(0.0, config_number(set.config, "r", 8.0)));
    set.alpha = config_number(set.config, "lora_alpha", 8.0);
    const bool rslora = set.config.value("use_rslora", false);
    const json rank_pattern = set.config.value("rank_pattern", json::object());
    const json alpha_pattern = set.config.value("alpha_pattern", json::object());

    struct Pair {
        const safetensors::TensorEntry* a = nullptr;
        const safetensors::TensorEntry* b = nullptr;
    };
    std::map<std::string, Pair> pairs;
    for (const auto& t : file.tensors) {
        const auto lora = split_lora_name(t.name);
        if (!lora) {
            set.skipped.push_back({t.name, "not a lora_A/lora_B weight"});
            continue;
        }
        auto& slot = pairs[lora->prefix];
        auto& target = lora->is_a ? slot.a : slot.b;
        if (target) throw PairingError("module " + lora->prefix + " has more than one " + (lora->is_a ? "lora_A" : "lora_B"));
        target = &t;
    }

    for (const auto& [prefix, pair] : pairs) {
        if (!pair.a || !pair.b) {
            throw PairingError("module " + prefix + " has " + (pair.a ? "lora_A without lora_B" : "lora_B without lora_A"));
        }
        if (pair.a->shape.size() != 2 || pair.b->shape.size() != 2) {
            set.skipped.push_back({pair.a->name, "not a 2-D weight adapter"});
            set.skipped.push_back({pair.b->name, "not a 2-D weight adapter"});
            continue;
        }
        const auto dtype_a = dtype_from_safetensors(pair.a->dtype);
        const auto dtype_b = dtype_from_safetensors(pair.b->dtype);
        if (!dtype_a || !dtype_b) {
            throw FormatError("module " + prefix + " uses unsupported dtype " + (dtype_a ? pair.b->dtype : pair.a->dtype));
        }
        if (*dtype_a != *dtype_b) throw FormatError("module " + prefix + " mixes dtypes across lora_A and lora_B");

        const std::uint64_t rank = pair.a->shape[0];
        if (rank == 0 || pair.a->shape[1] == 0 || pair.b->shape[0] == 0) {
            throw PairingError("module " + prefix + " has an empty lora factor");
        }
        if (pair.b->shape[1] != rank) {
            throw PairingError("module " + prefix + ": lora_A is [" + std::to_string(rank) + ", " +
                               std::to_string(pair.a->shape[1]) + "] but lora_B is [" +
                               std::to_string(pair.b->shape[0]) + ", " + std::to_string(pair.b->shape[1]) + "]");
        }

        const auto type = options.layer_map.classify(prefix);
        if (!type) throw UnknownLayerTypeError("module path '" + prefix + "' matches no known layer type");

        if (const json* r = match_pattern(rank_pattern, prefix); r && r->get<double>() != static_cast<double>(rank)) {
            throw FormatError("rank_pattern gives rank " + r->dump() + " for " + prefix + " but tensors have rank " +
                              std::to_string(rank));
        }
        const json* a_override = match_pattern(alpha_pattern, prefix);
        const double layer_alpha = a_override ? a_override->get<double>() : set.alpha;
        const double r = static_cast<double>(rank);

        AdapterLayer layer{
            .key = {parse_layer_index(prefix).value_or(1), *type, prefix},
            .b = tensor_matrix(file, *pair.b, *dtype_b),
            .a = tensor_matrix(file, *pair.a, *dtype_a),
            .scale = rslora ? layer_alpha / std::sqrt(r) : layer_alpha / r,
            .storage_dtype = *dtype_a,
        };
        set.layers.push_back(std::move(layer));
    }

    if (set.layers.empty()) throw FormatError("no LoRA weight pairs found in " + (dir / kWeightsFile).string());
    normalize(set);
    return set;
}

void save_adapter(const AdapterSet& set, const std::filesystem::path& dir) {
    if (set.layers.empty()) throw EmptySetError("adapter set has no layers of rank >= 1 to save");

    std::vector<safetensors::TensorData> tensors;
    json rank_pattern = json::object();
    json alpha_pattern = json::object();
    std::set<std::string> targets;
    std::size_t max_rank = 0;
    for (const auto& layer : set.layers) {
        layer.validate();
        const auto dtype = std::string(safetensors_name(layer.storage_dtype));
        const auto& path = layer.key.module_path;
        tensors.push_back({path + ".lora_A.weight", dtype, {layer.a.rows(), layer.a.cols()},
                           encode_buffer(layer.storage_dtype, layer.a.data())});
        tensors.push_back({path + ".lora_B.weight", dtype, {layer.b.rows(), layer.b.cols()},
                           encode_buffer(layer.storage_dtype, layer.b.data())});
        rank_pattern[pattern_key(path)] = layer.rank();
        alpha_pattern[pattern_key(path)] = layer.scale * static_cast<double>(layer.rank());
        targets.insert(last_component(path));
        max_rank = std::max(max_rank, layer.rank());
    }

    json config = set.config.is_object() ? set.config : json::object();
    config["r"] = set.init_rank > 0 ? set.init_rank : max_rank;
    config["lora_alpha"] = set.alpha;
    config["rank_pattern"] = std::move(rank_pattern);
    config["alpha_pattern"] = std::move(alpha_pattern);
    if (config.contains("use_rslora")) config["use_rslora"] = false;
    if (!config.contains("target_modules")) config["target_modules"] = targets;

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    safetensors::write(dir / kWeightsFile, std::move(tensors), {{"format", "pt"}});
    std::ofstream out(dir / kConfigFile, std::ios::trunc);
    if (!out) throw IoError("cannot open " + (dir / kConfigFile).string() + " for writing");
    out << config.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + (dir / kConfigFile).string());
}

} // namespace para
