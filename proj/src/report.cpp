// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/report.hpp"

#include <charconv>
#include <iomanip>
#include <sstream>

#include "para/errors.hpp"

namespace para {

namespace {

using json = nlohmann::json;

json key_json(const LayerKey& key) {
    return {{"layer_index", key.layer_index}, {"layer_type", to_string(key.layer_type)}, {"module_path", key.module_path}};
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

template <typename T>
T parse_field(const std::string& s, const char* what) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError(std::string("report field ") + what + " is not a number: '" + s + "'");
    }
    return v;
}

LayerType parse_type_field(const std::string& s) {
    const auto t = parse_layer_type(s);
    if (!t) throw FormatError("report names unknown layer type '" + s + "'");
    return *t;
}

} // namespace

json to_json(const CompressionReport& report) {
    json j;
    j["policy"] = {{"name", to_string(report.policy.kind)}, {"value", report.policy.value}};
    j["threshold"] = report.threshold ? json(*report.threshold) : json(nullptr);
    j["n_layers"] = report.n_layers;

    json types = json::array();
    for (LayerType t : kAllLayerTypes) types.push_back(to_string(t));
    j["layer_types"] = std::move(types);

    json layers = json::array();
    for (const auto& l : report.per_layer) {
        layers.push_back({{"key", key_json(l.key)},
                          {"d1", l.d1},
                          {"d2", l.d2},
                          {"original_rank", l.original_rank},
                          {"new_rank", l.new_rank},
                          {"retained_energy", l.retained_energy},
                          {"frobenius_error", l.frobenius_error}});
    }
    j["per_layer"] = std::move(layers);

    const auto& t = report.totals;
    j["totals"] = {{"b_init", t.b_init},
                   {"kept_total", t.kept_total},
                   {"parameter_count_before", t.parameter_count_before},
                   {"parameter_count_after", t.parameter_count_after},
                   {"reduction_fraction", t.reduction_fraction},
                   {"retained_energy_fraction", t.retained_energy_fraction},
                   {"total_energy", t.total_energy},
                   {"pruned_energy", t.pruned_energy},
                   {"average_rank", t.average_rank}};

    json grid = json::array();
    for (const auto& row : report.rank_matrix) {
        json r = json::array();
        for (const auto& cell : row) r.push_back(cell ? json(*cell) : json(nullptr));
        grid.push_back(std::move(r));
    }
    j["rank_matrix"] = std::move(grid);
    j["dropped_layers"] = report.dropped_layers;

    json skipped = json::array();
    for (const auto& s : report.skipped) skipped.push_back({{"name", s.name}, {"reason", s.reason}});
    j["skipped"] = std::move(skipped);
    return j;
}

std::string to_csv(const CompressionReport& report) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "layer_index,layer_type,module_path,d1,d2,original_rank,new_rank,retained_energy,frobenius_error\n";
    for (const auto& l : report.per_layer) {
        os << l.key.layer_index << ',' << to_string(l.key.layer_type) << ',' << csv_field(l.key.module_path) << ','
           << l.d1 << ',' << l.d2 << ',' << l.original_rank << ',' << l.new_rank << ',' << l.retained_energy << ','
           << l.frobenius_error << '\n';
    }
    return os.str();
}

std::vector<LayerReport> layer_reports_from_json(const json& report) {
    std::vector<LayerReport> out;
    try {
        for (const auto& l : report.at("per_layer")) {
            const auto& key = l.at("key");
            LayerReport r;
            r.key.layer_index = key.at("layer_index").get<int>();
            r.key.layer_type = parse_type_field(key.at("layer_type").get<std::string>());
            r.key.module_path = key.at("module_path").get<std::string>();
            r.d1 = l.at("d1").get<std::size_t>();
            r.d2 = l.at("d2").get<std::size_t>();
            r.original_rank = l.at("original_rank").get<std::size_t>();
            r.new_rank = l.at("new_rank").get<std::size_t>();
            r.retained_energy = l.at("retained_energy").get<double>();
            r.frobenius_error = l.at("frobenius_error").get<double>();
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed compression report: ") + e.what());
    }
    return out;
}

std::vector<LayerReport> layer_reports_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("layer_index,", 0) != 0) {
        throw FormatError("compression report CSV lacks its header row");
    }
    std::vector<LayerReport> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 9) throw FormatError("compression report CSV row has " + std::to_string(f.size()) + " fields");
        LayerReport r;
        r.key.layer_index = parse_field<int>(f[0], "layer_index");
        r.key.layer_type = parse_type_field(f[1]);
        r.key.module_path = f[2];
        r.d1 = parse_field<std::size_t>(f[3], "d1");
        r.d2 = parse_field<std::size_t>(f[4], "d2");
        r.original_rank = parse_field<std::size_t>(f[5], "original_rank");
        r.new_rank = parse_field<std::size_t>(f[6], "new_rank");
        r.retained_energy = parse_field<double>(f[7], "retained_energy");
        r.frobenius_error = parse_field<double>(f[8], "frobenius_error");
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace para
