// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "para/errors.hpp"
#include "para/oracle.hpp"
#include "para/reconstruct.hpp"
#include "para/spectral.hpp"

namespace para::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json key_json(const LayerKey& key) {
    return {{"layer_index", key.layer_index}, {"layer_type", to_string(key.layer_type)}, {"module_path", key.module_path}};
}

// Report first, then weights, so an all-pruned result still leaves a report.
void write_compression(const CompressionResult& result, const fs::path& dir, ReportFormat format) {
    ensure_dir(dir);
    if (format == ReportFormat::json) {
        write_text(dir / kReportJson, to_json(result.report).dump(2) + "\n");
    } else {
        write_text(dir / kReportCsv, to_csv(result.report));
    }
    save_adapter(result.adapter, dir);
}

void log_summary(const CompressionReport& report, const fs::path& dir) {
    const auto& t = report.totals;
    spdlog::info("{} -> {}: kept {}/{} ranks (avg {:.3f}), parameters {} -> {} ({:.2f}% reduction), energy {:.6f}",
                 report.policy.label(), dir.string(), t.kept_total, t.b_init, t.average_rank,
                 t.parameter_count_before, t.parameter_count_after, 100.0 * t.reduction_fraction,
                 t.retained_energy_fraction);
}

} // namespace

void cmd_analyze(const AnalyzeOptions& opts) {
    if (opts.bins == 0) throw DomainError("histogram needs at least one bin");
    const AdapterSet set = load_adapter(opts.input, opts.load);
    const auto decomps = decompose_all(set, opts.threads);
    const GlobalSpectrum spectrum = pool_spectrum(decomps);
    ensure_dir(opts.out);

    const double total = spectrum.total_energy();
    const double max_value = spectrum.entries.front().value;

    json entries = json::array();
    for (const auto& e : spectrum.entries) {
        entries.push_back({{"value", e.value},
                           {"layer_index", e.key.layer_index},
                           {"layer_type", to_string(e.key.layer_type)},
                           {"module_path", e.key.module_path},
                           {"position", e.position}});
    }
    json layers = json::array();
    for (std::size_t i = 0; i < decomps.size(); ++i) {
        const auto& d = decomps[i];
        layers.push_back({{"key", key_json(d.key)},
                          {"d1", d.d1()},
                          {"d2", d.d2()},
                          {"original_rank", d.original_rank()},
                          {"scale", set.layers[i].scale},
                          {"sigma", d.sigma}});
    }
    const json doc = {{"n_layers", set.n_layers},    {"b_init", spectrum.size()}, {"total_energy", total},
                      {"max_value", max_value},      {"entries", std::move(entries)},
                      {"layers", std::move(layers)}};
    write_text(opts.out / "spectrum.json", doc.dump(2) + "\n");

    // Equal-width bins over [0, max]; the top edge belongs to the last bin.
    std::vector<std::size_t> counts(opts.bins, 0);
    const double width = max_value > 0.0 ? max_value / static_cast<double>(opts.bins) : 1.0 / opts.bins;
    for (const auto& e : spectrum.entries) {
        const double pos = max_value > 0.0 ? e.value / max_value * static_cast<double>(opts.bins) : 0.0;
        counts[std::min(opts.bins - 1, static_cast<std::size_t>(std::max(0.0, pos)))]++;
    }
    std::ostringstream hist;
    hist << std::setprecision(17) << "bin,lo,hi,count\n";
    for (std::size_t b = 0; b < opts.bins; ++b) {
        hist << b << ',' << width * static_cast<double>(b) << ',' << width * static_cast<double>(b + 1) << ','
             << counts[b] << '\n';
    }
    write_text(opts.out / "histogram.csv", hist.str());

    std::ostringstream curve;
    curve << std::setprecision(17) << "retained_rank,rank_fraction,average_rank,threshold,energy_fraction\n";
    double cumulative = 0.0;
    for (std::size_t k = 1; k <= spectrum.size(); ++k) {
        const double v = spectrum.entries[k - 1].value;
        cumulative += v * v;
        curve << k << ',' << static_cast<double>(k) / static_cast<double>(spectrum.size()) << ','
              << static_cast<double>(k) / static_cast<double>(decomps.size()) << ',' << v << ','
              << (total > 0.0 ? cumulative / total : 1.0) << '\n';
    }
    write_text(opts.out / "energy_curve.csv", curve.str());
    spdlog::info("analyzed {} layers, {} singular values, max {:.6g}", decomps.size(), spectrum.size(), max_value);
}

CompressionReport cmd_compress(const CompressOptions& opts) {
    opts.policy.validate();
    const AdapterSet set = load_adapter(opts.input, opts.load);
    const auto decomps = decompose_all(set, opts.threads);
    const GlobalSpectrum spectrum = pool_spectrum(decomps);
    const KeepPlan plan = make_plan(opts.policy, decomps, spectrum);
    CompressionResult result = compress(set, decomps, plan, opts.threads);
    write_compression(result, opts.out, opts.format);
    log_summary(result.report, opts.out);
    return std::move(result.report);
}

bool FamilyResult::all_ok() const noexcept {
    return std::all_of(children.begin(), children.end(), [](const FamilyChild& c) { return !c.error; });
}

FamilyResult cmd_family(const FamilyOptions& opts) {
    if (opts.values.empty()) throw DomainError("family needs at least one value");
    for (double v : opts.values) Policy{opts.kind, v}.validate();
    if (opts.values.size() > 1) {
        const bool increasing = opts.values[1] > opts.values[0];
        for (std::size_t i = 1; i < opts.values.size(); ++i) {
            const bool ok = increasing ? opts.values[i] > opts.values[i - 1] : opts.values[i] < opts.values[i - 1];
            if (!ok) throw DomainError("family values must be strictly increasing or strictly decreasing");
        }
    }

    FamilyResult family;
    const AdapterSet set = load_adapter(opts.input, opts.load);
    Stopwatch phase1;
    const auto decomps = decompose_all(set, opts.threads);
    const GlobalSpectrum spectrum = pool_spectrum(decomps);
    family.decompose_seconds = phase1.seconds();

    Stopwatch phase2;
    for (double value : opts.values) {
        FamilyChild child{.policy = {opts.kind, value},
                          .dir = opts.out / Policy{opts.kind, value}.label(),
                          .error = std::nullopt,
                          .report = std::nullopt};
        try {
            const KeepPlan plan = make_plan(child.policy, decomps, spectrum);
            CompressionResult result = compress(set, decomps, plan, opts.threads);
            write_compression(result, child.dir, opts.format);
            log_summary(result.report, child.dir);
            child.report = std::move(result.report);
        } catch (const Error& e) {
            spdlog::error("child {} failed: {}", child.policy.label(), e.what());
            child.error = e.what();
        }
        family.children.push_back(std::move(child));
    }
    family.children_seconds = phase2.seconds();

    json children = json::array();
    for (const auto& c : family.children) {
        json entry = {{"value", c.policy.value}, {"dir", c.dir.filename().string()}, {"ok", !c.error}};
        if (c.error) entry["error"] = *c.error;
        if (c.report) {
            entry["kept_total"] = c.report->totals.kept_total;
            entry["average_rank"] = c.report->totals.average_rank;
            entry["reduction_fraction"] = c.report->totals.reduction_fraction;
            entry["retained_energy_fraction"] = c.report->totals.retained_energy_fraction;
            entry["threshold"] = c.report->threshold ? json(*c.report->threshold) : json(nullptr);
        }
        children.push_back(std::move(entry));
    }
    const json doc = {{"policy", to_string(opts.kind)},
                      {"values", opts.values},
                      {"layers", set.layers.size()},
                      {"b_init", spectrum.size()},
                      {"children", std::move(children)}};
    ensure_dir(opts.out);
    write_text(opts.out / "family.json", doc.dump(2) + "\n");
    spdlog::info("family: decomposition {:.3f} s, {} children {:.3f} s", family.decompose_seconds,
                 family.children.size(), family.children_seconds);
    return family;
}

double verify_tolerance(Dtype dtype) noexcept { return dtype == Dtype::f32 ? 1e-6 : 1e-2; }

VerifyResult cmd_verify(const VerifyOptions& opts) {
    const AdapterSet parent = load_adapter(opts.parent, opts.load);
    const AdapterSet child = load_adapter(opts.child, opts.load);

    std::vector<LayerReport> claims;
    if (fs::exists(opts.child / kReportJson)) {
        json doc;
        try {
            doc = json::parse(read_text(opts.child / kReportJson));
        } catch (const json::exception& e) {
            throw FormatError(std::string("malformed child report: ") + e.what());
        }
        claims = layer_reports_from_json(doc);
    } else if (fs::exists(opts.child / kReportCsv)) {
        claims = layer_reports_from_csv(read_text(opts.child / kReportCsv));
    } else {
        throw IoError("child directory " + opts.child.string() + " has no report.json or report.csv");
    }

    std::map<LayerKey, const LayerReport*> claim_by_key;
    for (const auto& c : claims) claim_by_key[c.key] = &c;
    std::map<LayerKey, const AdapterLayer*> child_by_key;
    for (const auto& l : child.layers) child_by_key[l.key] = &l;

    VerifyResult result;
    result.passed = true;
    for (const auto& layer : parent.layers) {
        LayerVerdict v;
        v.key = layer.key;
        const Matrix phi = materialize(layer);
        v.reference_norm = frobenius_distance(phi, Matrix(phi.rows(), phi.cols()));

        const auto claim = claim_by_key.find(layer.key);
        const auto stored = child_by_key.find(layer.key);
        const Dtype dtype = stored != child_by_key.end() ? stored->second->storage_dtype : layer.storage_dtype;
        v.tolerance = std::max(verify_tolerance(dtype), verify_tolerance(layer.storage_dtype));

        if (claim == claim_by_key.end()) {
            v.reason = "layer missing from child report";
        } else {
            v.claimed_error = claim->second->frobenius_error;
            const std::size_t claimed_rank = claim->second->new_rank;
            if (stored == child_by_key.end()) {
                v.measured_error = v.reference_norm;
                if (claimed_rank != 0) v.reason = "report claims rank " + std::to_string(claimed_rank) + " but child has no tensors";
            } else {
                const AdapterLayer& c = *stored->second;
                if (c.d1() != layer.d1() || c.d2() != layer.d2()) {
                    v.reason = "child factor shapes do not match the parent";
                } else {
                    v.measured_error = frobenius_distance(phi, materialize(c));
                    if (c.rank() != claimed_rank) {
                        v.reason = "child rank " + std::to_string(c.rank()) + " differs from reported " +
                                   std::to_string(claimed_rank);
                    }
                }
            }
            if (v.reason.empty()) {
                const double slack = v.tolerance * std::max(v.reference_norm, std::numeric_limits<double>::min());
                if (std::abs(v.measured_error - v.claimed_error) > slack) {
                    std::ostringstream os;
                    os << std::setprecision(6) << "measured error " << v.measured_error << " differs from claimed "
                       << v.claimed_error << " by more than " << slack;
                    v.reason = os.str();
                }
            }
        }
        v.passed = v.reason.empty();
        result.passed = result.passed && v.passed;
        if (!v.passed) spdlog::error("layer {} ({}): {}", describe(v.key), v.key.module_path, v.reason);
        result.layers.push_back(std::move(v));
    }
    for (const auto& l : child.layers) {
        if (std::none_of(parent.layers.begin(), parent.layers.end(), [&](const AdapterLayer& p) { return p.key == l.key; })) {
            LayerVerdict v;
            v.key = l.key;
            v.reason = "child layer has no parent counterpart";
            spdlog::error("layer {} ({}): {}", describe(v.key), v.key.module_path, v.reason);
            result.passed = false;
            result.layers.push_back(std::move(v));
        }
    }

    if (opts.out) {
        ensure_dir(*opts.out);
        write_text(*opts.out / "verify.json", to_json(result).dump(2) + "\n");
    }
    return result;
}

json to_json(const VerifyResult& result) {
    json layers = json::array();
    for (const auto& v : result.layers) {
        json entry = {{"key", key_json(v.key)},
                      {"claimed_error", v.claimed_error},
                      {"measured_error", v.measured_error},
                      {"reference_norm", v.reference_norm},
                      {"tolerance", v.tolerance},
                      {"passed", v.passed}};
        if (!v.reason.empty()) entry["reason"] = v.reason;
        layers.push_back(std::move(entry));
    }
    return {{"passed", result.passed}, {"layers", std::move(layers)}};
}

void cmd_synth(const SynthOptions& opts) {
    const AdapterSet set = generate_synthetic(opts.params);
    save_adapter(set, opts.out);
    spdlog::info("wrote {} synthetic layers to {}", set.layers.size(), opts.out.string());
}

namespace {

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("para");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("PARA_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to "off"; only honour real names.
        if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
    }
}

LoadOptions load_options(const std::string& layer_map) {
    LoadOptions load;
    if (!layer_map.empty()) {
        load.layer_map = LayerTypeMap::defaults();
        for (const auto& [suffix, type] : LayerTypeMap::parse(layer_map).entries()) load.layer_map.set(suffix, type);
    }
    return load;
}

const std::map<std::string, ReportFormat> kFormats = {{"json", ReportFormat::json}, {"csv", ReportFormat::csv}};
const std::vector<std::string> kPolicies = {"gamma", "epsilon", "local", "topk"};

} // namespace

int run(int argc, const char* const* argv) {
    if (!spdlog::get("para")) configure_logging();

    CLI::App app{"Post-hoc rank allocation and compression for LoRA adapters", "para"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    unsigned threads = 0;
    std::string layer_map;
    std::string policy_name;
    double value = 0.0;
    std::vector<double> values;
    ReportFormat format = ReportFormat::json;
    fs::path input;
    fs::path child;
    fs::path out;
    std::size_t bins = 64;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--threads", threads, "Worker threads (default: all cores)");
        cmd->add_option("--layer-map", layer_map, "Extra module suffix mappings, e.g. gate_proj=m1,attn.c_proj=o");
    };
    auto add_policy = [&](CLI::App* cmd) {
        cmd->add_option("--policy", policy_name, "Rank selection policy")->required()->check(CLI::IsMember(kPolicies));
        cmd->add_option("--report-format", format, "Report format")
            ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
    };

    auto* analyze = app.add_subcommand("analyze", "Write spectrum, histogram and energy-curve data");
    analyze->add_option("input", input, "Adapter directory")->required();
    analyze->add_option("--out", out, "Output directory")->required();
    analyze->add_option("--bins", bins, "Histogram bin count")->check(CLI::PositiveNumber);
    add_common(analyze);

    auto* compress_cmd = app.add_subcommand("compress", "Compress an adapter with one policy");
    compress_cmd->add_option("input", input, "Adapter directory")->required();
    compress_cmd->add_option("--out", out, "Output adapter directory")->required();
    compress_cmd->add_option("--value", value, "Policy parameter")->required();
    add_policy(compress_cmd);
    add_common(compress_cmd);

    auto* family_cmd = app.add_subcommand("family", "Derive several compressed children from one decomposition");
    family_cmd->add_option("input", input, "Adapter directory")->required();
    family_cmd->add_option("--out", out, "Output root directory")->required();
    family_cmd->add_option("--values", values, "Comma-separated policy parameters")->required()->delimiter(',');
    add_policy(family_cmd);
    add_common(family_cmd);

    auto* verify_cmd = app.add_subcommand("verify", "Check a child's reported errors against the parent");
    verify_cmd->add_option("parent", input, "Parent adapter directory")->required();
    verify_cmd->add_option("child", child, "Child adapter directory")->required();
    verify_cmd->add_option("--out", out, "Directory for verify.json");
    add_common(verify_cmd);

    SynthParams synth;
    std::string profile = "power_law:0.5";
    std::string dtype = "f32";
    std::vector<std::string> types;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic adapter with a planted spectrum");
    synth_cmd->add_option("--out", out, "Output adapter directory")->required();
    synth_cmd->add_option("--layers", synth.n_layers, "Transformer blocks")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--d1", synth.d1, "Output dimension")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--d2", synth.d2, "Input dimension")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--rank", synth.rank, "LoRA rank")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--profile", profile, "power_law:<decay> | flat[:<v>] | bimodal:<count>:<big>:<small>");
    synth_cmd->add_option("--seed", synth.seed, "Random seed");
    synth_cmd->add_option("--alpha", synth.alpha, "lora_alpha (default: rank)");
    synth_cmd->add_option("--dtype", dtype, "Storage dtype")->check(CLI::IsMember({"f32", "f16", "bf16"}));
    synth_cmd->add_option("--types", types, "Layer types to adapt")->delimiter(',')->check(
        CLI::IsMember({"q", "k", "v", "o", "m1", "m2"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    // Validate everything that does not need the filesystem first.
    LoadOptions load;
    Policy policy;
    try {
        load = load_options(layer_map);
        if (!policy_name.empty()) {
            policy.kind = parse_policy_kind(policy_name);
            if (compress_cmd->parsed()) {
                policy.value = value;
                policy.validate();
            }
            if (family_cmd->parsed()) {
                for (double v : values) Policy{policy.kind, v}.validate();
            }
        }
        if (synth_cmd->parsed()) {
            synth.profile = parse_profile(profile);
            synth.dtype = *parse_dtype(dtype);
            if (!types.empty()) {
                synth.types.clear();
                for (const auto& t : types) synth.types.push_back(*parse_layer_type(t));
            }
        }
    } catch (const DomainError& e) {
        std::cerr << "para: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (analyze->parsed()) {
            cmd_analyze({.input = input, .out = out, .bins = bins, .threads = threads, .load = load});
        } else if (compress_cmd->parsed()) {
            cmd_compress(
                {.input = input, .out = out, .policy = policy, .format = format, .threads = threads, .load = load});
        } else if (family_cmd->parsed()) {
            const auto family = cmd_family({.input = input,
                                            .out = out,
                                            .kind = policy.kind,
                                            .values = values,
                                            .format = format,
                                            .threads = threads,
                                            .load = load});
            if (!family.all_ok()) return kFormat;
        } else if (verify_cmd->parsed()) {
            VerifyOptions opts{.parent = input, .child = child, .out = std::nullopt, .load = load};
            if (!out.empty()) opts.out = out;
            const auto result = cmd_verify(opts);
            std::size_t failed = 0;
            for (const auto& l : result.layers) failed += l.passed ? 0 : 1;
            std::cout << (result.passed ? "PASS" : "FAIL") << ": " << result.layers.size() - failed << "/"
                      << result.layers.size() << " layers match their reported error\n";
            if (!result.passed) return kVerifyFailed;
        } else if (synth_cmd->parsed()) {
            cmd_synth({.params = synth, .out = out});
        }
    } catch (const DomainError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return kFormat;
    } catch (const std::exception& e) {
        spdlog::error("unexpected failure: {}", e.what());
        return kFormat;
    }
    return kOk;
}

} // namespace para::cli
