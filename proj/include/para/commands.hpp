// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "para/adapter_io.hpp"
#include "para/allocation.hpp"
#include "para/layer_key.hpp"
#include "para/report.hpp"
#include "para/synthetic.hpp"

namespace para::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kFormat = 2,
    kVerifyFailed = 3,
};

enum class ReportFormat { json, csv };

inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportCsv = "report.csv";

struct AnalyzeOptions {
    std::filesystem::path input;
    std::filesystem::path out;
    std::size_t bins = 64;
    unsigned threads = 0;
    LoadOptions load;
};

/// Writes spectrum.json, histogram.csv and energy_curve.csv under `out`.
void cmd_analyze(const AnalyzeOptions& opts);

struct CompressOptions {
    std::filesystem::path input;
    std::filesystem::path out;
    Policy policy;
    ReportFormat format = ReportFormat::json;
    unsigned threads = 0;
    LoadOptions load;
};

/// load -> decompose -> plan -> compress -> save. The report is written even
/// when every layer is pruned, in which case EmptySetError follows.
CompressionReport cmd_compress(const CompressOptions& opts);

struct FamilyOptions {
    std::filesystem::path input;
    std::filesystem::path out;
    PolicyKind kind = PolicyKind::gamma;
    std::vector<double> values;
    ReportFormat format = ReportFormat::json;
    unsigned threads = 0;
    LoadOptions load;
};

struct FamilyChild {
    Policy policy;
    std::filesystem::path dir;
    std::optional<std::string> error;
    std::optional<CompressionReport> report;
};

struct FamilyResult {
    std::vector<FamilyChild> children;
    double decompose_seconds = 0.0;
    double children_seconds = 0.0;

    bool all_ok() const noexcept;
};

/// Decomposes once, then writes one child directory per value
/// (`<out>/<policy>-<value>`) plus `<out>/family.json`. A failing child is
/// recorded and the rest are still produced. Throws DomainError when the
/// values are not strictly monotone or out of range.
FamilyResult cmd_family(const FamilyOptions& opts);

struct VerifyOptions {
    std::filesystem::path parent;
    std::filesystem::path child;
    std::optional<std::filesystem::path> out;  ///< directory for verify.json
    LoadOptions load;
};

struct LayerVerdict {
    LayerKey key;
    double claimed_error = 0.0;
    double measured_error = 0.0;
    double reference_norm = 0.0;  ///< ||phi||_F of the parent layer
    double tolerance = 0.0;       ///< relative to reference_norm
    bool passed = false;
    std::string reason;
};

struct VerifyResult {
    std::vector<LayerVerdict> layers;
    bool passed = false;
};

/// Relative tolerance applied to a child stored in `dtype`.
double verify_tolerance(Dtype dtype) noexcept;

/// Recomputes ||phi - phi_child||_F with the oracle for every parent layer and
/// compares it to the child's report. Never throws on a mismatch; load and
/// report-parsing errors propagate.
VerifyResult cmd_verify(const VerifyOptions& opts);

struct SynthOptions {
    SynthParams params;
    std::filesystem::path out;
};

void cmd_synth(const SynthOptions& opts);

nlohmann::json to_json(const VerifyResult& result);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv);

} // namespace para::cli
