// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>

#include "para/commands.hpp"
#include "para/errors.hpp"
#include "para/linalg.hpp"
#include "para/oracle.hpp"
#include "para/reconstruct.hpp"
#include "para/safetensors.hpp"
#include "para/synthetic.hpp"
#include "support.hpp"

namespace para {
namespace {

using json = nlohmann::json;
using clock_type = std::chrono::steady_clock;
namespace fs = std::filesystem;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Outcome {
    bool passed = false;
    std::string detail;
};

// Tolerances.
constexpr double kSigmaTol = 1e-8;
constexpr double kReconTol = 1e-8;
constexpr double kEckartYoungTol = 1e-7;
constexpr double kEquivalenceSeconds = 60.0;
constexpr double kSpeedup = 10.0;
constexpr double kBenchmarkSeconds = 300.0;
constexpr double kReductionTol = 1e-3;

std::string fmt_double(double x, int precision = 3) {
    std::ostringstream os;
    os.precision(precision);
    os << x;
    return os.str();
}

Matrix reconstruct(const SpectralDecomposition& d) {
    Matrix us = d.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= d.sigma[j];
    return matmul(us, d.v.transposed());
}

// ---------------------------------------------------------------------------
// 1 and 2 share the same layer population.

struct EquivalenceStats {
    std::size_t layers = 0;
    std::size_t checks = 0;
    double worst_sigma = 0.0;
    double worst_recon = 0.0;
    double worst_ey = 0.0;
    double equivalence_seconds = 0.0;
};

EquivalenceStats run_equivalence() {
    const std::size_t dims[] = {64, 256, 768, 2048};
    const std::size_t ranks[] = {1, 4, 16, 64};
    struct Shape {
        std::size_t d1, d2, r;
    };
    std::vector<Shape> shapes;
    for (auto d1 : dims)
        for (auto d2 : dims)
            for (auto r : ranks) shapes.push_back({d1, d2, r});
    std::mt19937_64 rng(20260101);
    std::uniform_int_distribution<int> pick_dim(0, 2);
    std::uniform_int_distribution<int> pick_rank(0, 3);
    while (shapes.size() < 100) shapes.push_back({dims[pick_dim(rng)], dims[pick_dim(rng)], ranks[pick_rank(rng)]});

    EquivalenceStats stats;
    std::uniform_real_distribution<double> scale_dist(0.25, 4.0);
    for (const auto& s : shapes) {
        const AdapterLayer layer = testing::random_layer(s.d1, s.d2, s.r, rng, scale_dist(rng));

        const auto t0 = clock_type::now();
        const SpectralDecomposition d = decompose_layer(layer);
        const std::vector<double> oracle = oracle_sigma(layer);
        const Matrix phi = materialize(layer);
        stats.worst_sigma = std::max(stats.worst_sigma, testing::relative_sigma_error(d.sigma, oracle));
        stats.worst_recon = std::max(stats.worst_recon, testing::relative_fro(reconstruct(d), phi));
        stats.equivalence_seconds += seconds_since(t0);

        // Every truncation level k: reported error vs the directly measured residual.
        const double phi_norm = testing::fro(phi);
        const CompressedLayer full = prune_and_reconstruct(d, std::vector<bool>(s.r, true));
        Matrix residual = phi;
        for (std::size_t k = 0; k <= s.r; ++k) {
            std::vector<bool> mask(s.r, false);
            std::fill_n(mask.begin(), k, true);
            const double reported = prune_and_reconstruct(d, mask).frobenius_error;
            const double measured = testing::fro(residual);
            stats.worst_ey = std::max(stats.worst_ey, std::abs(measured - reported) / phi_norm);
            ++stats.checks;
            if (k == s.r || k >= full.new_rank) {
                if (k == s.r) break;
                continue;
            }
            for (std::size_t i = 0; i < s.d1; ++i) {
                const double bik = (*full.b_hat)(i, k);
                auto row = residual.row(i);
                for (std::size_t j = 0; j < s.d2; ++j) row[j] -= bik * (*full.a_hat)(k, j);
            }
        }
        ++stats.layers;
    }
    return stats;
}

// ---------------------------------------------------------------------------

SpectralDecomposition with_sigma(LayerKey key, std::vector<double> sigma) {
    const std::size_t r = sigma.size();
    return {.key = std::move(key), .u = Matrix(r, r), .sigma = std::move(sigma), .v = Matrix(r, r)};
}

std::vector<SpectralDecomposition> random_spectra(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_layers(1, 24);
    std::uniform_int_distribution<int> rank(1, 16);
    std::uniform_int_distribution<int> level(0, 5);
    std::uniform_real_distribution<double> cont(0.0, 3.0);
    const int style = static_cast<int>(rng() % 3);
    std::vector<SpectralDecomposition> out;
    const int n = n_layers(rng);
    for (int i = 0; i < n; ++i) {
        std::vector<double> s(static_cast<std::size_t>(rank(rng)));
        for (double& v : s) {
            switch (style) {
                case 0: v = 0.25 * level(rng); break;                     // heavy duplication, zeros allowed
                case 1: v = cont(rng); break;                             // continuous
                default: v = rng() % 2 ? 1.0 : std::pow(2.0, -level(rng)); // many exact ties at 1
            }
        }
        std::sort(s.rbegin(), s.rend());
        out.push_back(with_sigma({i / 6 + 1, kAllLayerTypes[static_cast<std::size_t>(i % 6)], "m" + std::to_string(i)},
                                 std::move(s)));
    }
    return out;
}

Outcome budget_exactness() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> g(1e-3, 1.0);
    std::size_t cases = 0, with_ties = 0, failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto decomps = random_spectra(rng);
        const auto spectrum = pool_spectrum(decomps);
        const double gamma = trial % 10 == 0 ? 1.0 : g(rng);
        const auto plan = threshold_gamma(spectrum, gamma);
        const auto target = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(spectrum.size()) + 0.5));
        std::size_t kept = 0;
        for (const auto& [key, mask] : plan.keep) kept += static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
        bool tie = false;
        for (std::size_t i = 1; i < spectrum.size(); ++i) tie = tie || spectrum.entries[i].value == spectrum.entries[i - 1].value;
        with_ties += tie ? 1 : 0;
        if (kept != target || plan.kept_total != target) ++failures;
        ++cases;
    }
    return {failures == 0 && cases >= 500 && with_ties >= 250,
            std::to_string(cases - failures) + "/" + std::to_string(cases) + " spectra exact (" +
                std::to_string(with_ties) + " with duplicated values)"};
}

Outcome energy_maximality() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> e(1e-3, 1.0);
    std::size_t cases = 0, failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto decomps = random_spectra(rng);
        const auto spectrum = pool_spectrum(decomps);
        if (!(spectrum.total_energy() > 0.0)) continue;
        const double eps = trial % 10 == 0 ? 1.0 : e(rng);
        const auto plan = threshold_epsilon(spectrum, eps);
        double kept = 0.0;
        double smallest = INFINITY;
        for (const auto& d : decomps) {
            const auto& mask = plan.keep.at(d.key);
            for (std::size_t j = 0; j < mask.size(); ++j) {
                if (!mask[j]) continue;
                kept += d.sigma[j] * d.sigma[j];
                smallest = std::min(smallest, d.sigma[j]);
            }
        }
        const double target = eps * spectrum.total_energy();
        const bool retains = kept >= target * (1.0 - 1e-12);
        const bool minimal = kept - smallest * smallest < target;
        if (!retains || !minimal) ++failures;
        ++cases;
    }
    return {failures == 0 && cases >= 500,
            std::to_string(cases - failures) + "/" + std::to_string(cases) + " spectra retain >= eps*E and are minimal"};
}

Outcome complexity() {
    const auto t_total = clock_type::now();
    std::mt19937_64 rng(5);
    const AdapterLayer layer = testing::random_layer(4096, 4096, 16, rng, 2.0);

    double fast = INFINITY;
    std::vector<double> sigma;
    for (int rep = 0; rep < 5; ++rep) {
        const auto t0 = clock_type::now();
        sigma = decompose_layer(layer).sigma;
        fast = std::min(fast, seconds_since(t0));
    }
    const auto t1 = clock_type::now();
    const OracleSvd oracle = oracle_svd(layer);
    const double slow = seconds_since(t1);
    const double total = seconds_since(t_total);
    const double agree = testing::relative_sigma_error(sigma, oracle.sigma());
    const double speedup = slow / fast;
    return {speedup >= kSpeedup && total < kBenchmarkSeconds && agree < kSigmaTol,
            "d=4096 r=16: QR route " + fmt_double(fast * 1e3) + " ms, oracle " + fmt_double(slow) + " s, speedup " +
                fmt_double(speedup, 4) + "x, benchmark " + fmt_double(total) + " s"};
}

Outcome global_vs_local() {
    std::size_t cases = 0, dominated = 0, straddle = 0, strict = 0;
    const double gammas[] = {0.125, 0.25, 0.5, 0.75};
    const std::size_t rank = 16;
    for (int s = 0; s < 50; ++s) {
        const std::size_t big = static_cast<std::size_t>(s % 13);  // 0 and 12 give single-mode sets
        const AdapterSet set = generate_synthetic({.n_layers = 2,
                                                   .d1 = 48,
                                                   .d2 = 40,
                                                   .rank = rank,
                                                   .profile = Bimodal{big, 10.0, 0.01},
                                                   .seed = static_cast<std::uint64_t>(1000 + s)});
        const auto decomps = decompose_all(set);
        const auto spectrum = pool_spectrum(decomps);
        const double gamma = gammas[s % 4];
        const auto r_local = static_cast<std::int64_t>(gamma * rank);
        const auto local = local_uniform_plan(decomps, r_local);
        const auto global = threshold_gamma(spectrum, gamma);
        if (global.kept_total != local.kept_total) return {false, "budgets differ in set " + std::to_string(s)};

        // The modes straddle the threshold when local keeps a value clearly below one it drops.
        double min_kept = INFINITY, max_dropped = 0.0;
        for (const auto& d : decomps) {
            const auto& mask = local.keep.at(d.key);
            for (std::size_t j = 0; j < mask.size(); ++j) {
                if (mask[j]) min_kept = std::min(min_kept, d.sigma[j]);
                else max_dropped = std::max(max_dropped, d.sigma[j]);
            }
        }
        const bool straddles = min_kept < max_dropped * (1.0 - 1e-6);
        ++cases;
        if (global.pruned_energy <= local.pruned_energy * (1.0 + 1e-12)) ++dominated;
        if (straddles) {
            ++straddle;
            if (global.pruned_energy < local.pruned_energy) ++strict;
        }
    }
    return {dominated == cases && strict == straddle && cases == 50 && straddle > 0,
            std::to_string(dominated) + "/" + std::to_string(cases) + " sets global <= local; strict in " +
                std::to_string(strict) + "/" + std::to_string(straddle) + " straddling sets"};
}

Outcome parameter_reduction() {
    const AdapterSet set =
        generate_synthetic({.n_layers = 12, .d1 = 64, .d2 = 64, .rank = 16, .profile = PowerLaw{0.8}, .seed = 7});
    const auto decomps = decompose_all(set);
    const auto spectrum = pool_spectrum(decomps);
    const double quarter = compress(set, decomps, threshold_gamma(spectrum, 0.25)).report.totals.reduction_fraction;
    const double tenth = compress(set, decomps, threshold_gamma(spectrum, 0.10)).report.totals.reduction_fraction;
    return {std::abs(quarter - 0.75) <= kReductionTol && std::abs(tenth - 0.90) <= kReductionTol,
            "gamma=0.25 -> " + fmt_double(quarter, 6) + ", gamma=0.10 -> " + fmt_double(tenth, 6) + " (B_init " +
                std::to_string(spectrum.size()) + ")"};
}

double report_error(const CompressionReport& report) {
    double e = 0.0;
    for (const auto& l : report.per_layer) e += l.frobenius_error * l.frobenius_error;
    return std::sqrt(e);
}

Outcome top_k_reverse() {
    const AdapterSet set =
        generate_synthetic({.n_layers = 2, .d1 = 64, .d2 = 64, .rank = 16, .profile = PowerLaw{0.5}, .seed = 8});
    const auto decomps = decompose_all(set);
    const auto spectrum = pool_spectrum(decomps);
    const double top = report_error(compress(set, decomps, drop_top_k_plan(decomps, 1)).report);
    const double bottom = report_error(compress(set, decomps, threshold_gamma(spectrum, 0.5)).report);
    return {top > bottom, "drop top-1 error " + fmt_double(top, 6) + " vs drop bottom-50% error " + fmt_double(bottom, 6)};
}

// ---------------------------------------------------------------------------

Outcome round_trip_and_fuzz() {
    testing::TempDir dir("accept-io");
    std::mt19937_64 rng(9);
    std::size_t identical = 0;
    for (int s = 0; s < 20; ++s) {
        std::uniform_int_distribution<std::size_t> dim(4, 96);
        SynthParams p;
        p.n_layers = 1 + static_cast<int>(rng() % 3);
        p.d1 = dim(rng);
        p.d2 = dim(rng);
        p.rank = 1 + rng() % std::min<std::size_t>(8, std::min(p.d1, p.d2));
        p.profile = PowerLaw{0.3 + 0.05 * static_cast<double>(rng() % 10)};
        p.seed = rng();
        p.alpha = static_cast<double>(1 + rng() % 64);
        p.dtype = std::array{Dtype::f32, Dtype::f16, Dtype::bf16}[rng() % 3];
        p.types.clear();
        for (LayerType t : kAllLayerTypes)
            if (rng() % 2) p.types.push_back(t);
        if (p.types.empty()) p.types.push_back(LayerType::o);

        const auto a = dir / ("a" + std::to_string(s));
        const auto b = dir / ("b" + std::to_string(s));
        save_adapter(generate_synthetic(p), a);
        const AdapterSet first = load_adapter(a);
        save_adapter(first, b);
        const AdapterSet second = load_adapter(b);
        bool same = first.layers.size() == second.layers.size();
        for (std::size_t i = 0; same && i < first.layers.size(); ++i) {
            const auto& x = first.layers[i];
            const auto& y = second.layers[i];
            same = x.key.module_path == y.key.module_path && x.key == y.key && x.storage_dtype == y.storage_dtype &&
                   x.scale == y.scale &&
                   encode_buffer(x.storage_dtype, x.a.data()) == encode_buffer(y.storage_dtype, y.a.data()) &&
                   encode_buffer(x.storage_dtype, x.b.data()) == encode_buffer(y.storage_dtype, y.b.data());
        }
        same = same && testing::read_bytes(a / kWeightsFile) == testing::read_bytes(b / kWeightsFile);
        identical += same ? 1 : 0;
    }

    // Fuzz: every mutation below is invalid by construction.
    const auto valid = testing::read_bytes(dir / "a0" / kWeightsFile);
    std::uint64_t header_len = 0;
    std::memcpy(&header_len, valid.data(), 8);
    const std::string header(valid.begin() + 8, valid.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
    const json header_json = json::parse(header);
    std::vector<std::string> names;
    for (const auto& [k, v] : header_json.items())
        if (k != "__metadata__") names.push_back(k);
    const std::size_t data_len = valid.size() - 8 - header_len;

    auto with_header = [&](const std::string& h, std::size_t data) {
        std::vector<std::uint8_t> out(8 + h.size());
        const std::uint64_t n = h.size();
        std::memcpy(out.data(), &n, 8);
        std::memcpy(out.data() + 8, h.data(), h.size());
        out.insert(out.end(), valid.end() - static_cast<std::ptrdiff_t>(data_len),
                   valid.end() - static_cast<std::ptrdiff_t>(data_len) + static_cast<std::ptrdiff_t>(std::min(data, data_len)));
        out.resize(8 + h.size() + data, 0);
        return out;
    };

    std::size_t cases = 0, format_errors = 0, other = 0;
    std::uniform_int_distribution<int> family(0, 9);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<std::uint8_t> image;
        json h = header_json;
        const std::string& name = names[rng() % names.size()];
        auto& t = h[name];
        const auto size = t["data_offsets"][1].get<std::uint64_t>() - t["data_offsets"][0].get<std::uint64_t>();
        switch (family(rng)) {
            case 0: {  // declared header length past the end of the file or too small
                image = valid;
                const std::uint64_t bad = rng() % 2 ? valid.size() - 8 + 1 + rng() % 100000 : rng() % 2;
                std::memcpy(image.data(), &bad, 8);
                break;
            }
            case 1:  // truncated anywhere
                image.assign(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(rng() % valid.size()));
                break;
            case 2: {  // offsets that disagree with the declared size or run past the buffer
                const std::uint64_t begin = rng() % (data_len + 64);
                std::uint64_t end = begin + rng() % (size * 2 + 8);
                if (end - begin == size && end <= data_len) end += 1 + rng() % 4;
                t["data_offsets"] = {begin, end};
                image = with_header(h.dump(), data_len);
                break;
            }
            case 3: {  // reversed offsets
                const std::uint64_t hi = 1 + rng() % (data_len + 8);
                t["data_offsets"] = {hi, rng() % hi};
                image = with_header(h.dump(), data_len);
                break;
            }
            case 4: {  // shape inconsistent with byte size
                auto shape = t["shape"].get<std::vector<std::uint64_t>>();
                shape[rng() % shape.size()] += 1 + rng() % 1000;
                t["shape"] = shape;
                image = with_header(h.dump(), data_len);
                break;
            }
            case 5:  // unknown dtype
                t["dtype"] = std::string("Q") + std::to_string(rng() % 1000);
                image = with_header(h.dump(), data_len);
                break;
            case 6:  // trailing bytes after the last tensor
                image = with_header(header, data_len + 1 + rng() % 64);
                break;
            case 7: {  // broken JSON: cut the header text before its closing brace
                const std::string cut = header.substr(0, 1 + rng() % (header.rfind('}') - 1));
                image = with_header(cut, data_len);
                break;
            }
            case 8: {  // non-object header or wrongly typed fields
                const int pick = static_cast<int>(rng() % 4);
                if (pick == 0) image = with_header("[" + std::to_string(rng()) + "]", data_len);
                if (pick == 1) { t["shape"] = "wide"; image = with_header(h.dump(), data_len); }
                if (pick == 2) { t["data_offsets"] = {-1, 4}; image = with_header(h.dump(), data_len); }
                if (pick == 3) { t.erase("dtype"); image = with_header(h.dump(), data_len); }
                break;
            }
            default: {  // two tensors claiming overlapping bytes
                if (names.size() < 2) {
                    image = with_header(header, data_len + 1);
                    break;
                }
                const std::string& other_name = names[(std::find(names.begin(), names.end(), name) - names.begin() + 1) % names.size()];
                auto& u = h[other_name];
                const auto ub = u["data_offsets"][0].get<std::uint64_t>();
                t["data_offsets"] = {ub, ub + size};
                image = with_header(h.dump(), data_len);
                break;
            }
        }
        ++cases;
        try {
            (void)safetensors::parse(image);
            std::fprintf(stderr, "fuzz case %d accepted\n", trial);
        } catch (const FormatError&) {
            ++format_errors;
            continue;
        } catch (const std::exception& e) {
            ++other;
            std::fprintf(stderr, "fuzz case %d (%s): %s\n", trial, name.c_str(), e.what());
        }
    }
    // Random byte flips anywhere in the header may or may not stay valid; only FormatError may escape.
    std::size_t flips = 0, flip_other = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        auto image = valid;
        const int n = 1 + static_cast<int>(rng() % 4);
        for (int f = 0; f < n; ++f) image[rng() % (8 + header_len)] = static_cast<std::uint8_t>(rng());
        ++flips;
        try {
            (void)safetensors::parse(image);
        } catch (const FormatError&) {
        } catch (const std::exception& e) {
            ++flip_other;
            std::fprintf(stderr, "flip case %d: %s\n", trial, e.what());
        }
    }
    return {identical == 20 && format_errors == cases && cases >= 1000 && other == 0 && flip_other == 0,
            std::to_string(identical) + "/20 sets bit-identical; " + std::to_string(format_errors) + "/" +
                std::to_string(cases) + " corrupted headers rejected with FormatError; " +
                std::to_string(flips - flip_other) + "/" + std::to_string(flips) + " random byte flips handled"};
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "para");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::vector<fs::path> files_under(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
    std::sort(out.begin(), out.end());
    return out;
}

bool same_tree(const fs::path& a, const fs::path& b, std::string* diff = nullptr) {
    const auto fa = files_under(a);
    if (fa != files_under(b)) {
        if (diff) *diff = "file lists differ";
        return false;
    }
    for (const auto& f : fa) {
        if (testing::read_bytes(a / f) != testing::read_bytes(b / f)) {
            if (diff) *diff = f.string();
            return false;
        }
    }
    return true;
}

Outcome family_consistency() {
    testing::TempDir dir("accept-family");
    const std::string in = (dir / "in").string();
    cli({"synth", "--out", in, "--layers", "3", "--rank", "16", "--d1", "96", "--d2", "80", "--profile",
         "power_law:0.7", "--seed", "10"});
    const std::vector<std::string> values = {"0.75", "0.5", "0.25", "0.1"};
    if (cli({"family", in, "--out", (dir / "fam").string(), "--policy", "gamma", "--values", "0.75,0.5,0.25,0.1"}) != 0)
        return {false, "family command failed"};
    std::size_t identical = 0;
    std::string diff;
    for (const auto& v : values) {
        const auto solo = dir / ("solo-" + v);
        if (cli({"compress", in, "--out", solo.string(), "--policy", "gamma", "--value", v}) != 0)
            return {false, "compress failed at " + v};
        identical += same_tree(dir / "fam" / ("gamma-" + v), solo, &diff) ? 1 : 0;
    }
    const AdapterSet set = load_adapter(dir / "in");
    const auto spectrum = pool_spectrum(decompose_all(set));
    std::size_t nested = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const auto big = threshold_gamma(spectrum, std::stod(values[i - 1]));
        const auto small = threshold_gamma(spectrum, std::stod(values[i]));
        bool subset = true;
        for (const auto& [key, mask] : small.keep)
            for (std::size_t j = 0; j < mask.size(); ++j) subset = subset && (!mask[j] || big.keep.at(key)[j]);
        nested += subset ? 1 : 0;
    }
    return {identical == values.size() && nested == values.size() - 1,
            std::to_string(identical) + "/" + std::to_string(values.size()) +
                " children byte-identical to independent runs; " + std::to_string(nested) + "/" +
                std::to_string(values.size() - 1) + " budget pairs nested" + (diff.empty() ? "" : " (differs: " + diff + ")")};
}

Outcome determinism() {
    testing::TempDir dir("accept-det");
    std::size_t compared = 0, identical = 0;
    auto tally = [&](const fs::path& a, const fs::path& b) {
        ++compared;
        identical += same_tree(a, b) ? 1 : 0;
    };
    for (const std::string seed : {"1", "2"}) {
        const auto a = dir / ("syn-a" + seed), b = dir / ("syn-b" + seed);
        for (const auto& out : {a, b})
            cli({"synth", "--out", out.string(), "--layers", "4", "--rank", "16", "--d1", "128", "--d2", "96",
                 "--profile", "power_law:0.6", "--seed", seed});
        tally(a, b);
    }
    const std::string in = (dir / "syn-a1").string();
    for (const std::string t : {"1", "4"}) {
        const auto root = dir / ("t" + t);
        cli({"analyze", in, "--out", (root / "analyze").string(), "--threads", t});
        cli({"compress", in, "--out", (root / "gamma").string(), "--policy", "gamma", "--value", "0.3", "--threads", t});
        cli({"compress", in, "--out", (root / "eps").string(), "--policy", "epsilon", "--value", "0.9", "--threads", t,
             "--report-format", "csv"});
        cli({"family", in, "--out", (root / "family").string(), "--policy", "gamma", "--values", "0.5,0.2",
             "--threads", t});
    }
    for (const char* sub : {"analyze", "gamma", "eps", "family"}) tally(dir / "t1" / sub, dir / "t4" / sub);
    return {identical == compared && compared == 6,
            std::to_string(identical) + "/" + std::to_string(compared) +
                " output trees byte-identical (synth by seed, analyze/compress/family at 1 vs 4 threads)"};
}

} // namespace
} // namespace para

// Optional arguments select criteria by number, e.g. `acceptance 9 11`.
int main(int argc, char** argv) {
    using namespace para;
    setenv("PARA_LOG", "warn", 0);
    spdlog::set_level(spdlog::level::warn);
    std::vector<std::pair<std::string, std::function<Outcome()>>> checks;

    EquivalenceStats eq;
    bool eq_ran = false;
    std::string eq_error;
    auto equivalence = [&]() -> const EquivalenceStats& {
        if (!eq_ran) {
            eq_ran = true;
            try {
                eq = run_equivalence();
            } catch (const std::exception& e) {
                eq_error = e.what();
            }
        }
        return eq;
    };

    checks.emplace_back("QR-route equivalence", [&] {
        const auto& s = equivalence();
        if (!eq_error.empty()) return Outcome{false, eq_error};
        return Outcome{s.layers >= 100 && s.worst_sigma < kSigmaTol && s.worst_recon < kReconTol &&
                           s.equivalence_seconds < kEquivalenceSeconds,
                       std::to_string(s.layers) + " layers, max sigma err " + fmt_double(s.worst_sigma) +
                           ", max recon err " + fmt_double(s.worst_recon) + ", " + fmt_double(s.equivalence_seconds) +
                           " s"};
    });
    checks.emplace_back("Eckart-Young identity", [&] {
        const auto& s = equivalence();
        if (!eq_error.empty()) return Outcome{false, eq_error};
        return Outcome{s.worst_ey < kEckartYoungTol, std::to_string(s.checks) + " (layer, k) pairs, max |measured - reported| / ||phi|| = " +
                                                         fmt_double(s.worst_ey)};
    });
    checks.emplace_back("Budget exactness", budget_exactness);
    checks.emplace_back("Energy maximality", energy_maximality);
    checks.emplace_back("Complexity", complexity);
    checks.emplace_back("Global-vs-local dominance", global_vs_local);
    checks.emplace_back("Parameter reduction", parameter_reduction);
    checks.emplace_back("Top-K reverse ablation", top_k_reverse);
    checks.emplace_back("File-format round trip", round_trip_and_fuzz);
    checks.emplace_back("Family consistency", family_consistency);
    checks.emplace_back("Determinism", determinism);

    std::vector<bool> selected(checks.size(), argc <= 1);
    for (int a = 1; a < argc; ++a) {
        const long n = std::strtol(argv[a], nullptr, 10);
        if (n >= 1 && static_cast<std::size_t>(n) <= checks.size()) selected[static_cast<std::size_t>(n - 1)] = true;
    }

    int failed = 0;
    std::size_t ran = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        if (!selected[i]) continue;
        ++ran;
        Outcome o;
        const auto t0 = clock_type::now();
        try {
            o = checks[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.passed ? 0 : 1;
        std::printf("%s %2zu %-28s %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", i + 1, checks[i].first.c_str(),
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%s: %zu/%zu criteria passed\n", failed == 0 ? "PASS" : "FAIL", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
