// multifrac — batch driver for reproducible experiments.
//
//   multifrac <operator|mbm|girsanov|report> --config <file> --out <dir>
//             [--seed N] [--threads N]
//
// Configs are JSON with a schema_version field; unknown keys are rejected and
// the fully resolved config (all defaults materialized) is written next to
// the outputs. Numeric tables are CSV with 17 significant digits, plots are
// static SVG. Exit codes: 0 all gates pass, 1 gate failure, 2 usage or
// config error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "multifrac/girsanov.hpp"
#include "multifrac/io.hpp"
#include "multifrac/mbm.hpp"
#include "multifrac/mfcalc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace multifrac;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_gate_failure = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- config plumbing --------------------------------------------------------

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    if (!obj.is_object()) throw UsageError("config: '" + where + "' must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw UsageError("config: unknown key '" + key + "' in " + where);
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw UsageError("config: " + where + " needs numeric '" + key + "'");
    return obj[key].get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw UsageError("config: '" + key + "' must be numeric");
    return obj[key].get<double>();
}

std::string string_or(const json& obj, const std::string& key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) throw UsageError("config: '" + key + "' must be a string");
    return obj[key].get<std::string>();
}

std::uint64_t uint_or(const json& obj, const std::string& key, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer())
        throw UsageError("config: '" + key + "' must be an unsigned integer");
    const auto v = obj[key].get<std::int64_t>();
    if (v < 0) throw UsageError("config: '" + key + "' must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

// {family, params, T, range?} -> RegularityFunction; params are positional
// per family as documented in the README
RegularityFunction parse_regularity(const json& spec, const std::string& where) {
    reject_unknown(spec, {"family", "params", "T", "range"}, where);
    const std::string family = string_or(spec, "family", "");
    const double horizon = require_number(spec, "T", where);
    std::vector<double> p;
    if (spec.contains("params")) {
        if (!spec["params"].is_array())
            throw UsageError("config: " + where + ".params must be an array");
        for (const auto& v : spec["params"]) {
            if (!v.is_number()) throw UsageError("config: " + where + ".params must be numeric");
            p.push_back(v.get<double>());
        }
    }
    auto need = [&](std::size_t k) {
        if (p.size() != k)
            throw UsageError("config: " + where + "." + family + " takes " + std::to_string(k) +
                             " params");
    };
    RegularityFunction::Family fam;
    std::array<double, 4> a{0, 0, 0, 0};
    if (family == "constant") {
        need(1);
        fam = RegularityFunction::Family::constant;
        a = {p[0], 0, 0, 0};
    } else if (family == "affine") {
        need(2);
        fam = RegularityFunction::Family::affine;
        a = {p[0], p[1], 0, 0};
    } else if (family == "sinusoidal") {
        need(4);
        fam = RegularityFunction::Family::sinusoidal;
        a = {p[0], p[1], p[2], p[3]};
    } else if (family == "logistic") {
        need(4);
        fam = RegularityFunction::Family::logistic;
        a = {p[0], p[1], p[2], p[3]};
    } else {
        throw UsageError("config: " + where + ".family must be one of constant|affine|"
                         "sinusoidal|logistic");
    }
    try {
        if (spec.contains("range")) {
            if (!spec["range"].is_array() || spec["range"].size() != 2)
                throw UsageError("config: " + where + ".range must be [a, b]");
            return RegularityFunction(fam, a, horizon, spec["range"][0].get<double>(),
                                      spec["range"][1].get<double>());
        }
        return RegularityFunction(fam, a, horizon);
    } catch (const ConfigError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

json regularity_to_json(const json& spec) {
    json out = spec;
    if (!out.contains("range")) {
        // materialize the analytic range
        RegularityFunction rf = parse_regularity(spec, "echo");
        const auto [lo, hi] = rf.range_bounds();
        out["range"] = {lo, hi};
    }
    return out;
}

// the built-in catalog of test functions g / f0
struct CatalogFn {
    std::string name;
    std::function<double(double)> f;
};

CatalogFn parse_function(const json& spec, const std::string& where) {
    reject_unknown(spec, {"name", "exponent", "center", "steepness", "scale"}, where);
    const std::string name = string_or(spec, "name", "");
    const double scale = number_or(spec, "scale", 1.0);
    if (name == "identity") return {"identity", [scale](double x) { return scale * x; }};
    if (name == "monomial") {
        const double g = require_number(spec, "exponent", where);
        if (!(g > 0.0)) throw UsageError("config: monomial exponent must be positive");
        return {"monomial", [g, scale](double x) { return scale * std::pow(x, g); }};
    }
    if (name == "cos") return {"cos", [scale](double x) { return scale * std::cos(x); }};
    if (name == "mollified_step") {
        const double c = number_or(spec, "center", 0.5);
        const double k = number_or(spec, "steepness", 12.0);
        return {"mollified_step",
                [c, k, scale](double x) { return scale / (1.0 + std::exp(-k * (x - c))); }};
    }
    throw UsageError("config: " + where + ".name must be one of identity|monomial|cos|"
                     "mollified_step");
}

DriftSpec parse_drift(const json& spec, const std::string& where) {
    reject_unknown(spec, {"family", "value", "coefficient"}, where);
    const std::string family = string_or(spec, "family", "");
    if (family == "zero") return DriftSpec::zero();
    if (family == "constant") return DriftSpec::constant(require_number(spec, "value", where));
    if (family == "sine") return DriftSpec::sine();
    if (family == "linear") return DriftSpec::linear(require_number(spec, "coefficient", where));
    if (family == "sign_step")
        return DriftSpec::sign_step(require_number(spec, "value", where));
    throw UsageError("config: " + where + ".family must be one of zero|constant|sine|linear|"
                     "sign_step");
}

struct CommonArgs {
    fs::path config_path;
    fs::path out_dir;
    std::optional<std::uint64_t> seed_override;
    unsigned threads = 1;
};

json load_config(const CommonArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw UsageError("cannot open config file " + args.config_path.string());
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config: top level must be an object");
    if (!cfg.contains("schema_version") || !(cfg["schema_version"].is_number()))
        throw UsageError("config: missing numeric schema_version");
    if (cfg["schema_version"].get<int>() != 1)
        throw UsageError("config: unsupported schema_version (expected 1)");
    return cfg;
}

void write_resolved(const json& resolved, const CommonArgs& args) {
    fs::create_directories(args.out_dir);
    std::ofstream out(args.out_dir / "config_resolved.json");
    out << resolved.dump(2) << "\n";
}

struct GateTable {
    io::CsvWriter csv{{"gate", "estimate", "stderr", "threshold", "pass"}};
    json summary = json::array();
    bool all_pass = true;

    void add(const std::string& name, double estimate, double stderr_, double threshold,
             bool pass) {
        csv.add_row(std::vector<std::string>{name, io::format_number(estimate),
                                             io::format_number(stderr_),
                                             io::format_number(threshold), pass ? "1" : "0"});
        summary.push_back({{"gate", name},
                           {"estimate", estimate},
                           {"stderr", stderr_},
                           {"threshold", threshold},
                           {"pass", pass}});
        all_pass = all_pass && pass;
    }
};

void write_gates(const GateTable& gates, const CommonArgs& args, const std::string& command) {
    gates.csv.write(args.out_dir / "gates.csv");
    json summary;
    summary["command"] = command;
    summary["gates"] = gates.summary;
    summary["all_pass"] = gates.all_pass;
    std::ofstream out(args.out_dir / "summary.json");
    out << summary.dump(2) << "\n";
}

void write_path_csv(const fs::path& file, const std::vector<SampledPath>& paths,
                    std::size_t limit) {
    const std::size_t n = paths.front().points();
    std::vector<std::string> header(n);
    for (std::size_t i = 0; i < n; ++i) header[i] = "t=" + io::format_number(paths.front().time(i));
    io::CsvWriter csv(header);
    for (std::size_t p = 0; p < std::min(limit, paths.size()); ++p)
        csv.add_row(paths[p].values());
    csv.write(file);
}

// --- operator command ---------------------------------------------------------

int cmd_operator(const CommonArgs& args) {
    json cfg = load_config(args);
    reject_unknown(cfg, {"schema_version", "command", "mode", "alpha", "function", "n", "solver",
                         "epsilon", "p", "series_tolerance", "max_series_terms", "x",
                         "fd_delta", "kernel_table", "kernel_panels"},
                   "top level");
    if (string_or(cfg, "command", "operator") != "operator")
        throw UsageError("config: command field does not say 'operator'");
    const std::string mode = string_or(cfg, "mode", "");
    if (mode != "integral" && mode != "derivative" && mode != "inverse_check" &&
        mode != "appendix_check")
        throw UsageError("config: mode must be integral|derivative|inverse_check|appendix_check");
    if (!cfg.contains("alpha")) throw UsageError("config: operator needs an 'alpha' block");
    const RegularityFunction alpha = parse_regularity(cfg["alpha"], "alpha");
    if (!cfg.contains("function")) throw UsageError("config: operator needs a 'function' block");
    const CatalogFn fn = parse_function(cfg["function"], "function");
    const auto n = static_cast<std::size_t>(uint_or(cfg, "n", 1024));
    if (n < 2) throw UsageError("config: n must be >= 2");

    DerivativeConfig dcfg;
    dcfg.grid_segments = n;
    dcfg.epsilon = number_or(cfg, "epsilon", 0.0);
    dcfg.lp_exponent = number_or(cfg, "p", 2.0);
    dcfg.series_tolerance = number_or(cfg, "series_tolerance", 1e-10);
    dcfg.max_series_terms = static_cast<std::size_t>(uint_or(cfg, "max_series_terms", 64));
    dcfg.kernel_table = static_cast<std::size_t>(uint_or(cfg, "kernel_table", 129));
    dcfg.kernel_rule = QuadratureRule::graded(
        static_cast<std::size_t>(uint_or(cfg, "kernel_panels", 128)), 3.0);
    const std::string solver = string_or(cfg, "solver", "volterra_march");
    if (solver == "picard_series")
        dcfg.solver = DerivativeConfig::Solver::picard_series;
    else if (solver != "volterra_march")
        throw UsageError("config: solver must be volterra_march|picard_series");

    json resolved = cfg;
    resolved["command"] = "operator";
    resolved["alpha"] = regularity_to_json(cfg["alpha"]);
    resolved["n"] = n;
    resolved["solver"] = solver;
    resolved["epsilon"] = dcfg.effective_epsilon(alpha);
    resolved["p"] = dcfg.lp_exponent;
    resolved["series_tolerance"] = dcfg.series_tolerance;
    resolved["max_series_terms"] = dcfg.max_series_terms;
    resolved["kernel_table"] = dcfg.kernel_table;
    resolved["kernel_panels"] = dcfg.kernel_rule.subdivisions;
    resolved["seed"] = nullptr; // deterministic command
    resolved["threads"] = args.threads;
    write_resolved(resolved, args);

    const SampledPath input = SampledPath::from_function(fn.f, alpha.horizon(), n);
    GateTable gates;
    json diagnostics;

    auto emit_pair = [&](const std::string& file, const SampledPath& a, const SampledPath& b,
                         const std::string& la, const std::string& lb) {
        io::CsvWriter csv({"t", la, lb});
        for (std::size_t i = 0; i <= n; ++i)
            csv.add_row(std::vector<double>{a.time(i), a[i], b[i]});
        csv.write(args.out_dir / file);
    };

    if (mode == "integral") {
        const SampledPath out = mf_integral(input, alpha);
        emit_pair("operator.csv", input, out, "input", "integral");
    } else if (mode == "derivative") {
        const OperatorResult r = mf_derivative(input, alpha, dcfg, args.threads);
        emit_pair("operator.csv", input, r.path, "input", "derivative");
        for (const auto& [k, v] : r.diagnostics) diagnostics[k] = v;
    } else if (mode == "inverse_check") {
        const SampledPath g = mf_integral(input, alpha);
        const OperatorResult r = mf_derivative(g, alpha, dcfg, args.threads);
        emit_pair("operator.csv", input, r.path, "f0", "recovered");
        for (const auto& [k, v] : r.diagnostics) diagnostics[k] = v;
        double num = 0.0, den = 0.0;
        for (std::size_t i = n / 10; i <= n; ++i) {
            num += (r.path[i] - input[i]) * (r.path[i] - input[i]);
            den += input[i] * input[i];
        }
        const double rel = std::sqrt(num / den);
        gates.add("inverse_property_rel_l2", rel, 0.0, 1e-2, rel <= 1e-2);
    } else { // appendix_check
        const double x = number_or(cfg, "x", 0.5 * alpha.horizon());
        std::vector<double> deltas{1e-2, 1e-3, 1e-4};
        if (cfg.contains("fd_delta")) deltas = {require_number(cfg, "fd_delta", "top level")};
        io::CsvWriter csv({"delta", "lhs", "rhs", "gap"});
        double last_gap = 0.0;
        bool decreasing = true;
        double prev_gap = -1.0;
        for (double d : deltas) {
            const AppendixCheck c = appendix_identity_check(input, alpha, x, d);
            csv.add_row(std::vector<double>{d, c.lhs, c.rhs, c.gap});
            if (prev_gap >= 0.0 && c.gap > prev_gap) decreasing = false;
            prev_gap = c.gap;
            last_gap = c.gap;
        }
        csv.write(args.out_dir / "appendix.csv");
        gates.add("appendix_gap_final", last_gap, 0.0, 1e-3, last_gap <= 1e-3 && decreasing);
    }

    write_gates(gates, args, "operator");
    if (!diagnostics.is_null()) {
        std::ofstream d(args.out_dir / "diagnostics.json");
        d << diagnostics.dump(2) << "\n";
    }
    return gates.all_pass ? exit_ok : exit_gate_failure;
}

// --- mbm command ---------------------------------------------------------------

int cmd_mbm(const CommonArgs& args) {
    json cfg = load_config(args);
    reject_unknown(cfg, {"schema_version", "command", "h", "n", "npaths", "method", "seed",
                         "fine_factor", "paths_in_csv", "compare_methods"},
                   "top level");
    if (string_or(cfg, "command", "mbm") != "mbm")
        throw UsageError("config: command field does not say 'mbm'");
    if (!cfg.contains("h")) throw UsageError("config: mbm needs an 'h' block");
    const RegularityFunction h = parse_regularity(cfg["h"], "h");
    const auto n = static_cast<std::size_t>(uint_or(cfg, "n", 16));
    const auto npaths = static_cast<std::size_t>(uint_or(cfg, "npaths", 10000));
    const auto fine_factor = static_cast<std::size_t>(uint_or(cfg, "fine_factor", 8));
    const std::uint64_t seed = args.seed_override.value_or(uint_or(cfg, "seed", 1));
    const std::string method_name = string_or(cfg, "method", "cholesky");
    if (method_name != "cholesky" && method_name != "kernel")
        throw UsageError("config: method must be cholesky|kernel");
    const SamplingMethod method =
        method_name == "kernel" ? SamplingMethod::kernel : SamplingMethod::cholesky;
    const bool compare_methods = cfg.value("compare_methods", false);
    const auto paths_in_csv = static_cast<std::size_t>(uint_or(cfg, "paths_in_csv", 64));
    if (npaths < 100) throw UsageError("config: mbm needs npaths >= 100");

    json resolved = cfg;
    resolved["command"] = "mbm";
    resolved["h"] = regularity_to_json(cfg["h"]);
    resolved["n"] = n;
    resolved["npaths"] = npaths;
    resolved["method"] = method_name;
    resolved["fine_factor"] = fine_factor;
    resolved["seed"] = seed;
    resolved["paths_in_csv"] = paths_in_csv;
    resolved["compare_methods"] = compare_methods;
    resolved["threads"] = args.threads;
    write_resolved(resolved, args);

    const GaussianDriver driver{seed, n * fine_factor, h.horizon()};
    const std::vector<SampledPath> paths =
        sample_rlmbm(h, n, driver, npaths, method, args.threads);
    write_path_csv(args.out_dir / "paths.csv", paths, paths_in_csv);

    const CovarianceMatrix oracle = covariance_matrix(h, n);
    const CovarianceMatrix emp = empirical_covariance(paths, args.threads);

    GateTable gates;
    io::CsvWriter cov({"i", "j", "t_i", "t_j", "oracle", "empirical", "stderr", "z"});
    double worst_z = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double se = emp.stderrs(i, j);
            const double z =
                se > 0.0 ? (emp.values(i, j) - oracle.values(i, j)) / se : 0.0;
            worst_z = std::max(worst_z, std::abs(z));
            cov.add_row(std::vector<double>{static_cast<double>(i), static_cast<double>(j),
                                            oracle.times[i], oracle.times[j], oracle.values(i, j),
                                            emp.values(i, j), se, z});
        }
    }
    cov.write(args.out_dir / "covariance.csv");
    gates.add("covariance_max_abs_z", worst_z, 1.0, 3.0, worst_z <= 3.0);

    if (compare_methods) {
        const SamplingMethod other =
            method == SamplingMethod::kernel ? SamplingMethod::cholesky : SamplingMethod::kernel;
        const std::vector<SampledPath> paths2 =
            sample_rlmbm(h, n, driver, npaths, other, args.threads, npaths);
        const CovarianceMatrix emp2 = empirical_covariance(paths2, args.threads);
        double worst = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double se = std::sqrt(emp.stderrs(i, j) * emp.stderrs(i, j) +
                                            emp2.stderrs(i, j) * emp2.stderrs(i, j));
                if (se > 0.0)
                    worst = std::max(worst,
                                     std::abs(emp.values(i, j) - emp2.values(i, j)) / se);
            }
        gates.add("method_agreement_max_abs_z", worst, 1.0, 3.0, worst <= 3.0);
    }

    // diagonal plot: oracle vs empirical variance with error bars
    io::Series so{"oracle diag", {}, {}, {}, "#1f77b4"};
    io::Series se_{"empirical diag", {}, {}, {}, "#d62728"};
    for (std::size_t i = 0; i <= n; ++i) {
        so.x.push_back(oracle.times[i]);
        so.y.push_back(oracle.values(i, i));
        se_.x.push_back(emp.times[i]);
        se_.y.push_back(emp.values(i, i));
        se_.yerr.push_back(3.0 * emp.stderrs(i, i));
    }
    io::write_text(args.out_dir / "covariance_diagonal.svg",
                   io::svg_line_plot("variance against the oracle", {so, se_}));

    write_gates(gates, args, "mbm");
    return gates.all_pass ? exit_ok : exit_gate_failure;
}

// --- girsanov command -----------------------------------------------------------

int cmd_girsanov(const CommonArgs& args) {
    json cfg = load_config(args);
    reject_unknown(cfg, {"schema_version", "command", "h", "drift", "x0", "n", "npaths",
                         "fine_factor", "seed", "epsilon", "p", "novikov_lambda", "checks",
                         "lattice", "krylov_rho"},
                   "top level");
    if (string_or(cfg, "command", "girsanov") != "girsanov")
        throw UsageError("config: command field does not say 'girsanov'");
    if (!cfg.contains("h")) throw UsageError("config: girsanov needs an 'h' block");
    if (!cfg.contains("drift")) throw UsageError("config: girsanov needs a 'drift' block");

    GirsanovRun run{parse_regularity(cfg["h"], "h"), parse_drift(cfg["drift"], "drift")};
    run.x0 = number_or(cfg, "x0", 0.0);
    run.segments = static_cast<std::size_t>(uint_or(cfg, "n", 256));
    run.npaths = static_cast<std::size_t>(uint_or(cfg, "npaths", 10000));
    run.fine_factor = static_cast<std::size_t>(uint_or(cfg, "fine_factor", 8));
    run.seed = args.seed_override.value_or(uint_or(cfg, "seed", 1));
    run.threads = args.threads;
    run.novikov_lambda = number_or(cfg, "novikov_lambda", 0.05);
    run.cfg.epsilon = number_or(cfg, "epsilon", 0.0);
    run.cfg.lp_exponent = number_or(cfg, "p", 2.0);

    std::set<std::string> checks{"mean_weight", "law_equivalence", "envelope"};
    if (cfg.contains("checks")) {
        if (!cfg["checks"].is_array()) throw UsageError("config: checks must be an array");
        checks.clear();
        for (const auto& c : cfg["checks"]) {
            const std::string s = c.get<std::string>();
            if (s != "mean_weight" && s != "law_equivalence" && s != "envelope" &&
                s != "novikov" && s != "krylov" && s != "lattice")
                throw UsageError("config: unknown check '" + s + "'");
            checks.insert(s);
        }
    }

    try {
        run.validate();
    } catch (const ConfigError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }

    json resolved = cfg;
    resolved["command"] = "girsanov";
    resolved["h"] = regularity_to_json(cfg["h"]);
    resolved["x0"] = run.x0;
    resolved["n"] = run.segments;
    resolved["npaths"] = run.npaths;
    resolved["fine_factor"] = run.fine_factor;
    resolved["seed"] = run.seed;
    resolved["novikov_lambda"] = run.novikov_lambda;
    resolved["epsilon"] = run.cfg.effective_epsilon(run.order());
    resolved["p"] = run.cfg.lp_exponent;
    resolved["checks"] = json::array();
    for (const auto& c : checks) resolved["checks"].push_back(c);
    resolved["threads"] = args.threads;
    write_resolved(resolved, args);

    GateTable gates;
    json reports;

    if (checks.count("mean_weight")) {
        const WeightSummary w = mc_mean_weight(run);
        gates.add("mean_weight_abs_err", std::abs(w.mean - 1.0), w.stderr_, 3.0 * w.stderr_,
                  w.pass);
    }
    if (checks.count("envelope")) {
        // euler_weak_solution throws if any trajectory escapes the envelope
        const auto xs = euler_weak_solution(run);
        write_path_csv(args.out_dir / "euler_paths.csv", xs, 64);
        gates.add("gronwall_envelope", 0.0, 0.0, 0.0, true);
    }
    if (checks.count("law_equivalence")) {
        for (const auto& r : law_equivalence_battery(run, phi_battery()))
            gates.add("law_equiv_" + r.phi_name, r.gap, r.combined_se, 3.0 * r.combined_se,
                      r.pass);
    }
    if (checks.count("novikov")) {
        const NovikovReport nr = novikov_check(run);
        reports["novikov"] = {{"lambda", nr.lambda},
                              {"sup_batch1", nr.sup1},
                              {"sup_batch2", nr.sup2},
                              {"stable", nr.stable}};
    }
    if (checks.count("krylov")) {
        const double rho = number_or(cfg, "krylov_rho", run.h.range_bounds().second + 1.5);
        json krylov = json::array();
        for (const auto& g : {OccupationTestFn::box(run.h.horizon(), 1.0),
                              OccupationTestFn::gaussian_bump(run.h.horizon(), 0.5)}) {
            GirsanovRun run2 = run;
            run2.seed = run.seed + 77777;
            const KrylovResult a = krylov_ratio(run, g, rho);
            const KrylovResult b = krylov_ratio(run2, g, rho);
            const bool stable =
                std::abs(a.ratio - b.ratio) <= 0.5 * std::max(std::abs(a.ratio), std::abs(b.ratio));
            krylov.push_back({{"g", a.g_name},
                              {"rho", rho},
                              {"ratio_batch1", a.ratio},
                              {"ratio_batch2", b.ratio},
                              {"stable", stable}});
        }
        reports["krylov"] = krylov;
    }
    if (checks.count("lattice")) {
        json lat = cfg.value("lattice", json::object());
        reject_unknown(lat, {"R", "n", "kmax", "paths"}, "lattice");
        const double R = number_or(lat, "R", 2.0);
        const auto nl = static_cast<std::size_t>(uint_or(lat, "n", 2));
        const auto kmax = static_cast<std::size_t>(uint_or(lat, "kmax", 5));
        GirsanovRun lrun = run;
        lrun.npaths = static_cast<std::size_t>(uint_or(lat, "paths", 100));
        const ComparisonReport rep =
            comparison_monotonicity_check(run.drift, R, nl, kmax, lrun);
        gates.add("lattice_monotone_k", rep.max_violation_k, 0.0, rep.tolerance, rep.monotone_k);
        gates.add("lattice_monotone_n", rep.max_violation_n, 0.0, rep.tolerance, rep.monotone_n);
    }

    write_gates(gates, args, "girsanov");
    if (!reports.is_null()) {
        std::ofstream r(args.out_dir / "reports.json");
        r << reports.dump(2) << "\n";
    }
    return gates.all_pass ? exit_ok : exit_gate_failure;
}

// --- report command --------------------------------------------------------------

int cmd_report(const CommonArgs& args) {
    json cfg = load_config(args);
    reject_unknown(cfg, {"schema_version", "command", "inputs"}, "top level");
    if (string_or(cfg, "command", "report") != "report")
        throw UsageError("config: command field does not say 'report'");
    if (!cfg.contains("inputs") || !cfg["inputs"].is_string())
        throw UsageError("config: report needs an 'inputs' directory");
    const fs::path inputs(cfg["inputs"].get<std::string>());
    if (!fs::is_directory(inputs)) throw UsageError("report: inputs is not a directory");

    // collect gate summaries from prior runs
    std::vector<fs::path> summaries;
    for (const auto& entry : fs::recursive_directory_iterator(inputs))
        if (entry.is_regular_file() && entry.path().filename() == "summary.json")
            summaries.push_back(entry.path());
    std::sort(summaries.begin(), summaries.end());
    if (summaries.empty()) throw UsageError("report: no summary.json found under inputs");

    json resolved = cfg;
    resolved["command"] = "report";
    resolved["threads"] = args.threads;
    write_resolved(resolved, args);

    io::CsvWriter consolidated({"source", "command", "gate", "estimate", "stderr", "threshold",
                                "pass"});
    io::Series est{"gate estimates", {}, {}, {}, "#1f77b4"};
    bool all_pass = true;
    double idx = 0.0;
    for (const auto& file : summaries) {
        std::ifstream in(file);
        json s;
        in >> s;
        for (const auto& g : s["gates"]) {
            consolidated.add_row(std::vector<std::string>{
                file.parent_path().filename().string(), s.value("command", "?"),
                g.value("gate", "?"), io::format_number(g.value("estimate", 0.0)),
                io::format_number(g.value("stderr", 0.0)),
                io::format_number(g.value("threshold", 0.0)), g.value("pass", false) ? "1" : "0"});
            est.x.push_back(idx += 1.0);
            est.y.push_back(g.value("estimate", 0.0));
            est.yerr.push_back(g.value("stderr", 0.0));
            all_pass = all_pass && g.value("pass", false);
        }
    }
    consolidated.write(args.out_dir / "consolidated.csv");
    io::write_text(args.out_dir / "gate_estimates.svg",
                   io::svg_line_plot("gate estimates with standard errors", {est}));

    // re-plot any path files found
    int plot_idx = 0;
    for (const auto& entry : fs::recursive_directory_iterator(inputs)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name != "paths.csv" && name != "euler_paths.csv") continue;
        std::ifstream in(entry.path());
        std::string line;
        std::getline(in, line); // header carries the grid times
        std::vector<double> times;
        for (std::size_t pos = 0; pos < line.size();) {
            auto next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            const std::string cell = line.substr(pos, next - pos);
            times.push_back(std::stod(cell.substr(cell.find('=') + 1)));
            pos = next + 1;
        }
        std::vector<io::Series> series;
        const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
        for (int k = 0; k < 5 && std::getline(in, line); ++k) {
            io::Series s{"path " + std::to_string(k), times, {}, {}, colors[k]};
            for (std::size_t pos = 0; pos < line.size();) {
                auto next = line.find(',', pos);
                if (next == std::string::npos) next = line.size();
                s.y.push_back(std::stod(line.substr(pos, next - pos)));
                pos = next + 1;
            }
            series.push_back(std::move(s));
        }
        io::write_text(args.out_dir / ("paths_" + std::to_string(plot_idx++) + ".svg"),
                       io::svg_line_plot("sampled paths (" + name + ")", series));
    }

    json summary;
    summary["command"] = "report";
    summary["sources"] = summaries.size();
    summary["all_pass"] = all_pass;
    std::ofstream out(args.out_dir / "summary.json");
    out << summary.dump(2) << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"variable-order fractional calculus and multifractional Brownian motion driver"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string command;
    for (const char* name : {"operator", "mbm", "girsanov", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", args.config_path, "JSON experiment config")->required();
        sub->add_option("--out", args.out_dir, "output directory")->required();
        sub->add_option("--seed", [&args](const CLI::results_t& r) {
            args.seed_override = std::stoull(r.front());
            return true;
        }, "override the config seed");
        sub->add_option("--threads", args.threads, "worker threads (results are independent of this)");
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << "\n";
        return e.get_exit_code() == 0 ? exit_ok : exit_usage;
    }

    try {
        fs::create_directories(args.out_dir);
        if (command == "operator") return cmd_operator(args);
        if (command == "mbm") return cmd_mbm(args);
        if (command == "girsanov") return cmd_girsanov(args);
        return cmd_report(args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return exit_gate_failure;
    }
}
