#pragma once

#include "bending/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace bending::cli {

/// Bad command line or config file; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Subcommand { Run, Stationarity, Diagnostics, InterpStudy };

struct CliConfig {
    Subcommand subcommand = Subcommand::Run;
    ExperimentSpec spec;
    std::optional<std::string> config_path;
    std::string out_dir;
    bool long_run = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double to_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

/// Accepts decimals and simple fractions such as 1/200.
inline double to_time(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return to_double(s);
    return to_double(s.substr(0, slash)) / to_double(s.substr(slash + 1));
}

inline std::size_t to_size(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("not a nonnegative integer: '" + s + "'");
    return std::stoul(s);
}

inline Vec to_vec(const std::string& s) {
    const auto parts = split(s);
    Vec v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_double(parts[i]);
    return v;
}

inline bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("not a boolean: '" + s + "'");
}

template <typename T, typename F>
std::vector<T> map_list(const std::string& s, F f) {
    std::vector<T> out;
    for (const auto& part : split(s)) out.push_back(f(part));
    return out;
}

/// Applies one override (shared by flags and config keys) to the spec.
inline void apply(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    auto& bc = spec.bc;
    auto ensure_bc = [&]() -> BoundaryConditions& {
        if (!bc) bc = BoundaryConditions{};
        return *bc;
    };
    if (key == "M") spec.mesh_sizes = map_list<std::size_t>(value, to_size);
    else if (key == "tau") spec.taus = map_list<double>(value, to_time);
    else if (key == "T") spec.T = to_time(value);
    else if (key == "flow") spec.method = parse_method(value);
    else if (key == "constraint") spec.constraints = map_list<ConstraintVariant>(value, [](const std::string& p) { return parse_constraint_variant(p); });
    else if (key == "initializer") spec.initializer = parse_initializer(value);
    else if (key == "norms") spec.norms = map_list<Norm>(value, [](const std::string& p) { return parse_norm(p); });
    else if (key == "curve") {
        curves::make_problem(value);
        spec.curve = value;
    }
    else if (key == "threads") spec.threads = to_size(value);
    else if (key == "snapshot_stride") spec.snapshot_stride = to_size(value);
    else if (key == "stationarity_tol") spec.stationarity_tol = to_double(value);
    else if (key == "bc.left.value") ensure_bc().left.value = to_vec(value);
    else if (key == "bc.left.derivative") ensure_bc().left.derivative = to_vec(value);
    else if (key == "bc.right.value") ensure_bc().right.value = to_vec(value);
    else if (key == "bc.right.derivative") ensure_bc().right.derivative = to_vec(value);
    else if (key == "bc.periodic") ensure_bc().periodic = to_bool(value);
    else throw std::invalid_argument("unknown key: " + key);
}

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {"experiment",         "M",                 "tau",           "T",
                                               "flow",               "constraint",        "initializer",   "norms",
                                               "curve",              "threads",           "snapshot_stride", "stationarity_tol",
                                               "bc.left.value",      "bc.left.derivative", "bc.right.value", "bc.right.derivative",
                                               "bc.periodic"};
    return keys;
}

} // namespace detail

/// Reads a key=value file. Blank lines and lines starting with '#' are
/// skipped; `experiment` is required and selects the defaults the other keys
/// override.
inline ExperimentSpec load_config_text(const std::string& text, const std::string& origin = "config") {
    std::map<std::string, std::pair<std::string, int>> entries;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        const auto where = origin + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw UsageError(where + "expected key=value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (!detail::config_keys().count(key)) throw UsageError(where + "unknown key: " + key);
        if (entries.count(key)) throw UsageError(where + "duplicate key: " + key);
        entries[key] = {value, lineno};
    }
    const auto exp = entries.find("experiment");
    if (exp == entries.end()) throw UsageError(origin + ": missing key: experiment");
    ExperimentSpec spec;
    try {
        spec = named_experiment(exp->second.first);
    } catch (const std::exception& e) {
        throw UsageError(origin + ":" + std::to_string(exp->second.second) + ": " + e.what());
    }
    for (const auto& [key, entry] : entries) {
        if (key == "experiment") continue;
        try {
            detail::apply(spec, key, entry.first);
        } catch (const std::exception& e) {
            throw UsageError(origin + ":" + std::to_string(entry.second) + ": " + key + ": " + e.what());
        }
    }
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw UsageError(origin + ": " + e.what());
    }
    return spec;
}

inline ExperimentSpec load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str(), path);
}

/// Output directory: --out, else $BENDING_OUT_DIR, else "results".
inline std::string resolve_out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("BENDING_OUT_DIR"); env && *env) return env;
    return "results";
}

/// Parses argv (without the program name). Throws UsageError naming the
/// offending flag.
inline CliConfig parse_args(const std::vector<std::string>& args) {
    CLI::App app{"Bending-energy stationary points of inextensible curves"};
    app.require_subcommand(1);

    std::string experiment, config, M, tau, T, flow, constraint, initializer, norms, out, curve;
    std::size_t stride = 0, threads = 0;
    bool long_run = false, periodic = false, clamped = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("experiment", experiment, "circle, helix, oval, oval-h2 or custom");
        sub->add_option("--config", config, "key=value experiment file");
        sub->add_option("--M", M, "comma-separated mesh sizes");
        sub->add_option("--constraint", constraint, "p1 or p2 (comma list for run)");
        sub->add_option("--curve", curve, "curve of the custom experiment");
    };
    auto* run = app.add_subcommand("run", "run a convergence experiment and write CSV tables");
    add_common(run);
    run->add_option("--tau", tau, "comma-separated time steps (fractions allowed)");
    run->add_option("--T", T, "final time");
    run->add_option("--flow", flow, "l2, h2 or newton");
    run->add_option("--initializer", initializer, "j3 or j2");
    run->add_option("--norms", norms, "comma list of h2, l2, h1");
    run->add_option("--out", out, "output directory (default $BENDING_OUT_DIR or results)");
    run->add_flag("--long", long_run, "allow the long oval L2 run");
    run->add_option("--snapshot-stride", stride, "dump every k-th iterate as polylines");
    run->add_option("--threads", threads, "worker threads for table cells");
    run->add_flag("--periodic", periodic, "periodic boundary conditions");
    run->add_flag("--clamped", clamped, "clamp values and derivatives at both ends");

    auto* stat = app.add_subcommand("stationarity", "velocity norm of the first flow step");
    add_common(stat);
    stat->add_option("--tau", tau, "time step");
    stat->add_option("--initializer", initializer, "j3 or j2");

    auto* diag = app.add_subcommand("diagnostics", "residual, Brezzi constants and Newton iterations");
    add_common(diag);
    diag->add_option("--out", out, "output directory");

    auto* interp = app.add_subcommand("interp-study", "interpolation EOCs of the Hermite interpolant of sin");
    interp->add_option("--M", M, "comma-separated mesh sizes");
    interp->add_option("--out", out, "output directory");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        throw UsageError(app.help());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    CliConfig cfg;
    CLI::App* sub = app.get_subcommands().front();
    if (sub == run) cfg.subcommand = Subcommand::Run;
    else if (sub == stat) cfg.subcommand = Subcommand::Stationarity;
    else if (sub == diag) cfg.subcommand = Subcommand::Diagnostics;
    else cfg.subcommand = Subcommand::InterpStudy;
    cfg.long_run = long_run;

    if (cfg.subcommand == Subcommand::InterpStudy) {
        cfg.spec.mesh_sizes = {8, 16, 32, 64, 128};
    } else if (!config.empty()) {
        if (!experiment.empty()) throw UsageError("--config: conflicts with positional experiment '" + experiment + "'");
        cfg.config_path = config;
        cfg.spec = load_config(config);
    } else {
        if (experiment.empty()) throw UsageError("experiment: name or --config required");
        try {
            cfg.spec = named_experiment(experiment);
        } catch (const std::exception& e) {
            throw UsageError(std::string("experiment: ") + e.what());
        }
    }

    const auto set = [&](const char* flag, const char* key, const std::string& value) {
        if (value.empty()) return;
        try {
            detail::apply(cfg.spec, key, value);
        } catch (const std::exception& e) {
            throw UsageError(std::string(flag) + ": " + e.what());
        }
    };
    set("--M", "M", M);
    set("--tau", "tau", tau);
    set("--T", "T", T);
    set("--flow", "flow", flow);
    set("--constraint", "constraint", constraint);
    set("--initializer", "initializer", initializer);
    set("--norms", "norms", norms);
    set("--curve", "curve", curve);
    if (stride) cfg.spec.snapshot_stride = stride;
    if (threads) cfg.spec.threads = threads;
    if (periodic && clamped) throw UsageError("--periodic: conflicts with --clamped");
    if (periodic) {
        cfg.spec.bc = BoundaryConditions{};
        cfg.spec.bc->periodic = true;
    }
    if (clamped) {
        const auto prob = curves::make_problem(cfg.spec.curve);
        BoundaryConditions bc;
        bc.left.value = prob.exact.u(prob.a, 0);
        bc.left.derivative = prob.exact.u(prob.a, 1);
        bc.right.value = prob.exact.u(prob.b, 0);
        bc.right.derivative = prob.exact.u(prob.b, 1);
        cfg.spec.bc = bc;
    }
    if (cfg.subcommand != Subcommand::Run && cfg.spec.constraints.size() != 1)
        throw UsageError("--constraint: expects a single variant for this subcommand");
    try {
        cfg.spec.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    if (cfg.subcommand == Subcommand::Run && is_long_run(cfg.spec) && !cfg.long_run)
        throw UsageError("--long: the oval L2 run takes hours; pass --long to start it");
    cfg.out_dir = resolve_out_dir(out);
    return cfg;
}

} // namespace bending::cli
