#pragma once

#include "bending/analysis.hpp"
#include "bending/assembly.hpp"
#include "bending/curves.hpp"
#include "bending/flow.hpp"
#include "bending/stationary.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bending {

/// How a cell computes its discrete solution.
enum class SolveMethod { L2Flow, H2Flow, Newton };

/// Error measures reported per cell.
enum class Norm { H2, L2, H1 };

inline std::string_view to_string(SolveMethod m) {
    switch (m) {
    case SolveMethod::L2Flow: return "l2";
    case SolveMethod::H2Flow: return "h2";
    default: return "newton";
    }
}
inline std::string_view to_string(Norm n) {
    switch (n) {
    case Norm::H2: return "h2";
    case Norm::L2: return "l2";
    default: return "h1";
    }
}
inline SolveMethod parse_method(std::string_view s) {
    if (s == "l2") return SolveMethod::L2Flow;
    if (s == "h2") return SolveMethod::H2Flow;
    if (s == "newton") return SolveMethod::Newton;
    throw std::invalid_argument("unknown flow '" + std::string(s) + "' (expected l2, h2 or newton)");
}
inline Norm parse_norm(std::string_view s) {
    if (s == "h2") return Norm::H2;
    if (s == "l2") return Norm::L2;
    if (s == "h1") return Norm::H1;
    throw std::invalid_argument("unknown norm '" + std::string(s) + "' (expected h2, l2 or h1)");
}

struct ExperimentSpec {
    /// circle, helix, oval, oval-h2 or custom.
    std::string name = "circle";
    /// Curve used by `custom` (any problem known to curves::make_problem).
    std::string curve = "circle";
    std::vector<std::size_t> mesh_sizes = {10, 20, 40, 80, 160};
    std::vector<double> taus = {0.1, 0.05};
    double T = 50.0;
    SolveMethod method = SolveMethod::L2Flow;
    std::vector<ConstraintVariant> constraints = {ConstraintVariant::P2};
    Initializer initializer = Initializer::J3;
    std::vector<Norm> norms = {Norm::H2};
    /// Overrides the problem's boundary conditions when set.
    std::optional<BoundaryConditions> bc;
    double stationarity_tol = 0.0;
    std::size_t threads = 1;
    /// Keep every k-th flow iterate per cell; 0 disables.
    std::size_t snapshot_stride = 0;

    void validate() const {
        if (mesh_sizes.empty()) throw std::invalid_argument("experiment: empty mesh list");
        for (auto m : mesh_sizes)
            if (m == 0) throw std::invalid_argument("experiment: mesh sizes must be positive");
        if (method != SolveMethod::Newton && taus.empty()) throw std::invalid_argument("experiment: empty tau list");
        for (double t : taus)
            if (!(t > 0.0)) throw std::invalid_argument("experiment: tau must be positive");
        if (!(T >= 0.0)) throw std::invalid_argument("experiment: T must be nonnegative");
        if (constraints.empty()) throw std::invalid_argument("experiment: empty constraint list");
        if (norms.empty()) throw std::invalid_argument("experiment: empty norm list");
        if (threads == 0) throw std::invalid_argument("experiment: threads must be positive");
        if (bc) bc->validate(curves::make_problem(curve).dim());
    }

    [[nodiscard]] std::string echo() const {
        std::ostringstream os;
        os << "experiment=" << name << "\ncurve=" << curve << "\nM=";
        for (std::size_t i = 0; i < mesh_sizes.size(); ++i) os << (i ? "," : "") << mesh_sizes[i];
        os << "\ntau=";
        for (std::size_t i = 0; i < taus.size(); ++i) os << (i ? "," : "") << taus[i];
        os << "\nT=" << T << "\nflow=" << to_string(method) << "\nconstraint=";
        for (std::size_t i = 0; i < constraints.size(); ++i) os << (i ? "," : "") << to_string(constraints[i]);
        os << "\ninitializer=" << to_string(initializer) << "\nnorms=";
        for (std::size_t i = 0; i < norms.size(); ++i) os << (i ? "," : "") << to_string(norms[i]);
        os << '\n';
        return os.str();
    }
};

/// Defaults of the built-in experiments.
inline ExperimentSpec named_experiment(const std::string& name) {
    ExperimentSpec s;
    s.name = name;
    if (name == "circle" || name == "helix") {
        s.curve = name;
        s.taus = {1.0 / 10, 1.0 / 20};
        s.T = 50.0;
    } else if (name == "oval") {
        s.curve = "oval";
        s.taus = {1.0 / 2000, 1.0 / 4000};
        s.T = 5000.0;
    } else if (name == "oval-h2") {
        s.curve = "oval";
        s.method = SolveMethod::H2Flow;
        s.taus = {1.0 / 200, 1.0 / 400};
        s.T = 50.0;
    } else if (name == "custom") {
        s.curve = "circle";
    } else {
        throw std::invalid_argument("unknown experiment '" + name + "' (expected circle, helix, oval, oval-h2 or custom)");
    }
    return s;
}

/// Whether the spec is the long oval L2 run (T = 5000).
inline bool is_long_run(const ExperimentSpec& s) { return s.curve == "oval" && s.method == SolveMethod::L2Flow && s.T > 1000.0; }

/// Outcome of one (mesh, constraint, tau) cell.
struct CellResult {
    std::size_t M = 0;
    ConstraintVariant constraint = ConstraintVariant::P2;
    double tau = 0.0;
    std::vector<std::optional<double>> errors; ///< one per requested norm
    std::string failure;
    std::size_t steps = 0;
    int newton_iterations = 0;
    double max_energy_defect = 0.0;
    bool energy_monotone = true;
    double final_violation = 0.0;
    double final_velocity = 0.0;
    std::vector<Snapshot> snapshots;

    [[nodiscard]] bool ok() const { return failure.empty(); }
};

struct TableColumn {
    std::string label;
    std::vector<std::optional<double>> errors;
    /// eoc[i] between rows i-1 and i; eoc[0] is always empty.
    std::vector<std::optional<double>> eoc;
};

struct ExperimentTable {
    std::vector<double> hs;
    std::vector<TableColumn> columns;
    std::vector<CellResult> cells;
    std::string spec_echo;
    double wall_seconds = 0.0;

    [[nodiscard]] bool complete() const {
        for (const auto& c : cells)
            if (!c.ok()) return false;
        return true;
    }
    [[nodiscard]] const TableColumn& column(const std::string& label) const {
        for (const auto& c : columns)
            if (c.label == label) return c;
        throw std::out_of_range("ExperimentTable: no column '" + label + "'");
    }
};

/// Fills eoc entries of a column from its own errors.
inline void compute_eoc(TableColumn& col, const std::vector<double>& hs) {
    col.eoc.assign(col.errors.size(), std::nullopt);
    for (std::size_t i = 1; i < col.errors.size(); ++i) {
        const auto& e0 = col.errors[i - 1];
        const auto& e1 = col.errors[i];
        if (e0 && e1 && *e0 > 0.0 && *e1 > 0.0) col.eoc[i] = eoc({*e0, *e1}, {hs[i - 1], hs[i]}).front();
    }
}

namespace detail {

inline std::string column_label(ConstraintVariant c, double tau, Norm n, SolveMethod m) {
    char buf[96];
    if (m == SolveMethod::Newton)
        std::snprintf(buf, sizeof buf, "%s_newton_%s", std::string(to_string(c)).c_str(), std::string(to_string(n)).c_str());
    else
        std::snprintf(buf, sizeof buf, "%s_tau=%g_%s", std::string(to_string(c)).c_str(), tau, std::string(to_string(n)).c_str());
    return buf;
}

inline std::vector<double> cell_errors(const HermiteCurve& Z, const ExactSolution& exact, const SystemMatrices& mats,
                                       const std::vector<Norm>& norms) {
    std::vector<double> out;
    std::optional<WeakErrors> weak;
    for (const Norm n : norms) {
        if (n == Norm::H2) {
            out.push_back(h2_error(Z, exact, mats.bending));
            continue;
        }
        if (!weak) weak = weak_errors(Z, exact, mats);
        out.push_back(n == Norm::L2 ? weak->l2 : weak->h1);
    }
    return out;
}

/// Start pair (I_{h,3} u, I_{h,k,0} lambda) of the Newton iteration.
inline SaddlePoint interpolant_pair(const curves::Problem& prob, const Mesh1D& mesh, ConstraintVariant variant) {
    SaddlePoint p{interp_hermite(prob.exact.u, mesh), Vec(), variant};
    if (prob.exact.lambda)
        p.lambda = interpolate_multiplier(mesh, variant, *prob.exact.lambda);
    else
        p.lambda = multiplier_from_curvature(p.u, variant);
    return p;
}

inline CellResult run_cell(const ExperimentSpec& spec, const curves::Problem& prob, const BoundaryConditions& bc, std::size_t M,
                           ConstraintVariant constraint, double tau) {
    CellResult cell;
    cell.M = M;
    cell.constraint = constraint;
    cell.tau = tau;
    cell.errors.assign(spec.norms.size(), std::nullopt);
    try {
        const Mesh1D mesh = build_uniform_mesh(prob.a, prob.b, M);
        const SystemMatrices mats = assemble_matrices(mesh, prob.dim());
        std::optional<HermiteCurve> result;
        if (spec.method == SolveMethod::Newton) {
            const NewtonResult nr = newton_solve(interpolant_pair(prob, mesh, constraint), bc, mats);
            cell.newton_iterations = nr.iterations;
            cell.final_violation = constraint_violation(nr.solution.u, constraint);
            result = nr.solution.u;
        } else {
            FlowConfig cfg;
            cfg.tau = tau;
            cfg.T = spec.T;
            cfg.variant = spec.method == SolveMethod::H2Flow ? FlowVariant::H2 : FlowVariant::L2;
            cfg.constraint = constraint;
            cfg.bc = bc;
            cfg.stationarity_tol = spec.stationarity_tol;
            cfg.snapshot_stride = spec.snapshot_stride;
            FlowRun fr = run(cfg, init_state(prob.start, mesh, constraint, spec.initializer, bc), mats);
            cell.steps = fr.steps_taken;
            cell.max_energy_defect = fr.max_energy_defect;
            cell.energy_monotone = fr.energy_monotone;
            cell.final_violation = fr.final_state.active_violation;
            cell.final_velocity = fr.final_state.last_velocity_norm;
            result = fr.final_state.Z;
            cell.snapshots = std::move(fr.snapshots);
        }
        const auto errs = cell_errors(*result, prob.exact, mats, spec.norms);
        for (std::size_t k = 0; k < errs.size(); ++k) cell.errors[k] = errs[k];
    } catch (const std::exception& e) {
        cell.failure = e.what();
    }
    return cell;
}

/// Runs `count` independent jobs on up to `threads` workers; job i writes slot i only.
template <typename Job>
void parallel_for(std::size_t count, std::size_t threads, Job&& job) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
}

} // namespace detail

/// Runs every (mesh, constraint, tau) cell and tabulates the requested errors
/// with their EOCs. Cell failures are recorded, not thrown.
inline ExperimentTable run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const curves::Problem prob = curves::make_problem(spec.curve);
    const BoundaryConditions bc = spec.bc.value_or(prob.bc);

    const std::vector<double> taus = spec.method == SolveMethod::Newton ? std::vector<double>{0.0} : spec.taus;
    struct Key {
        std::size_t M;
        ConstraintVariant c;
        double tau;
    };
    std::vector<Key> keys;
    for (std::size_t M : spec.mesh_sizes)
        for (ConstraintVariant c : spec.constraints)
            for (double tau : taus) keys.push_back({M, c, tau});

    ExperimentTable table;
    table.cells.resize(keys.size());
    detail::parallel_for(keys.size(), spec.threads, [&](std::size_t i) {
        table.cells[i] = detail::run_cell(spec, prob, bc, keys[i].M, keys[i].c, keys[i].tau);
    });

    for (std::size_t M : spec.mesh_sizes) table.hs.push_back((prob.b - prob.a) / static_cast<double>(M));
    const std::size_t per_row = spec.constraints.size() * taus.size();
    for (std::size_t ci = 0; ci < spec.constraints.size(); ++ci)
        for (std::size_t ti = 0; ti < taus.size(); ++ti)
            for (std::size_t ni = 0; ni < spec.norms.size(); ++ni) {
                TableColumn col;
                col.label = detail::column_label(spec.constraints[ci], taus[ti], spec.norms[ni], spec.method);
                for (std::size_t mi = 0; mi < spec.mesh_sizes.size(); ++mi)
                    col.errors.push_back(table.cells[mi * per_row + ci * taus.size() + ti].errors[ni]);
                compute_eoc(col, table.hs);
                table.columns.push_back(std::move(col));
            }
    table.spec_echo = spec.echo();
    table.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

/// Headerless CSV: h, then error/eoc pairs per column. Errors use 4
/// significant digits in scientific notation, EOCs 2 decimals, "--" where no
/// EOC exists and "fail" for failed cells.
inline std::string format_csv(const ExperimentTable& table) {
    std::string out;
    char buf[64];
    for (std::size_t r = 0; r < table.hs.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%.3e", table.hs[r]);
        out += buf;
        for (const auto& col : table.columns) {
            if (col.errors[r]) {
                std::snprintf(buf, sizeof buf, ",%.3e", *col.errors[r]);
                out += buf;
            } else {
                out += ",fail";
            }
            if (col.eoc[r]) {
                std::snprintf(buf, sizeof buf, ",%.2f", *col.eoc[r]);
                out += buf;
            } else {
                out += ",--";
            }
        }
        out += '\n';
    }
    return out;
}

/// Splits CSV text into rows of cells.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline std::string meta_path(const std::string& csv_path) {
    const auto dot = csv_path.find_last_of('.');
    const auto slash = csv_path.find_last_of('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return csv_path.substr(0, dot) + ".meta";
    return csv_path + ".meta";
}

inline std::string format_meta(const ExperimentTable& table) {
    std::ostringstream os;
    os << table.spec_echo;
    os << "columns=";
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i].label;
    os << "\nwall_seconds=" << table.wall_seconds << '\n';
    for (const auto& c : table.cells) {
        os << "cell M=" << c.M << " constraint=" << to_string(c.constraint) << " tau=" << c.tau;
        if (c.ok())
            os << " steps=" << c.steps << " newton_iterations=" << c.newton_iterations << " final_violation=" << c.final_violation
               << " max_energy_defect=" << c.max_energy_defect;
        else
            os << " failure=\"" << c.failure << '"';
        os << '\n';
    }
    return os.str();
}

/// Writes the CSV and its ".meta" companion. Throws std::runtime_error if
/// either file cannot be written.
inline void emit_csv(const ExperimentTable& table, const std::string& path) {
    for (const auto& [p, text] : {std::pair{path, format_csv(table)}, std::pair{meta_path(path), format_meta(table)}}) {
        std::ofstream os(p);
        if (!os) throw std::runtime_error("emit_csv: cannot open '" + p + "' for writing");
        os << text;
        if (!os) throw std::runtime_error("emit_csv: failed writing '" + p + "'");
    }
}

/// L2 norm of d_t Z^1 after one flow step from the chosen initializer.
inline double stationarity_check(const std::string& name, ConstraintVariant constraint, Initializer init, std::size_t M = 20,
                                 double tau = 0.1) {
    const curves::Problem prob = curves::make_problem(name);
    const Mesh1D mesh = build_uniform_mesh(prob.a, prob.b, M);
    const SystemMatrices mats = assemble_matrices(mesh, prob.dim());
    FlowConfig cfg;
    cfg.tau = tau;
    cfg.constraint = constraint;
    cfg.bc = prob.bc;
    return step(init_state(prob.start, mesh, constraint, init, prob.bc), cfg, mats).last_velocity_norm;
}

struct DiagnosticsRow {
    std::size_t M = 0;
    double h = 0.0;
    double residual_dual = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    int newton_iterations = 0;
    double newton_h2_distance = 0.0;
};

/// Residual, Brezzi constants and Newton iteration count at the interpolant
/// pair of the exact solution, per mesh.
inline std::vector<DiagnosticsRow> run_diagnostics(const std::string& name, const std::vector<std::size_t>& mesh_sizes,
                                                   ConstraintVariant variant) {
    const curves::Problem prob = curves::make_problem(name);
    std::vector<DiagnosticsRow> rows;
    for (std::size_t M : mesh_sizes) {
        const Mesh1D mesh = build_uniform_mesh(prob.a, prob.b, M);
        const SystemMatrices mats = assemble_matrices(mesh, prob.dim());
        const DiscreteNorms norms = build_norms(mats, prob.bc, variant);
        const SaddlePoint p0 = detail::interpolant_pair(prob, mesh, variant);
        DiagnosticsRow row;
        row.M = M;
        row.h = mesh.h();
        row.residual_dual = residual_dual_norm(residual(p0, prob.bc, mats), norms);
        row.alpha = coercivity_estimate(p0, prob.bc, mats, norms);
        row.beta = infsup_estimate(p0, prob.bc, mats, norms);
        const NewtonResult nr = newton_solve(p0, prob.bc, mats);
        row.newton_iterations = nr.iterations;
        const Vec e = nr.solution.u.dofs() - p0.u.dofs();
        row.newton_h2_distance = std::sqrt(e.dot(mats.h2_gram() * e));
        rows.push_back(row);
    }
    return rows;
}

inline std::string format_diagnostics_csv(const std::vector<DiagnosticsRow>& rows) {
    std::string out = "M,h,residual_dual,alpha,beta,newton_iters\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.6e,%.6e,%.6e,%.6e,%d\n", r.M, r.h, r.residual_dual, r.alpha, r.beta, r.newton_iterations);
        out += buf;
    }
    return out;
}

/// Interpolation errors of I_{h,3} sin on [0, 2 pi] in L-infinity, L2, H^1
/// and H^2 (seminorms), measured with 8-point composite Gauss per element.
struct InterpolationErrors {
    double linf = 0.0, l2 = 0.0, h1 = 0.0, h2 = 0.0;
};

inline InterpolationErrors interpolation_errors(const FunctionOracle& f, const Mesh1D& mesh) {
    static constexpr std::array<double, 8> gx = {0.019855071751231856, 0.10166676129318664, 0.2372337950418355, 0.40828267875217511,
                                                 0.59171732124782489, 0.7627662049581645, 0.89833323870681336, 0.98014492824876814};
    static constexpr std::array<double, 8> gw = {0.050614268145188129, 0.11119051722668724, 0.15685332293894364, 0.18134189168918099,
                                                 0.18134189168918099, 0.15685332293894364, 0.11119051722668724, 0.050614268145188129};
    const HermiteCurve c = interp_hermite(f, mesh);
    InterpolationErrors e;
    for (std::size_t el = 0; el < mesh.elements(); ++el) {
        const double h = mesh.length(el);
        for (int sub = 0; sub < 4; ++sub)
            for (std::size_t q = 0; q < gx.size(); ++q) {
                const double x = mesh.node(el) + h * (sub + gx[q]) / 4.0;
                const double w = gw[q] * h / 4.0;
                const double d0 = (f(x, 0) - c.eval_in_element(el, x, 0)).norm();
                e.linf = std::max(e.linf, d0);
                e.l2 += w * d0 * d0;
                e.h1 += w * (f(x, 1) - c.eval_in_element(el, x, 1)).squaredNorm();
                e.h2 += w * (f(x, 2) - c.eval_in_element(el, x, 2)).squaredNorm();
            }
        e.linf = std::max(e.linf, (f(mesh.node(el), 0) - c.value(el)).norm());
    }
    e.l2 = std::sqrt(e.l2);
    e.h1 = std::sqrt(e.h1);
    e.h2 = std::sqrt(e.h2);
    return e;
}

inline FunctionOracle sine_oracle() {
    return {1, [](double x, int k) -> Vec {
                Vec v(1);
                switch (((k % 4) + 4) % 4) {
                case 0: v[0] = std::sin(x); break;
                case 1: v[0] = std::cos(x); break;
                case 2: v[0] = -std::sin(x); break;
                default: v[0] = -std::cos(x); break;
                }
                return v;
            }};
}

/// EOC table of I_{h,3} sin on [0, 2 pi] with columns linf, l2, h1, h2.
inline ExperimentTable interpolation_study(const std::vector<std::size_t>& mesh_sizes) {
    ExperimentTable t;
    const FunctionOracle f = sine_oracle();
    std::array<TableColumn, 4> cols;
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i].label = std::array{"linf", "l2", "h1", "h2"}[i];
    for (std::size_t M : mesh_sizes) {
        const Mesh1D mesh = build_uniform_mesh(0.0, 2 * curves::pi, M);
        const auto e = interpolation_errors(f, mesh);
        t.hs.push_back(mesh.h());
        cols[0].errors.push_back(e.linf);
        cols[1].errors.push_back(e.l2);
        cols[2].errors.push_back(e.h1);
        cols[3].errors.push_back(e.h2);
    }
    for (auto& c : cols) {
        compute_eoc(c, t.hs);
        t.columns.push_back(std::move(c));
    }
    t.spec_echo = "experiment=interp-study\n";
    return t;
}

} // namespace bending
