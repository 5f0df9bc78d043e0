#pragma once

#include "bending/assembly.hpp"
#include "bending/saddle_solver.hpp"
#include "bending/splines.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bending {

/// Inner product of the gradient flow: L2 uses A = M + tau S, H2 uses
/// A = (1 + tau) S.
enum class FlowVariant { L2, H2 };

/// Initial interpolant: J3 integrates the quadratic interpolant of z0'
/// (satisfies the P2 constraint), J2 the linear one (piecewise quadratic
/// curve, satisfies the P1 constraint).
enum class Initializer { J3, J2 };

enum class KktBackend { Direct, Schur };

inline std::string_view to_string(FlowVariant v) { return v == FlowVariant::L2 ? "l2" : "h2"; }
inline std::string_view to_string(Initializer v) { return v == Initializer::J3 ? "j3" : "j2"; }

inline FlowVariant parse_flow_variant(std::string_view s) {
    if (s == "l2" || s == "L2") return FlowVariant::L2;
    if (s == "h2" || s == "H2") return FlowVariant::H2;
    throw std::invalid_argument("unknown flow variant '" + std::string(s) + "' (expected l2 or h2)");
}

inline Initializer parse_initializer(std::string_view s) {
    if (s == "j3" || s == "J3") return Initializer::J3;
    if (s == "j2" || s == "J2") return Initializer::J2;
    throw std::invalid_argument("unknown initializer '" + std::string(s) + "' (expected j3 or j2)");
}

struct FlowConfig {
    double tau = 0.1;
    double T = 50.0;
    FlowVariant variant = FlowVariant::L2;
    ConstraintVariant constraint = ConstraintVariant::P2;
    BoundaryConditions bc;
    /// Stop early once the L2 norm of d_t Z drops to this value; 0 disables.
    double stationarity_tol = 0.0;
    /// Keep every k-th iterate (and the last); 0 disables snapshots.
    std::size_t snapshot_stride = 0;
    KktBackend backend = KktBackend::Direct;

    /// N = round(T / tau).
    [[nodiscard]] std::size_t steps() const {
        if (!(tau > 0.0)) throw std::invalid_argument("FlowConfig: tau must be positive");
        if (T < 0.0) throw std::invalid_argument("FlowConfig: T must be nonnegative");
        return static_cast<std::size_t>(std::llround(T / tau));
    }
};

struct FlowState {
    std::size_t n = 0;
    HermiteCurve Z;
    double energy = 0.0;
    /// L2 norm of the last velocity d_t Z^n (0 before the first step).
    double last_velocity_norm = 0.0;
    /// max over N_2 of | |Z'(z)|^2 - 1 |.
    double constraint_violation = 0.0;
    /// Same, over the constraint points of the variant in use.
    double active_violation = 0.0;
};

/// Per-step diagnostics.
struct StepReport {
    Vec velocity;
    Vec multiplier;
    /// |E(Z^{n+1}) - E(Z^n) + tau |d|_{A - tau S}^2 + tau^2/2 |d''|^2| / max(E(Z^n), 1),
    /// with the energy change expanded exactly as tau (S Z).d + tau^2/2 d.S d.
    double energy_defect = 0.0;
    /// tau |d|_{A - tau S}^2, the guaranteed decrease.
    double dissipation = 0.0;
    /// max over constraint points of |(d_t Z)'(z) . (Z^n)'(z)|.
    double linearized_violation = 0.0;
};

namespace detail {

inline void refresh(FlowState& s, ConstraintVariant active, const SparseMatrix& bending) {
    s.energy = bending_energy(s.Z, bending);
    s.constraint_violation = constraint_violation(s.Z, ConstraintVariant::P2);
    s.active_violation = constraint_violation(s.Z, active);
}

inline void check_unit_speed(const FunctionOracle& z0, const Mesh1D& mesh, ConstraintVariant nodes) {
    for (const double x : constraint_nodes(mesh, nodes)) {
        const double dev = std::abs(z0(x, 1).norm() - 1.0);
        if (dev > 1e-8)
            throw std::invalid_argument("init_state: initial curve is not unit speed at x = " + std::to_string(x));
    }
}

} // namespace detail

/// Z^0 = J_{h,3} z0 or J_{h,2} z0. `z0` must provide orders 0 and 1.
inline FlowState init_state(const FunctionOracle& z0, const Mesh1D& mesh, ConstraintVariant constraint,
                            Initializer init, const BoundaryConditions& bc = {}) {
    bc.validate(z0.dim);
    detail::check_unit_speed(z0, mesh, init == Initializer::J3 ? ConstraintVariant::P2 : ConstraintVariant::P1);
    const Vec start = z0(mesh.a(), 0);
    HermiteCurve Z = init == Initializer::J3 ? interp_j3(start, derivative_of(z0), mesh) : interp_j2(start, derivative_of(z0), mesh);

    // J_{h,3} matches z0(b) only up to O(h^4), so right-end value targets are not checked.
    const auto close = [](const Vec& a, const Vec& b) { return (a - b).norm() <= 1e-8; };
    const std::size_t last = mesh.num_nodes() - 1;
    if ((bc.left.value && !close(*bc.left.value, Z.value(0))) || (bc.left.derivative && !close(*bc.left.derivative, Z.deriv(0))) ||
        (bc.right.derivative && !close(*bc.right.derivative, Z.deriv(last))))
        throw std::invalid_argument("init_state: initial curve violates the boundary conditions");

    FlowState s{0, std::move(Z)};
    const auto mats = assemble_matrices(mesh, z0.dim);
    detail::refresh(s, constraint, mats.bending);
    return s;
}

/// Flow-step system matrix A.
inline SparseMatrix flow_operator(const SystemMatrices& mats, FlowVariant variant, double tau) {
    SparseMatrix A = variant == FlowVariant::L2 ? SparseMatrix(mats.mass + tau * mats.bending) : SparseMatrix((1.0 + tau) * mats.bending);
    A.makeCompressed();
    return A;
}

/// One step of the linearized-constraint scheme: find d in the kernel of
/// B(Z^n) with (d, Y)_A = -(Z^n'', Y'') and set Z^{n+1} = Z^n + tau d.
inline FlowState step(const FlowState& state, const FlowConfig& config, const SystemMatrices& mats,
                      StepReport* report = nullptr, const SchurKktSolver* schur = nullptr) {
    if (!(state.Z.mesh() == mats.mesh) || state.Z.dim() != mats.dim)
        throw std::invalid_argument("step: state and matrices use different discretizations");
    const double tau = config.tau;
    const ConstraintMatrix cm = assemble_constraint(state.Z, config.constraint, config.bc);
    const SparseMatrix A = flow_operator(mats, config.variant, tau);
    const Vec rhs = -(mats.bending * state.Z.dofs());

    SaddleSolution sol;
    try {
        if (schur) {
            sol = schur->solve(SparseMatrix(cm.B), rhs, Vec::Zero(cm.rows()));
        } else {
            SaddleSystem sys{A, SparseMatrix(cm.B), rhs, Vec::Zero(cm.rows())};
            sol = solve_kkt(sys);
        }
    } catch (const SingularSystemError& e) {
        throw SingularSystemError("step " + std::to_string(state.n + 1) + ": " + e.what(), e.deficiency());
    }
    Vec& d = sol.x;
    for (const Eigen::Index dof : cm.fixed) d[dof] = 0.0;

    FlowState next{state.n + 1, state.Z};
    next.Z.dofs() += tau * d;
    next.last_velocity_norm = std::sqrt(std::max(0.0, d.dot(mats.mass * d)));
    detail::refresh(next, config.constraint, mats.bending);

    if (report) {
        const Vec Sd = mats.bending * d;
        const double dSd = d.dot(Sd);
        const double dAd = d.dot(A * d);
        report->dissipation = tau * (dAd - tau * dSd);
        const double change = tau * rhs.dot(-d) + 0.5 * tau * tau * dSd;
        const double predicted = -report->dissipation - 0.5 * tau * tau * dSd;
        report->energy_defect = std::abs(change - predicted) / std::max(state.energy, 1.0);
        const Vec Bd = cm.B.topRows(cm.tangential_rows()) * d;
        report->linearized_violation = Bd.size() ? Bd.cwiseAbs().maxCoeff() : 0.0;
        report->velocity = d;
        report->multiplier = std::move(sol.multiplier);
    }
    return next;
}

struct Snapshot {
    std::size_t n;
    double t;
    HermiteCurve Z;
};

struct FlowRun {
    FlowState final_state;
    std::size_t steps_taken = 0;
    double max_energy_defect = 0.0;
    double max_linearized_violation = 0.0;
    /// Whether every step satisfied E(Z^{n+1}) <= E(Z^n) - dissipation up to roundoff.
    bool energy_monotone = true;
    std::vector<Snapshot> snapshots;
};

/// Runs N = round(T / tau) steps, or fewer if the stationarity tolerance is met.
inline FlowRun run(const FlowConfig& config, FlowState state, const SystemMatrices& mats) {
    const std::size_t N = config.steps();
    FlowRun out{state, 0, 0.0, 0.0, true, {}};
    std::optional<SchurKktSolver> schur;
    if (config.backend == KktBackend::Schur) schur.emplace(flow_operator(mats, config.variant, config.tau));
    auto snap = [&](const FlowState& s) {
        out.snapshots.push_back({s.n, static_cast<double>(s.n) * config.tau, s.Z});
    };
    if (config.snapshot_stride > 0) snap(state);
    for (std::size_t k = 0; k < N; ++k) {
        StepReport rep;
        FlowState next = step(state, config, mats, &rep, schur ? &*schur : nullptr);
        out.max_energy_defect = std::max(out.max_energy_defect, rep.energy_defect);
        out.max_linearized_violation = std::max(out.max_linearized_violation, rep.linearized_violation);
        // Directly evaluated energies carry cancellation error of order eps |S| |Z|^2.
        const double slack = 1e-10 * std::max(state.energy, 1.0);
        if (next.energy > state.energy - rep.dissipation + slack) out.energy_monotone = false;
        state = std::move(next);
        ++out.steps_taken;
        if (config.snapshot_stride > 0 && (state.n % config.snapshot_stride == 0 || k + 1 == N)) snap(state);
        if (config.stationarity_tol > 0.0 && state.last_velocity_norm <= config.stationarity_tol) {
            if (config.snapshot_stride > 0 && state.n % config.snapshot_stride != 0) snap(state);
            break;
        }
    }
    out.final_state = std::move(state);
    return out;
}

/// Plain-text polyline dump: one block per snapshot headed by
/// "# step <n> t <t>", rows "x u_1 ... u_d" sampled at
/// `samples_per_element` points per element, blocks separated by a blank line.
inline void write_trajectory(std::ostream& os, const std::vector<Snapshot>& snapshots, int samples_per_element = 10) {
    char buf[64];
    for (const auto& s : snapshots) {
        os << "# step " << s.n << " t " << s.t << '\n';
        const Mesh1D& mesh = s.Z.mesh();
        for (std::size_t e = 0; e < mesh.elements(); ++e) {
            const int count = samples_per_element + (e + 1 == mesh.elements() ? 1 : 0);
            for (int k = 0; k < count; ++k) {
                const double x = mesh.node(e) + mesh.length(e) * k / samples_per_element;
                const Vec u = s.Z.eval_in_element(e, x, 0);
                std::snprintf(buf, sizeof buf, "%.10g", x);
                os << buf;
                for (Eigen::Index c = 0; c < u.size(); ++c) {
                    std::snprintf(buf, sizeof buf, " %.10g", u[c]);
                    os << buf;
                }
                os << '\n';
            }
        }
        os << '\n';
    }
}

} // namespace bending
