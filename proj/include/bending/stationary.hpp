#pragma once

#include "bending/assembly.hpp"
#include "bending/saddle_solver.hpp"
#include "bending/splines.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bending {

/// Discrete curve together with the Lagrange multiplier of the discrete
/// inextensibility constraint. `lambda` holds one value per constraint point
/// of `variant` (N_2 for P2, N_1 for P1); the endpoint values are zero.
struct SaddlePoint {
    HermiteCurve u;
    Vec lambda;
    ConstraintVariant variant = ConstraintVariant::P2;
};

/// Indices of the constraint points that are not endpoints, i.e. the
/// degrees of freedom of the boundary-zeroed multiplier space.
inline std::vector<Eigen::Index> interior_points(const Mesh1D& mesh, ConstraintVariant variant) {
    const auto pts = constraint_points(mesh, variant);
    std::vector<Eigen::Index> out;
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) out.push_back(static_cast<Eigen::Index>(k));
    return out;
}

/// I_{h,k,0} f: values of the scalar function f at the constraint points,
/// endpoints set to zero.
template <typename F>
Vec interpolate_multiplier(const Mesh1D& mesh, ConstraintVariant variant, F&& f) {
    const auto pts = constraint_points(mesh, variant);
    Vec out = Vec::Zero(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) out[static_cast<Eigen::Index>(k)] = f(pts[k].x);
    return out;
}

/// Multiplier guess -|u''|^2 at interior constraint points. At nodes, where
/// u'' jumps, the two one-sided values are averaged.
inline Vec multiplier_from_curvature(const HermiteCurve& u, ConstraintVariant variant) {
    const Mesh1D& mesh = u.mesh();
    const auto pts = constraint_points(mesh, variant);
    Vec out = Vec::Zero(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
        const auto& p = pts[k];
        double kappa2;
        if (p.is_node()) {
            const auto i = static_cast<std::size_t>(p.node);
            kappa2 = 0.5 * (u.eval_in_element(i - 1, p.x, 2).squaredNorm() + u.eval_in_element(i, p.x, 2).squaredNorm());
        } else {
            kappa2 = u.eval_in_element(p.element, p.x, 2).squaredNorm();
        }
        out[static_cast<Eigen::Index>(k)] = -kappa2;
    }
    return out;
}

namespace detail {

/// Maps full DOF indices to positions in the free-DOF vector (-1 for fixed).
inline std::vector<Eigen::Index> free_map(const std::vector<Eigen::Index>& free, Eigen::Index n) {
    std::vector<Eigen::Index> map(static_cast<std::size_t>(n), -1);
    for (std::size_t k = 0; k < free.size(); ++k) map[static_cast<std::size_t>(free[k])] = static_cast<Eigen::Index>(k);
    return map;
}

inline SparseMatrix restrict_square(const SparseMatrix& A, const std::vector<Eigen::Index>& map, Eigen::Index nf) {
    std::vector<Triplet> trips;
    for (Eigen::Index k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
            const auto r = map[static_cast<std::size_t>(it.row())];
            const auto c = map[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
        }
    SparseMatrix out(nf, nf);
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
    return out;
}

inline void check_bc(const BoundaryConditions& bc, std::size_t dim) {
    bc.validate(dim);
    if (bc.periodic) throw std::invalid_argument("stationary: periodic boundary conditions are not supported");
}

} // namespace detail

/// F_h split into the curve block (rows of free curve DOFs) and the
/// multiplier block (interior constraint points).
struct StationaryResidual {
    Vec curve;
    Vec multiplier;

    [[nodiscard]] Vec stacked() const {
        Vec out(curve.size() + multiplier.size());
        out << curve, multiplier;
        return out;
    }
    [[nodiscard]] double norm() const { return std::sqrt(curve.squaredNorm() + multiplier.squaredNorm()); }
};

/// Curve block: S u + sum_z beta_z lambda(z) u'(z) . phi'(z).
/// Multiplier block: 1/2 beta_z (|u'(z)|^2 - 1) at interior z.
inline StationaryResidual residual(const SaddlePoint& p, const BoundaryConditions& bc, const SystemMatrices& mats) {
    const Mesh1D& mesh = p.u.mesh();
    const std::size_t dim = p.u.dim();
    detail::check_bc(bc, dim);
    const auto pts = constraint_points(mesh, p.variant);
    if (p.lambda.size() != static_cast<Eigen::Index>(pts.size()))
        throw std::invalid_argument("residual: multiplier size does not match the constraint points");
    const auto w = lumped_weights(mesh, p.variant);

    Vec full = mats.bending * p.u.dofs();
    StationaryResidual r;
    r.multiplier = Vec::Zero(static_cast<Eigen::Index>(pts.size() - 2));
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto st = derivative_stencil(mesh, pts[k], dim);
        const Vec t = eval_derivative(p.u, st);
        const double scale = w[k] * p.lambda[static_cast<Eigen::Index>(k)];
        for (int j = 0; j < st.count; ++j)
            full.segment(st.dof[static_cast<std::size_t>(j)], static_cast<Eigen::Index>(dim)) += scale * st.weight[static_cast<std::size_t>(j)] * t;
        if (k > 0 && k + 1 < pts.size()) r.multiplier[static_cast<Eigen::Index>(k - 1)] = 0.5 * w[k] * (t.squaredNorm() - 1.0);
    }
    const auto free = free_dofs(bc, mesh.num_nodes(), dim);
    r.curve.resize(static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) r.curve[static_cast<Eigen::Index>(k)] = full[free[k]];
    return r;
}

/// DF_h as saddle blocks on free curve DOFs and interior multiplier points:
/// A = S + sum_z beta_z lambda(z) phi'(z) . psi'(z), B rows beta_z u'(z) . phi'(z).
/// Right-hand sides are left empty.
inline SaddleSystem jacobian(const SaddlePoint& p, const BoundaryConditions& bc, const SystemMatrices& mats) {
    const Mesh1D& mesh = p.u.mesh();
    const std::size_t dim = p.u.dim();
    detail::check_bc(bc, dim);
    const auto pts = constraint_points(mesh, p.variant);
    const auto w = lumped_weights(mesh, p.variant);
    const auto free = free_dofs(bc, mesh.num_nodes(), dim);
    const auto map = detail::free_map(free, p.u.size());
    const auto nf = static_cast<Eigen::Index>(free.size());

    std::vector<Triplet> a_trips, b_trips;
    for (Eigen::Index k = 0; k < mats.bending.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(mats.bending, k); it; ++it) {
            const auto r = map[static_cast<std::size_t>(it.row())];
            const auto c = map[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) a_trips.emplace_back(r, c, it.value());
        }
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto st = derivative_stencil(mesh, pts[k], dim);
        const double lw = w[k] * p.lambda[static_cast<Eigen::Index>(k)];
        const Vec t = eval_derivative(p.u, st);
        const bool interior = k > 0 && k + 1 < pts.size();
        for (int i = 0; i < st.count; ++i)
            for (std::size_t c = 0; c < dim; ++c) {
                const auto ri = map[static_cast<std::size_t>(st.dof[static_cast<std::size_t>(i)] + static_cast<Eigen::Index>(c))];
                if (ri < 0) continue;
                if (interior)
                    b_trips.emplace_back(static_cast<Eigen::Index>(k - 1), ri, w[k] * st.weight[static_cast<std::size_t>(i)] * t[static_cast<Eigen::Index>(c)]);
                if (lw == 0.0) continue;
                for (int j = 0; j < st.count; ++j) {
                    const auto cj = map[static_cast<std::size_t>(st.dof[static_cast<std::size_t>(j)] + static_cast<Eigen::Index>(c))];
                    if (cj >= 0)
                        a_trips.emplace_back(ri, cj, lw * st.weight[static_cast<std::size_t>(i)] * st.weight[static_cast<std::size_t>(j)]);
                }
            }
    }
    SaddleSystem sys;
    sys.A.resize(nf, nf);
    sys.A.setFromTriplets(a_trips.begin(), a_trips.end());
    sys.A = 0.5 * (sys.A + SparseMatrix(sys.A.transpose()));
    sys.A.makeCompressed();
    sys.B.resize(static_cast<Eigen::Index>(pts.size() - 2), nf);
    sys.B.setFromTriplets(b_trips.begin(), b_trips.end());
    sys.B.makeCompressed();
    return sys;
}

/// Adds a free-DOF curve increment and an interior multiplier increment.
inline SaddlePoint apply_increment(const SaddlePoint& p, const BoundaryConditions& bc, const Vec& du, const Vec& dlambda, double scale = 1.0) {
    SaddlePoint q = p;
    const auto free = free_dofs(bc, p.u.mesh().num_nodes(), p.u.dim());
    for (std::size_t k = 0; k < free.size(); ++k) q.u.dofs()[free[k]] += scale * du[static_cast<Eigen::Index>(k)];
    q.lambda.segment(1, dlambda.size()) += scale * dlambda;
    return q;
}

/// Gram matrices of the norms in which the Brezzi constants are measured,
/// restricted to the free curve DOFs and the interior multiplier points.
struct DiscreteNorms {
    SparseMatrix h2;        ///< M + S1 + S on free curve DOFs
    SparseMatrix h1;        ///< M + S1 on free curve DOFs
    SparseMatrix lag_mass;  ///< mass matrix of the boundary-zeroed Lagrange basis
    SparseMatrix lag_h1;    ///< H^1 Gram of that basis
    /// Gram of the discrete H^{-1} surrogate, |mu|^2 = r^T K^{-1} r with r = lag_mass mu.
    [[nodiscard]] Eigen::MatrixXd dual_gram() const {
        const Eigen::MatrixXd Mq(lag_mass);
        return Mq * Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(lag_h1)).solve(Mq);
    }
};

namespace detail {

/// Lagrange element matrices (mass, H^1 seminorm) of degree 1 or 2 on an element of length h.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lagrange_element(int degree, double h) {
    const int nb = degree + 1;
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(nb, nb), stiff = Eigen::MatrixXd::Zero(nb, nb);
    for (std::size_t q = 0; q < kGaussPoints.size(); ++q) {
        const double t = kGaussPoints[q];
        Eigen::VectorXd v(nb), dv(nb);
        if (degree == 1) {
            v << 1 - t, t;
            dv << -1 / h, 1 / h;
        } else {
            v << 2 * (t - 0.5) * (t - 1), -4 * t * (t - 1), 2 * t * (t - 0.5);
            dv << (4 * t - 3) / h, (4 - 8 * t) / h, (4 * t - 1) / h;
        }
        mass += kGaussWeights[q] * h * v * v.transpose();
        stiff += kGaussWeights[q] * h * dv * dv.transpose();
    }
    return {mass, stiff};
}

} // namespace detail

inline DiscreteNorms build_norms(const SystemMatrices& mats, const BoundaryConditions& bc, ConstraintVariant variant) {
    const auto free = free_dofs(bc, mats.mesh.num_nodes(), mats.dim);
    const auto map = detail::free_map(free, mats.size());
    const auto nf = static_cast<Eigen::Index>(free.size());
    DiscreteNorms out;
    out.h2 = detail::restrict_square(mats.h2_gram(), map, nf);
    out.h1 = detail::restrict_square(SparseMatrix(mats.mass + mats.gradient), map, nf);

    const int degree = variant == ConstraintVariant::P2 ? 2 : 1;
    const Mesh1D& mesh = mats.mesh;
    const auto npts = static_cast<Eigen::Index>(degree * mesh.elements() + 1);
    std::vector<Triplet> mt, kt;
    for (std::size_t e = 0; e < mesh.elements(); ++e) {
        const auto [me, ke] = detail::lagrange_element(degree, mesh.length(e));
        for (int i = 0; i <= degree; ++i)
            for (int j = 0; j <= degree; ++j) {
                const auto gi = static_cast<Eigen::Index>(degree * e) + i - 1;
                const auto gj = static_cast<Eigen::Index>(degree * e) + j - 1;
                if (gi < 0 || gj < 0 || gi >= npts - 2 || gj >= npts - 2) continue;
                mt.emplace_back(gi, gj, me(i, j));
                kt.emplace_back(gi, gj, ke(i, j) + me(i, j));
            }
    }
    out.lag_mass.resize(npts - 2, npts - 2);
    out.lag_mass.setFromTriplets(mt.begin(), mt.end());
    out.lag_h1.resize(npts - 2, npts - 2);
    out.lag_h1.setFromTriplets(kt.begin(), kt.end());
    return out;
}

/// ||F_h||_{X_h'}: curve block in the dual of the H^2 norm, multiplier block
/// in the dual of the discrete H^{-1} surrogate. Factorizes the Gram
/// matrices once for repeated evaluation.
class DualNorm {
public:
    explicit DualNorm(const DiscreteNorms& norms) : lag_h1_(norms.lag_h1) {
        g_.compute(norms.h2);
        mq_.compute(norms.lag_mass);
        if (g_.info() != Eigen::Success || mq_.info() != Eigen::Success)
            throw std::runtime_error("DualNorm: Gram matrix is not positive definite");
    }

    [[nodiscard]] double operator()(const StationaryResidual& r) const {
        const double curve = r.curve.dot(g_.solve(r.curve));
        const Vec y = mq_.solve(r.multiplier);
        return std::sqrt(std::max(0.0, curve + y.dot(lag_h1_ * y)));
    }

private:
    SparseMatrix lag_h1_;
    Eigen::SimplicialLLT<SparseMatrix> g_;
    Eigen::SimplicialLLT<SparseMatrix> mq_;
};

inline double residual_dual_norm(const StationaryResidual& r, const DiscreteNorms& norms) { return DualNorm(norms)(r); }

/// Norm in which Newton measures F_h.
enum class ResidualNorm { Dual, Euclidean };

struct NewtonOptions {
    double tol = 1e-11;
    ResidualNorm norm = ResidualNorm::Euclidean;
    int max_iter = 25;
    int max_halvings = 10;
    /// Below this residual, an iteration that fails to halve the residual
    /// is taken as having hit the roundoff floor and stops the iteration.
    double stagnation_floor = 1e-8;
};

struct NewtonResult {
    SaddlePoint solution;
    /// Residual norm before each iteration and after the last.
    std::vector<double> residual_norms;
    int iterations = 0;
    /// Stopped at the roundoff floor above `tol`.
    bool roundoff_limited = false;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> log) : std::runtime_error(what), log_(std::move(log)) {}
    [[nodiscard]] const std::vector<double>& residual_log() const { return log_; }

private:
    std::vector<double> log_;
};

/// Plain Newton on F_h(u, lambda) = 0; the step is halved only when the
/// residual norm would increase.
inline NewtonResult newton_solve(SaddlePoint p, const BoundaryConditions& bc, const SystemMatrices& mats, const NewtonOptions& opt = {}) {
    NewtonResult out{p, {}, 0, false};
    std::optional<DualNorm> dual;
    if (opt.norm == ResidualNorm::Dual) dual.emplace(build_norms(mats, bc, p.variant));
    const auto measure = [&](const StationaryResidual& res) { return dual ? (*dual)(res) : res.norm(); };
    StationaryResidual r = residual(p, bc, mats);
    double norm = measure(r);
    out.residual_norms.push_back(norm);
    while (norm > opt.tol) {
        if (out.iterations >= opt.max_iter)
            throw ConvergenceError("newton_solve: no convergence after " + std::to_string(opt.max_iter) + " iterations", out.residual_norms);
        SaddleSystem sys = jacobian(p, bc, mats);
        sys.rhs_top = -r.curve;
        sys.rhs_bottom = -r.multiplier;
        const SaddleSolution d = solve_kkt(sys);
        double scale = 1.0;
        SaddlePoint trial = apply_increment(p, bc, d.x, d.multiplier, scale);
        StationaryResidual rt = residual(trial, bc, mats);
        double nt = measure(rt);
        for (int k = 0; k < opt.max_halvings && nt > norm; ++k) {
            scale *= 0.5;
            trial = apply_increment(p, bc, d.x, d.multiplier, scale);
            rt = residual(trial, bc, mats);
            nt = measure(rt);
        }
        p = std::move(trial);
        r = std::move(rt);
        const double previous = norm;
        norm = nt;
        ++out.iterations;
        out.residual_norms.push_back(norm);
        if (norm > opt.tol && previous < opt.stagnation_floor && norm > 0.5 * previous) {
            out.roundoff_limited = true;
            break;
        }
    }
    out.solution = std::move(p);
    return out;
}

/// Smallest generalized eigenvalue of Z^T A Z against Z^T G Z, Z an
/// orthonormal basis of ker B. Throws if B is rank deficient.
inline double coercivity_constant(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& G) {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd kernel;
    if (B.rows() == 0) {
        kernel = Eigen::MatrixXd::Identity(n, n);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B.transpose());
        qr.setThreshold(1e-12);
        if (qr.rank() < B.rows())
            throw SingularSystemError("coercivity_constant: constraint matrix is rank deficient", B.rows() - qr.rank());
        const Eigen::MatrixXd Q = qr.householderQ();
        kernel = Q.rightCols(n - qr.rank());
    }
    if (kernel.cols() == 0) throw std::invalid_argument("coercivity_constant: kernel of B is trivial");
    const Eigen::MatrixXd ka = kernel.transpose() * A * kernel;
    const Eigen::MatrixXd kg = kernel.transpose() * G * kernel;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (ka + ka.transpose()), 0.5 * (kg + kg.transpose()),
                                                                 Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Smallest generalized singular value of B between the primal Gram G and the
/// multiplier Gram Q: sqrt(min eig(B G^{-1} B^T, Q)). Zero rows give 0.
inline double infsup_constant(const Eigen::MatrixXd& B, const Eigen::MatrixXd& G, const Eigen::MatrixXd& Q) {
    const Eigen::MatrixXd ginv_bt = Eigen::LLT<Eigen::MatrixXd>(G).solve(B.transpose());
    const Eigen::MatrixXd s = B * ginv_bt;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()), 0.5 * (Q + Q.transpose()),
                                                                 Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
}

/// Discrete coercivity constant of a_lambda on ker b_u in the H^2 norm.
inline double coercivity_estimate(const SaddlePoint& p, const BoundaryConditions& bc, const SystemMatrices& mats, const DiscreteNorms& norms) {
    const SaddleSystem J = jacobian(p, bc, mats);
    return coercivity_constant(Eigen::MatrixXd(J.A), Eigen::MatrixXd(J.B), Eigen::MatrixXd(norms.h2));
}

/// Discrete inf-sup constant of b_u between H^2 and the H^{-1} surrogate.
inline double infsup_estimate(const SaddlePoint& p, const BoundaryConditions& bc, const SystemMatrices& mats, const DiscreteNorms& norms) {
    const SaddleSystem J = jacobian(p, bc, mats);
    return infsup_constant(Eigen::MatrixXd(J.B), Eigen::MatrixXd(norms.h2), norms.dual_gram());
}

} // namespace bending
