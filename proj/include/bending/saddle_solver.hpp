#pragma once

#include "bending/assembly.hpp"

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bending {

/// Block system [[A, B^T], [B, 0]] (x, Lambda) = (rhs_top, rhs_bottom).
struct SaddleSystem {
    SparseMatrix A;
    SparseMatrix B;
    Vec rhs_top;
    Vec rhs_bottom;

    [[nodiscard]] Eigen::Index n() const { return A.rows(); }
    [[nodiscard]] Eigen::Index m() const { return B.rows(); }
};

struct SaddleSolution {
    Vec x;
    Vec multiplier;
};

/// Raised when the KKT matrix is singular or numerically rank deficient.
class SingularSystemError : public std::runtime_error {
public:
    SingularSystemError(const std::string& what, Eigen::Index deficiency)
        : std::runtime_error(what), deficiency_(deficiency) {}
    /// Estimated number of (near-)zero pivots.
    [[nodiscard]] Eigen::Index deficiency() const { return deficiency_; }

private:
    Eigen::Index deficiency_;
};

struct KktOptions {
    double tol_rel = 1e-10;
    /// Pivots below pivot_threshold * max pivot flag rank deficiency.
    double pivot_threshold = 1e-12;
    int refinement_steps = 2;
};

/// Norms of A x + B^T Lambda - rhs_top and B x - rhs_bottom.
inline std::pair<double, double> kkt_residual(const SaddleSystem& sys, const Vec& x, const Vec& multiplier) {
    const Vec top = sys.A * x + sys.B.transpose() * multiplier - sys.rhs_top;
    const Vec bottom = sys.B * x - sys.rhs_bottom;
    return {top.norm(), bottom.norm()};
}

namespace detail {

inline SparseMatrix kkt_matrix(const SaddleSystem& sys) {
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(sys.A.nonZeros() + 2 * sys.B.nonZeros()));
    for (Eigen::Index k = 0; k < sys.A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sys.A, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index k = 0; k < sys.B.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sys.B, k); it; ++it) {
            trips.emplace_back(n + it.row(), it.col(), it.value());
            trips.emplace_back(it.col(), n + it.row(), it.value());
        }
    SparseMatrix K(n + m, n + m);
    K.setFromTriplets(trips.begin(), trips.end());
    K.makeCompressed();
    return K;
}

/// Symmetric Ruiz equilibration: returns D such that D K D has rows and
/// columns of unit max-norm (approximately).
inline Vec ruiz_scaling(SparseMatrix& K, int sweeps = 4) {
    const Eigen::Index n = K.rows();
    Vec d = Vec::Ones(n);
    for (int s = 0; s < sweeps; ++s) {
        Vec colmax = Vec::Zero(n);
        for (Eigen::Index k = 0; k < K.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(K, k); it; ++it)
                colmax[it.col()] = std::max(colmax[it.col()], std::abs(it.value()));
        Vec step(n);
        for (Eigen::Index i = 0; i < n; ++i) step[i] = colmax[i] > 0 ? 1.0 / std::sqrt(colmax[i]) : 1.0;
        for (Eigen::Index k = 0; k < K.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(K, k); it; ++it) it.valueRef() *= step[it.row()] * step[it.col()];
        d = d.cwiseProduct(step);
    }
    return d;
}

template <typename Solver>
std::vector<double> lu_pivots(const Solver& lu, Eigen::Index n) {
    // The diagonal blocks of U are stored in the supernodes of L.
    std::vector<double> piv(static_cast<std::size_t>(n), 0.0);
    const auto& mapL = lu.matrixL().m_mapL;
    using SC = std::decay_t<decltype(mapL)>;
    for (Eigen::Index j = 0; j < n; ++j)
        for (typename SC::InnerIterator it(mapL, j); it; ++it)
            if (it.index() == j) {
                piv[static_cast<std::size_t>(j)] = std::abs(it.value());
                break;
            }
    return piv;
}

/// Rank deficiency of a dense matrix by full-pivoting LU with a relative threshold.
inline Eigen::Index dense_deficiency(const Eigen::MatrixXd& K, double threshold) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    lu.setThreshold(threshold);
    return K.rows() - lu.rank();
}

} // namespace detail

/// Direct solve of the full indefinite block system.
///
/// The KKT matrix is symmetrically equilibrated, factorized with a sparse LU
/// (COLAMD ordering, partial pivoting) and the solution polished by a few
/// steps of iterative refinement. A pivot below `pivot_threshold` times the
/// largest pivot, or a final normwise backward error above `tol_rel`, raises
/// SingularSystemError.
inline SaddleSolution solve_kkt(const SaddleSystem& sys, const KktOptions& opt = {}) {
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();
    if (sys.A.cols() != n || (m > 0 && sys.B.cols() != n) || sys.rhs_top.size() != n || sys.rhs_bottom.size() != m)
        throw std::invalid_argument("solve_kkt: inconsistent block sizes");

    SparseMatrix K = detail::kkt_matrix(sys);
    const SparseMatrix K_orig = K;
    const Vec D = detail::ruiz_scaling(K);

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(K);
    lu.factorize(K);
    if (lu.info() != Eigen::Success) {
        const Eigen::Index def = detail::dense_deficiency(Eigen::MatrixXd(K), opt.pivot_threshold);
        throw SingularSystemError("solve_kkt: factorization failed (" + lu.lastErrorMessage() + ")", std::max<Eigen::Index>(def, 1));
    }
    const auto piv = detail::lu_pivots(lu, n + m);
    const double pmax = *std::max_element(piv.begin(), piv.end());
    const auto small = std::count_if(piv.begin(), piv.end(), [&](double p) { return !(p >= opt.pivot_threshold * pmax); });
    if (small > 0)
        throw SingularSystemError("solve_kkt: KKT matrix is numerically rank deficient (" + std::to_string(small) + " small pivots)",
                                  small);

    Vec rhs(n + m);
    rhs << sys.rhs_top, sys.rhs_bottom;
    // Normwise backward error |r| / (|K| |x| + |b|) in the max norm.
    double k_norm = 0.0;
    {
        Vec row_sums = Vec::Zero(n + m);
        for (Eigen::Index j = 0; j < K_orig.outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(K_orig, j); it; ++it) row_sums[it.row()] += std::abs(it.value());
        k_norm = row_sums.size() ? row_sums.maxCoeff() : 0.0;
    }
    const auto backward_error = [&](const Vec& x, const Vec& r) {
        const double scale = k_norm * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
        return scale > 0.0 ? r.lpNorm<Eigen::Infinity>() / scale : 0.0;
    };
    Vec sol = D.cwiseProduct(lu.solve(D.cwiseProduct(rhs)));
    Vec r = rhs - K_orig * sol;
    for (int it = 0; it < opt.refinement_steps && backward_error(sol, r) > 1e-3 * opt.tol_rel; ++it) {
        sol += D.cwiseProduct(lu.solve(D.cwiseProduct(r)));
        r = rhs - K_orig * sol;
    }
    const double err = backward_error(sol, r);
    if (!(err <= opt.tol_rel)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", err);
        throw SingularSystemError(std::string("solve_kkt: backward error ") + buf + " exceeds tolerance", 0);
    }
    return {sol.head(n), sol.tail(m)};
}

/// Schur-complement solver for a fixed SPD A and changing B: A is factorized
/// once, and each solve forms the dense m x m complement B A^{-1} B^T.
class SchurKktSolver {
public:
    explicit SchurKktSolver(const SparseMatrix& A) : n_(A.rows()) {
        llt_.compute(A);
        if (llt_.info() != Eigen::Success)
            throw SingularSystemError("SchurKktSolver: A is not positive definite", 1);
    }

    [[nodiscard]] SaddleSolution solve(const SparseMatrix& B, const Vec& rhs_top, const Vec& rhs_bottom) const {
        const Eigen::Index m = B.rows();
        const Vec a_inv_b = llt_.solve(rhs_top);
        if (m == 0) return {a_inv_b, Vec(0)};
        const Eigen::MatrixXd Bt = Eigen::MatrixXd(B.transpose());
        const Eigen::MatrixXd a_inv_bt = llt_.solve(Bt);
        const Eigen::MatrixXd schur = B * a_inv_bt;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(schur);
        const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
        if (ldlt.info() != Eigen::Success || d.minCoeff() < 1e-12 * d.maxCoeff())
            throw SingularSystemError("SchurKktSolver: constraint rows are linearly dependent", 1);
        const Vec multiplier = ldlt.solve(B * a_inv_b - rhs_bottom);
        return {a_inv_b - a_inv_bt * multiplier, multiplier};
    }

    [[nodiscard]] Eigen::Index n() const { return n_; }

private:
    Eigen::Index n_;
    Eigen::SimplicialLLT<SparseMatrix> llt_;
};

} // namespace bending
