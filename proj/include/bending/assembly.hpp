#pragma once

#include "bending/mesh.hpp"
#include "bending/splines.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

namespace bending {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Mass, bending and first-order stiffness matrices on the Hermite DOFs.
struct SystemMatrices {
    Mesh1D mesh;
    std::size_t dim;
    SparseMatrix mass;     ///< int phi_i phi_j
    SparseMatrix bending;  ///< int phi_i'' phi_j''
    SparseMatrix gradient; ///< int phi_i' phi_j'

    [[nodiscard]] Eigen::Index size() const { return mass.rows(); }
    /// Gram matrix of the full H^2 norm.
    [[nodiscard]] SparseMatrix h2_gram() const { return mass + gradient + bending; }
};

namespace detail {

// 4-point Gauss-Legendre on [0, 1]; exact up to degree 7.
inline constexpr std::array<double, 4> kGaussPoints = {0.069431844202973712, 0.33000947820757187,
                                                       0.66999052179242813, 0.93056815579702629};
inline constexpr std::array<double, 4> kGaussWeights = {0.17392742256872693, 0.32607257743127307,
                                                        0.32607257743127307, 0.17392742256872693};

/// 4x4 element matrix of int (D^order phi_i)(D^order phi_j) over an element of length h.
inline Eigen::Matrix4d element_matrix(double h, int order) {
    Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
    for (std::size_t q = 0; q < kGaussPoints.size(); ++q) {
        const auto phi = hermite::basis(kGaussPoints[q], h, order);
        const Eigen::Vector4d v(phi[0], phi[1], phi[2], phi[3]);
        k += (kGaussWeights[q] * h) * v * v.transpose();
    }
    return 0.5 * (k + k.transpose());
}

} // namespace detail

/// Element matrix on the local DOFs (value left, derivative left, value
/// right, derivative right) of a scalar Hermite element.
inline Eigen::Matrix4d element_mass(double h) { return detail::element_matrix(h, 0); }
inline Eigen::Matrix4d element_gradient(double h) { return detail::element_matrix(h, 1); }
inline Eigen::Matrix4d element_bending(double h) { return detail::element_matrix(h, 2); }

/// Global DOF index of local basis function `local` (0..3) of element `e`, component `comp`.
inline Eigen::Index element_dof(std::size_t e, int local, std::size_t comp, std::size_t dim) {
    const std::size_t node = e + static_cast<std::size_t>(local / 2);
    const std::size_t kind = static_cast<std::size_t>(local % 2);
    return static_cast<Eigen::Index>(2 * dim * node + kind * dim + comp);
}

inline SystemMatrices assemble_matrices(const Mesh1D& mesh, std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("assemble_matrices: dimension must be positive");
    const auto n = static_cast<Eigen::Index>(2 * dim * mesh.num_nodes());
    std::array<std::vector<Triplet>, 3> trips;
    for (auto& t : trips) t.reserve(16 * dim * mesh.elements());
    for (std::size_t e = 0; e < mesh.elements(); ++e) {
        const double h = mesh.length(e);
        const std::array<Eigen::Matrix4d, 3> local = {element_mass(h), element_bending(h), element_gradient(h)};
        for (std::size_t c = 0; c < dim; ++c)
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    for (std::size_t k = 0; k < 3; ++k)
                        trips[k].emplace_back(element_dof(e, i, c, dim), element_dof(e, j, c, dim), local[k](i, j));
    }
    auto build = [n](const std::vector<Triplet>& t) {
        SparseMatrix m(n, n);
        m.setFromTriplets(t.begin(), t.end());
        SparseMatrix sym = 0.5 * (m + SparseMatrix(m.transpose()));
        sym.makeCompressed();
        return sym;
    };
    return {mesh, dim, build(trips[0]), build(trips[1]), build(trips[2])};
}

/// E(Z) = 1/2 Z^T S Z.
inline double bending_energy(const HermiteCurve& z, const SparseMatrix& bending) {
    if (z.size() != bending.rows()) throw std::invalid_argument("bending_energy: size mismatch");
    return 0.5 * z.dofs().dot(bending * z.dofs());
}

/// Essential conditions at one endpoint. Targets are only used to validate
/// initial data; the flow constrains increments to zero.
struct EndpointCondition {
    std::optional<Vec> value;
    std::optional<Vec> derivative;
};

struct BoundaryConditions {
    EndpointCondition left;
    EndpointCondition right;
    bool periodic = false;

    void validate(std::size_t dim) const {
        if (periodic && (left.value || left.derivative || right.value || right.derivative))
            throw std::invalid_argument("BoundaryConditions: periodic conditions exclude endpoint fixing");
        for (const auto* ec : {&left, &right}) {
            for (const auto* t : {&ec->value, &ec->derivative})
                if (*t && static_cast<std::size_t>((*t)->size()) != dim)
                    throw std::invalid_argument("BoundaryConditions: target dimension mismatch");
        }
    }

    [[nodiscard]] bool empty() const {
        return !periodic && !left.value && !left.derivative && !right.value && !right.derivative;
    }
};

/// DOF indices pinned by essential conditions, ascending.
inline std::vector<Eigen::Index> fixed_dofs(const BoundaryConditions& bc, std::size_t num_nodes, std::size_t dim) {
    std::vector<Eigen::Index> out;
    const std::size_t last = num_nodes - 1;
    auto add = [&](std::size_t node, std::size_t kind) {
        for (std::size_t c = 0; c < dim; ++c) out.push_back(static_cast<Eigen::Index>(2 * dim * node + kind * dim + c));
    };
    if (bc.left.value) add(0, 0);
    if (bc.left.derivative) add(0, 1);
    if (bc.right.value) add(last, 0);
    if (bc.right.derivative) add(last, 1);
    std::sort(out.begin(), out.end());
    return out;
}

/// Complement of fixed_dofs.
inline std::vector<Eigen::Index> free_dofs(const BoundaryConditions& bc, std::size_t num_nodes, std::size_t dim) {
    const auto fixed = fixed_dofs(bc, num_nodes, dim);
    std::vector<Eigen::Index> out;
    const auto n = static_cast<Eigen::Index>(2 * dim * num_nodes);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::binary_search(fixed.begin(), fixed.end(), i)) out.push_back(i);
    return out;
}

/// Coefficients expressing Y'(z) through the DOFs: Y'(z)_c = sum_k w_k Y[dof_k + c],
/// where dof_k is the component-0 DOF. Nodes touch one DOF, midpoints four.
struct DerivativeStencil {
    std::array<Eigen::Index, 4> dof{};
    std::array<double, 4> weight{};
    int count = 0;
};

inline DerivativeStencil derivative_stencil(const Mesh1D& mesh, const ConstraintPoint& p, std::size_t dim) {
    DerivativeStencil s;
    if (p.is_node()) {
        s.dof[0] = static_cast<Eigen::Index>(2 * dim * static_cast<std::size_t>(p.node) + dim);
        s.weight[0] = 1.0;
        s.count = 1;
        return s;
    }
    const std::size_t e = p.element;
    const double h = mesh.length(e);
    const auto w = hermite::basis((p.x - mesh.node(e)) / h, h, 1);
    for (int k = 0; k < 4; ++k) {
        s.dof[static_cast<std::size_t>(k)] = element_dof(e, k, 0, dim);
        s.weight[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k)];
    }
    s.count = 4;
    return s;
}

inline Vec eval_derivative(const HermiteCurve& z, const DerivativeStencil& s) {
    Vec out = Vec::Zero(static_cast<Eigen::Index>(z.dim()));
    for (int k = 0; k < s.count; ++k)
        out += s.weight[static_cast<std::size_t>(k)] * z.dofs().segment(s.dof[static_cast<std::size_t>(k)], out.size());
    return out;
}

/// Linearized constraint plus boundary rows, B Y = 0.
struct ConstraintMatrix {
    Eigen::SparseMatrix<double, Eigen::RowMajor> B;
    /// Constraint points backing the first `points.size()` rows (after dropping
    /// redundant endpoint rows); the remaining rows are boundary rows.
    std::vector<ConstraintPoint> points;
    std::vector<Eigen::Index> fixed;

    [[nodiscard]] Eigen::Index rows() const { return B.rows(); }
    [[nodiscard]] Eigen::Index tangential_rows() const { return static_cast<Eigen::Index>(points.size()); }
};

/// Rows Y'(z) . (Z^n)'(z) = 0 for every constraint point, followed by unit
/// rows for fixed endpoint DOFs and, for periodic conditions, rows
/// Y(a) - Y(b) = 0 and Y'(a) - Y'(b) = 0.
///
/// The tangential row at an endpoint whose derivative is fully fixed is
/// dropped (it is implied by the boundary rows). For periodic conditions the
/// row at b is dropped since Y'(b) = Y'(a) and the tangents agree.
inline ConstraintMatrix assemble_constraint(const HermiteCurve& zn, ConstraintVariant variant, const BoundaryConditions& bc) {
    const Mesh1D& mesh = zn.mesh();
    const std::size_t dim = zn.dim();
    bc.validate(dim);
    const std::size_t last = mesh.num_nodes() - 1;

    ConstraintMatrix out;
    std::vector<Triplet> trips;
    Eigen::Index row = 0;
    for (const auto& p : constraint_points(mesh, variant)) {
        if (p.is_node()) {
            const auto node = static_cast<std::size_t>(p.node);
            if (node == 0 && bc.left.derivative) continue;
            if (node == last && (bc.right.derivative || bc.periodic)) continue;
        }
        const auto st = derivative_stencil(mesh, p, dim);
        const Vec t = eval_derivative(zn, st);
        for (int k = 0; k < st.count; ++k)
            for (std::size_t c = 0; c < dim; ++c)
                trips.emplace_back(row, st.dof[static_cast<std::size_t>(k)] + static_cast<Eigen::Index>(c),
                                   st.weight[static_cast<std::size_t>(k)] * t[static_cast<Eigen::Index>(c)]);
        out.points.push_back(p);
        ++row;
    }
    out.fixed = fixed_dofs(bc, mesh.num_nodes(), dim);
    for (const Eigen::Index dof : out.fixed) trips.emplace_back(row++, dof, 1.0);
    if (bc.periodic) {
        for (std::size_t kind = 0; kind < 2; ++kind)
            for (std::size_t c = 0; c < dim; ++c) {
                trips.emplace_back(row, static_cast<Eigen::Index>(kind * dim + c), 1.0);
                trips.emplace_back(row, static_cast<Eigen::Index>(2 * dim * last + kind * dim + c), -1.0);
                ++row;
            }
    }
    out.B.resize(row, zn.size());
    out.B.setFromTriplets(trips.begin(), trips.end());
    out.B.makeCompressed();
    return out;
}

/// max over the constraint points of | |Z'(z)|^2 - 1 |.
inline double constraint_violation(const HermiteCurve& z, ConstraintVariant variant) {
    double worst = 0.0;
    for (const auto& p : constraint_points(z.mesh(), variant)) {
        const Vec t = eval_derivative(z, derivative_stencil(z.mesh(), p, z.dim()));
        worst = std::max(worst, std::abs(t.squaredNorm() - 1.0));
    }
    return worst;
}

} // namespace bending
