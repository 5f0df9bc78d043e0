#pragma once

#include "bending/mesh.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace bending {

using Vec = Eigen::VectorXd;

/// Analytic vector-valued function of the curve parameter. `eval(x, k)`
/// returns the k-th derivative; implementations may throw for orders they do
/// not provide.
struct FunctionOracle {
    std::size_t dim = 1;
    std::function<Vec(double x, int order)> eval;

    [[nodiscard]] Vec operator()(double x, int order = 0) const { return eval(x, order); }
};

namespace hermite {

/// The four cubic Hermite shape functions on an element of length h, in the
/// local order (value left, derivative left, value right, derivative right),
/// differentiated `order` times with respect to the physical coordinate.
/// `t` is the reference coordinate in [0, 1].
inline std::array<double, 4> basis(double t, double h, int order) {
    switch (order) {
    case 0:
        return {1 - 3 * t * t + 2 * t * t * t, h * (t - 2 * t * t + t * t * t),
                3 * t * t - 2 * t * t * t, h * (-t * t + t * t * t)};
    case 1:
        return {(-6 * t + 6 * t * t) / h, 1 - 4 * t + 3 * t * t, (6 * t - 6 * t * t) / h, -2 * t + 3 * t * t};
    case 2:
        return {(-6 + 12 * t) / (h * h), (-4 + 6 * t) / h, (6 - 12 * t) / (h * h), (-2 + 6 * t) / h};
    case 3:
        return {12 / (h * h * h), 6 / (h * h), -12 / (h * h * h), 6 / (h * h)};
    default:
        throw std::domain_error("hermite::basis: derivative order must be in 0..3");
    }
}

} // namespace hermite

/// C^1 piecewise cubic curve in R^d stored by nodal values and derivatives.
///
/// DOF layout (shared by every assembly routine): node-major, and within a
/// node the d values followed by the d derivatives, i.e.
///   dof(i, value, c) = 2 d i + c,   dof(i, deriv, c) = 2 d i + d + c.
/// Derivatives are physical (not scaled by h).
class HermiteCurve {
public:
    HermiteCurve(Mesh1D mesh, std::size_t dim)
        : mesh_(std::move(mesh)), dim_(dim), dofs_(Vec::Zero(static_cast<Eigen::Index>(2 * dim * mesh_.num_nodes()))) {
        if (dim == 0) throw std::invalid_argument("HermiteCurve: dimension must be positive");
    }

    HermiteCurve(Mesh1D mesh, std::size_t dim, Vec dofs) : HermiteCurve(std::move(mesh), dim) {
        if (dofs.size() != dofs_.size()) throw std::invalid_argument("HermiteCurve: DOF vector has the wrong length");
        dofs_ = std::move(dofs);
    }

    [[nodiscard]] const Mesh1D& mesh() const { return mesh_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] const Vec& dofs() const { return dofs_; }
    [[nodiscard]] Vec& dofs() { return dofs_; }
    [[nodiscard]] Eigen::Index size() const { return dofs_.size(); }

    [[nodiscard]] Eigen::Index value_index(std::size_t node, std::size_t comp) const {
        return static_cast<Eigen::Index>(2 * dim_ * node + comp);
    }
    [[nodiscard]] Eigen::Index deriv_index(std::size_t node, std::size_t comp) const {
        return static_cast<Eigen::Index>(2 * dim_ * node + dim_ + comp);
    }

    [[nodiscard]] Vec value(std::size_t node) const {
        return dofs_.segment(value_index(node, 0), static_cast<Eigen::Index>(dim_));
    }
    [[nodiscard]] Vec deriv(std::size_t node) const {
        return dofs_.segment(deriv_index(node, 0), static_cast<Eigen::Index>(dim_));
    }
    void set_value(std::size_t node, const Vec& v) { dofs_.segment(value_index(node, 0), static_cast<Eigen::Index>(dim_)) = v; }
    void set_deriv(std::size_t node, const Vec& v) { dofs_.segment(deriv_index(node, 0), static_cast<Eigen::Index>(dim_)) = v; }

    /// k-th derivative inside element `e` at physical coordinate x.
    [[nodiscard]] Vec eval_in_element(std::size_t e, double x, int order) const {
        const double h = mesh_.length(e);
        const double t = (x - mesh_.node(e)) / h;
        const auto w = hermite::basis(t, h, order);
        return w[0] * value(e) + w[1] * deriv(e) + w[2] * value(e + 1) + w[3] * deriv(e + 1);
    }

    /// k-th derivative at x. At interior nodes orders 2 and 3 are taken from
    /// the left element; orders 0 and 1 are continuous there.
    [[nodiscard]] Vec eval(double x, int order = 0) const {
        if (order < 0 || order > 3) throw std::domain_error("HermiteCurve::eval: order must be in 0..3");
        return eval_in_element(mesh_.locate(x), x, order);
    }

private:
    Mesh1D mesh_;
    std::size_t dim_;
    Vec dofs_;
};

inline Vec eval(const HermiteCurve& curve, double x, int order) { return curve.eval(x, order); }

/// Continuous piecewise polynomial of degree 1 or 2 in Lagrange form. Values
/// live on N_1 (degree 1) or N_2 (degree 2, node/midpoint interleaved), one
/// row per point; shared nodes are stored once.
template <int Degree>
class LagrangeField {
    static_assert(Degree == 1 || Degree == 2);

public:
    static constexpr int degree = Degree;

    LagrangeField(Mesh1D mesh, std::size_t dim)
        : mesh_(std::move(mesh)), dim_(dim),
          values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(Degree * mesh_.elements() + 1),
                                        static_cast<Eigen::Index>(dim))) {}

    [[nodiscard]] const Mesh1D& mesh() const { return mesh_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] Eigen::Index num_points() const { return values_.rows(); }
    [[nodiscard]] const Eigen::MatrixXd& values() const { return values_; }
    [[nodiscard]] Eigen::MatrixXd& values() { return values_; }

    [[nodiscard]] Vec at_node(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(Degree * i)).transpose(); }
    [[nodiscard]] Vec at_midpoint(std::size_t e) const {
        static_assert(Degree == 2);
        return values_.row(static_cast<Eigen::Index>(2 * e + 1)).transpose();
    }

    [[nodiscard]] Vec eval(double x) const {
        const std::size_t e = mesh_.locate(x);
        const double t = (x - mesh_.node(e)) / mesh_.length(e);
        const auto r = [&](std::size_t k) { return values_.row(static_cast<Eigen::Index>(Degree * e + k)).transpose(); };
        if constexpr (Degree == 1) {
            return (1 - t) * r(0) + t * r(1);
        } else {
            return 2 * (t - 0.5) * (t - 1) * r(0) - 4 * t * (t - 1) * r(1) + 2 * t * (t - 0.5) * r(2);
        }
    }

private:
    Mesh1D mesh_;
    std::size_t dim_;
    Eigen::MatrixXd values_;
};

using LinearField = LagrangeField<1>;
using QuadraticField = LagrangeField<2>;

/// I_{h,3}: nodal values and derivatives of f.
inline HermiteCurve interp_hermite(const FunctionOracle& f, const Mesh1D& mesh) {
    HermiteCurve c(mesh, f.dim);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        c.set_value(i, f(mesh.node(i), 0));
        c.set_deriv(i, f(mesh.node(i), 1));
    }
    return c;
}

/// I_{h,2}: values at nodes and midpoints.
inline QuadraticField interp_quadratic(const FunctionOracle& f, const Mesh1D& mesh) {
    QuadraticField q(mesh, f.dim);
    const auto pts = constraint_points(mesh, ConstraintVariant::P2);
    for (std::size_t k = 0; k < pts.size(); ++k) q.values().row(static_cast<Eigen::Index>(k)) = f(pts[k].x, 0).transpose();
    return q;
}

/// I_{h,1}: values at nodes.
inline LinearField interp_linear(const FunctionOracle& f, const Mesh1D& mesh) {
    LinearField q(mesh, f.dim);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) q.values().row(static_cast<Eigen::Index>(i)) = f(mesh.node(i), 0).transpose();
    return q;
}

/// Zeroes the endpoint values, turning I_{h,k} into I_{h,k,0}.
template <int Degree>
LagrangeField<Degree> zero_boundary(LagrangeField<Degree> field) {
    field.values().row(0).setZero();
    field.values().row(field.num_points() - 1).setZero();
    return field;
}

namespace detail {

/// Neumaier compensated running sum over d-vectors.
class CompensatedSum {
public:
    explicit CompensatedSum(Vec start) : sum_(std::move(start)), comp_(Vec::Zero(sum_.size())) {}

    void add(const Vec& term) {
        for (Eigen::Index k = 0; k < sum_.size(); ++k) {
            const double t = sum_[k] + term[k];
            if (std::abs(sum_[k]) >= std::abs(term[k]))
                comp_[k] += (sum_[k] - t) + term[k];
            else
                comp_[k] += (term[k] - t) + sum_[k];
            sum_[k] = t;
        }
    }

    [[nodiscard]] Vec value() const { return sum_ + comp_; }

private:
    Vec sum_;
    Vec comp_;
};

inline HermiteCurve integrate_tangent(const Vec& start, const FunctionOracle& fprime, const Mesh1D& mesh, bool with_midpoints) {
    if (static_cast<std::size_t>(start.size()) != fprime.dim)
        throw std::invalid_argument("interp_j: start value dimension does not match the derivative oracle");
    HermiteCurve c(mesh, fprime.dim);
    detail::CompensatedSum acc(start);
    Vec left = fprime(mesh.node(0), 0);
    c.set_value(0, start);
    c.set_deriv(0, left);
    for (std::size_t e = 0; e < mesh.elements(); ++e) {
        const double h = mesh.length(e);
        const Vec right = fprime(mesh.node(e + 1), 0);
        if (with_midpoints)
            acc.add(h / 6.0 * (left + 4.0 * fprime(mesh.midpoint(e), 0) + right));
        else
            acc.add(h / 2.0 * (left + right));
        c.set_value(e + 1, acc.value());
        c.set_deriv(e + 1, right);
        left = right;
    }
    return c;
}

} // namespace detail

/// J_{h,3}: start value plus the exact integral of the piecewise quadratic
/// interpolant of f'. `fprime(x, 0)` must return f'(x). The derivative of the
/// result matches f' at every node and midpoint.
inline HermiteCurve interp_j3(const Vec& start, const FunctionOracle& fprime, const Mesh1D& mesh) {
    return detail::integrate_tangent(start, fprime, mesh, true);
}

/// J_{h,2}: start value plus the integral of the piecewise linear interpolant
/// of f'. The result is a C^1 piecewise quadratic, stored as a Hermite curve.
inline HermiteCurve interp_j2(const Vec& start, const FunctionOracle& fprime, const Mesh1D& mesh) {
    return detail::integrate_tangent(start, fprime, mesh, false);
}

/// Oracle returning the (order+1)-th derivative of f, for feeding derivative
/// data into interp_j3 / interp_j2.
inline FunctionOracle derivative_of(FunctionOracle f) {
    const std::size_t dim = f.dim;
    return {dim, [g = std::move(f)](double x, int order) { return g(x, order + 1); }};
}

/// Simpson rule on [lo, hi].
template <typename F>
auto simpson(F&& f, double lo, double hi) {
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
}

/// Integration weights of the lumped products over the constraint points of
/// `variant`: Simpson weights for P2, trapezoid weights for P1. They sum to
/// b - a and are strictly positive.
inline std::vector<double> lumped_weights(const Mesh1D& mesh, ConstraintVariant variant = ConstraintVariant::P2) {
    const std::size_t m = mesh.elements();
    if (variant == ConstraintVariant::P2) {
        std::vector<double> w(2 * m + 1, 0.0);
        for (std::size_t e = 0; e < m; ++e) {
            const double h = mesh.length(e);
            w[2 * e] += h / 6.0;
            w[2 * e + 1] += 2.0 * h / 3.0;
            w[2 * e + 2] += h / 6.0;
        }
        return w;
    }
    std::vector<double> w(m + 1, 0.0);
    for (std::size_t e = 0; e < m; ++e) {
        w[e] += mesh.length(e) / 2.0;
        w[e + 1] += mesh.length(e) / 2.0;
    }
    return w;
}

/// (f, g)_{h,2} for P2 (elementwise Simpson of the pointwise dot product) or
/// (f, g)_{h,1} for P1 (trapezoid on nodal products).
inline double lumped_product(const QuadraticField& f, const QuadraticField& g, ConstraintVariant variant) {
    if (!(f.mesh() == g.mesh()) || f.dim() != g.dim())
        throw std::invalid_argument("lumped_product: fields live on different meshes or dimensions");
    const auto w = lumped_weights(f.mesh(), variant);
    double sum = 0.0;
    const int stride = variant == ConstraintVariant::P2 ? 1 : 2;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k * stride);
        sum += w[k] * f.values().row(row).dot(g.values().row(row));
    }
    return sum;
}

} // namespace bending
