#pragma once

#include "bending/assembly.hpp"
#include "bending/splines.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <vector>

namespace bending {

/// Known stationary curve of an experiment.
struct ExactSolution {
    /// u with derivatives of order 0..2.
    FunctionOracle u;
    /// |u|_{H^2}^2 = int |u''|^2, stored in closed form.
    double h2_seminorm_sq = 0.0;
    /// Lagrange multiplier -|u''|^2, when known.
    std::optional<std::function<double(double)>> lambda;
};

/// Squared errors below this are treated as cancellation noise.
inline constexpr double kNegativeClampThreshold = 1e-12;

/// |u - Z|_{H^2} evaluated as sqrt(|u|^2 + Z^T S Z - 2 Z^T S I_{h,3}u); for
/// piecewise cubic Z the cross term int u''.Z'' equals the one with I_{h,3}u.
inline double h2_error(const HermiteCurve& Z, const ExactSolution& exact, const SparseMatrix& bending) {
    if (Z.size() != bending.rows()) throw std::invalid_argument("h2_error: size mismatch");
    const Vec ui = interp_hermite(exact.u, Z.mesh()).dofs();
    const Vec sz = bending * Z.dofs();
    const double sq = exact.h2_seminorm_sq + Z.dofs().dot(sz) - 2.0 * ui.dot(sz);
    if (sq < 0.0) {
        if (sq < -kNegativeClampThreshold)
            std::clog << "warning: h2_error: negative squared error " << sq << " clamped to 0\n";
        return 0.0;
    }
    return std::sqrt(sq);
}

struct WeakErrors {
    double l2 = 0.0;
    double h1 = 0.0;
};

/// L2 norm and H^1 seminorm of I_{h,3}(u - Z): the Hermite curve with DOFs
/// (u(x_i) - Z(x_i), u'(x_i) - Z'(x_i)).
inline WeakErrors weak_errors(const HermiteCurve& Z, const ExactSolution& exact, const SystemMatrices& mats) {
    const Vec e = interp_hermite(exact.u, Z.mesh()).dofs() - Z.dofs();
    return {std::sqrt(std::max(0.0, e.dot(mats.mass * e))), std::sqrt(std::max(0.0, e.dot(mats.gradient * e)))};
}

/// Experimental orders of convergence log(e_i/e_{i+1}) / log(h_i/h_{i+1}).
inline std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
    if (errors.size() != hs.size() || errors.size() < 2) throw std::invalid_argument("eoc: need two or more matching entries");
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!(errors[i] > 0.0) || !(hs[i] > 0.0)) throw std::invalid_argument("eoc: errors and mesh sizes must be positive");
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        out.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
    return out;
}

/// Least-squares slope of log(errors) against log(hs).
inline double loglog_slope(const std::vector<double>& errors, const std::vector<double>& hs) {
    if (errors.size() != hs.size() || errors.size() < 2) throw std::invalid_argument("loglog_slope: need two or more matching entries");
    const auto n = static_cast<double>(errors.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const double x = std::log(hs[i]), y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace bending
