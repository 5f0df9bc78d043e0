#pragma once

// Reference computations used by the tests. None of these reuse the library's
// closed-form basis or quadrature tables.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

/// n-point Gauss-Legendre rule on [0, 1] from Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
        w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Integral of f over [lo, hi] with `pieces` panels of a 12-point rule.
inline double integrate(const std::function<double(double)>& f, double lo, double hi, int pieces = 8) {
    static const auto rule = gauss_legendre(12);
    double sum = 0.0;
    const double len = (hi - lo) / pieces;
    for (int p = 0; p < pieces; ++p)
        for (std::size_t q = 0; q < rule.first.size(); ++q) sum += rule.second[q] * len * f(lo + len * (p + rule.first[q]));
    return sum;
}

/// Monomial coefficients of the cubic Hermite basis on [0, h], local order
/// (value left, slope left, value right, slope right), by solving the 4x4
/// interpolation system.
inline Eigen::Matrix4d hermite_coefficients(double h) {
    Eigen::Matrix4d V;
    V << 1, 0, 0, 0,          // p(0)
        0, 1, 0, 0,           // p'(0)
        1, h, h * h, h * h * h, // p(h)
        0, 1, 2 * h, 3 * h * h; // p'(h)
    return V.inverse();       // column j: coefficients of basis function j
}

/// k-th derivative of the polynomial with monomial coefficients c at s.
inline double poly_derivative(const Eigen::Vector4d& c, double s, int k) {
    double v = 0.0;
    for (int p = k; p < 4; ++p) {
        double f = 1.0;
        for (int q = 0; q < k; ++q) f *= p - q;
        v += c[p] * f * std::pow(s, p - k);
    }
    return v;
}

/// Element matrix int_0^h D^k phi_i D^k phi_j by high-order quadrature.
inline Eigen::Matrix4d element_matrix(double h, int k) {
    const Eigen::Matrix4d C = hermite_coefficients(h);
    Eigen::Matrix4d out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            out(i, j) = integrate([&](double s) { return poly_derivative(C.col(i), s, k) * poly_derivative(C.col(j), s, k); }, 0.0, h, 1);
    return out;
}

/// Closed-form Euler-Bernoulli beam element stiffness.
inline Eigen::Matrix4d beam_stiffness(double h) {
    Eigen::Matrix4d K;
    K << 12, 6 * h, -12, 6 * h,
        6 * h, 4 * h * h, -6 * h, 2 * h * h,
        -12, -6 * h, 12, -6 * h,
        6 * h, 2 * h * h, -6 * h, 4 * h * h;
    return K / (h * h * h);
}

/// Random symmetric positive definite n x n matrix.
inline Eigen::MatrixXd random_spd(int n, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = g(rng);
    return R * R.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_matrix(int r, int c, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = g(rng);
    return M;
}

/// Dense Schur-complement solution of [[A, B^T], [B, 0]] (x, l) = (b, c).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> schur_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& b,
                                                               const Eigen::VectorXd& c) {
    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    const Eigen::VectorXd ab = llt.solve(b);
    const Eigen::MatrixXd abt = llt.solve(B.transpose());
    const Eigen::VectorXd l = (B * abt).ldlt().solve(B * ab - c);
    return {ab - abt * l, l};
}

} // namespace oracle
