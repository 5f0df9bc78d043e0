#pragma once

#include "bending/analysis.hpp"
#include "bending/assembly.hpp"
#include "bending/splines.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bending::curves {

using std::numbers::pi;

inline Vec vec2(double x, double y) { return (Vec(2) << x, y).finished(); }
inline Vec vec3(double x, double y, double z) { return (Vec(3) << x, y, z).finished(); }

inline void check_order(int order, int max_order) {
    if (order < 0 || order > max_order) throw std::domain_error("curve oracle: unsupported derivative order");
}

/// Unit circle (cos x, sin x).
inline FunctionOracle circle() {
    return {2, [](double x, int k) -> Vec {
                check_order(k, 3);
                switch (k) {
                case 0: return vec2(std::cos(x), std::sin(x));
                case 1: return vec2(-std::sin(x), std::cos(x));
                case 2: return vec2(-std::cos(x), -std::sin(x));
                default: return vec2(std::sin(x), -std::cos(x));
                }
            }};
}

inline const double kHelixRoot = std::sqrt(pi * pi + 1.0);
inline const double kHelixTurn = pi / kHelixRoot;
inline const double kHelixRise = 1.0 / kHelixRoot;
inline const double kHelixLength = 2.0 * kHelixRoot;

/// Arc-length helix (cos(l x), sin(l x), m x), l = pi / sqrt(pi^2 + 1), m = 1 / sqrt(pi^2 + 1).
inline FunctionOracle helix() {
    return {3, [](double x, int k) -> Vec {
                check_order(k, 3);
                const double l = kHelixTurn, m = kHelixRise;
                const double c = std::cos(l * x), s = std::sin(l * x);
                switch (k) {
                case 0: return vec3(c, s, m * x);
                case 1: return vec3(-l * s, l * c, m);
                case 2: return vec3(-l * l * c, -l * l * s, 0.0);
                default: return vec3(l * l * l * s, -l * l * l * c, 0.0);
                }
            }};
}

/// Stadium-shaped start curve on [0, 4 pi]: half circle, straight segment,
/// half circle, straight segment. C^1 and unit speed; second derivatives
/// are taken from the piece on the left at junctions.
inline FunctionOracle oval_start() {
    return {2, [](double x, int k) -> Vec {
                check_order(k, 2);
                if (x <= pi) {
                    if (k == 0) return vec2(std::cos(x), std::sin(x));
                    if (k == 1) return vec2(-std::sin(x), std::cos(x));
                    return vec2(-std::cos(x), -std::sin(x));
                }
                if (x <= 2 * pi) {
                    if (k == 0) return vec2(-1.0, pi - x);
                    if (k == 1) return vec2(0.0, -1.0);
                    return vec2(0.0, 0.0);
                }
                if (x <= 3 * pi) {
                    const double y = x - pi;
                    if (k == 0) return vec2(std::cos(y), std::sin(y) - pi);
                    if (k == 1) return vec2(-std::sin(y), std::cos(y));
                    return vec2(-std::cos(y), -std::sin(y));
                }
                if (k == 0) return vec2(1.0, x - 4 * pi);
                if (k == 1) return vec2(0.0, 1.0);
                return vec2(0.0, 0.0);
            }};
}

/// Limit curve of the oval flow, 2 (cos(x/2) - 1/2, sin(x/2)).
inline FunctionOracle oval_target() {
    return {2, [](double x, int k) -> Vec {
                check_order(k, 3);
                const double c = std::cos(0.5 * x), s = std::sin(0.5 * x);
                switch (k) {
                case 0: return vec2(2.0 * (c - 0.5), 2.0 * s);
                case 1: return vec2(-s, c);
                case 2: return vec2(-0.5 * c, -0.5 * s);
                default: return vec2(0.25 * s, -0.25 * c);
                }
            }};
}

/// Straight segment (x, 0) in R^d.
inline FunctionOracle line(std::size_t dim = 2) {
    return {dim, [dim](double x, int k) -> Vec {
                check_order(k, 3);
                Vec v = Vec::Zero(static_cast<Eigen::Index>(dim));
                if (k == 0) v[0] = x;
                if (k == 1) v[0] = 1.0;
                return v;
            }};
}

/// A named test problem: interval, start curve, boundary conditions and the
/// stationary curve the flow converges to.
struct Problem {
    std::string name;
    double a = 0.0;
    double b = 1.0;
    FunctionOracle start;
    ExactSolution exact;
    BoundaryConditions bc;

    [[nodiscard]] std::size_t dim() const { return start.dim; }
};

/// Boundary conditions u(0) = value, u'(0) = u'(b) = derivative.
inline BoundaryConditions semi_clamped(const Vec& value, const Vec& derivative) {
    BoundaryConditions bc;
    bc.left.value = value;
    bc.left.derivative = derivative;
    bc.right.derivative = derivative;
    return bc;
}

inline Problem make_problem(const std::string& name) {
    Problem p;
    p.name = name;
    if (name == "circle") {
        p.a = 0.0;
        p.b = 2 * pi;
        p.start = circle();
        p.exact = {circle(), 2 * pi, [](double) { return -1.0; }};
        p.bc = semi_clamped(vec2(1, 0), vec2(0, 1));
    } else if (name == "helix") {
        p.a = 0.0;
        p.b = kHelixLength;
        p.start = helix();
        // Clamping both ends leaves u''' - lambda u' = (0, 0, l^2 m), hence
        // lambda = -|u''|^2 - l^2 m^2 = -l^2.
        const double k2 = kHelixTurn * kHelixTurn;
        p.exact = {helix(), k2 * k2 * kHelixLength, [k2](double) { return -k2; }};
        const FunctionOracle h = helix();
        p.bc.left.value = h(p.a, 0);
        p.bc.left.derivative = h(p.a, 1);
        p.bc.right.value = h(p.b, 0);
        p.bc.right.derivative = h(p.b, 1);
    } else if (name == "oval") {
        p.a = 0.0;
        p.b = 4 * pi;
        p.start = oval_start();
        p.exact = {oval_target(), pi, [](double) { return -0.25; }};
        p.bc = semi_clamped(vec2(1, 0), vec2(0, 1));
    } else if (name == "line") {
        p.a = 0.0;
        p.b = 1.0;
        p.start = line(2);
        p.exact = {line(2), 0.0, [](double) { return 0.0; }};
        p.bc.left.value = vec2(0, 0);
        p.bc.left.derivative = vec2(1, 0);
        p.bc.right.derivative = vec2(1, 0);
    } else {
        throw std::invalid_argument("unknown problem '" + name + "' (expected circle, helix, oval or line)");
    }
    return p;
}

} // namespace bending::curves
