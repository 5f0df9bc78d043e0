#include "bending/curves.hpp"
#include "bending/experiments.hpp"
#include "bending/splines.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace bending;
using std::numbers::pi;

namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }

FunctionOracle polynomial(std::vector<double> c) {
    return {1, [c](double x, int k) {
                double v = 0.0;
                for (std::size_t p = static_cast<std::size_t>(k); p < c.size(); ++p) {
                    double f = 1.0;
                    for (int q = 0; q < k; ++q) f *= static_cast<double>(p) - q;
                    v += c[p] * f * std::pow(x, static_cast<double>(p) - k);
                }
                return scalar(v);
            }};
}

} // namespace

TEST(HermiteCurve, SmoothStepMidpoint) {
    HermiteCurve c(build_uniform_mesh(0, 1, 1), 1);
    c.set_value(1, scalar(1.0));
    EXPECT_DOUBLE_EQ(c.eval(0.5, 0)[0], 0.5);
    // 3t^2 - 2t^3 and its derivatives at t = 0.3
    EXPECT_NEAR(c.eval(0.3, 0)[0], 3 * 0.09 - 2 * 0.027, 1e-15);
    EXPECT_NEAR(c.eval(0.3, 1)[0], 6 * 0.3 - 6 * 0.09, 1e-14);
    EXPECT_NEAR(c.eval(0.3, 2)[0], 6 - 12 * 0.3, 1e-13);
    EXPECT_NEAR(c.eval(0.3, 3)[0], -12, 1e-12);
}

TEST(HermiteCurve, NodalDerivativesAreStored) {
    const Mesh1D m = build_uniform_mesh(-1, 2, 5);
    HermiteCurve c(m, 2);
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < c.size(); ++i) c.dofs()[i] = g(rng);
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        EXPECT_TRUE(c.eval(m.node(i), 1).isApprox(c.deriv(i), 1e-13));
        EXPECT_TRUE(c.eval(m.node(i), 0).isApprox(c.value(i), 1e-13));
        if (i > 0 && i + 1 < m.num_nodes()) {
            EXPECT_TRUE(c.eval_in_element(i - 1, m.node(i), 1).isApprox(c.eval_in_element(i, m.node(i), 1), 1e-12));
            EXPECT_TRUE(c.eval(m.node(i), 2).isApprox(c.eval_in_element(i - 1, m.node(i), 2), 1e-14));
        }
    }
}

TEST(HermiteCurve, LinearDataHasNoCurvature) {
    const Mesh1D m = build_uniform_mesh(0, 3, 6);
    const HermiteCurve c = interp_hermite(polynomial({0.5, 2.0}), m);
    for (double x : {0.0, 0.1, 1.0, 1.77, 3.0}) {
        EXPECT_NEAR(c.eval(x, 2)[0], 0.0, 1e-12);
        EXPECT_NEAR(c.eval(x, 0)[0], 0.5 + 2 * x, 1e-14);
    }
}

TEST(HermiteCurve, DomainErrors) {
    HermiteCurve c(build_uniform_mesh(0, 1, 2), 1);
    EXPECT_THROW(c.eval(1.5, 0), std::domain_error);
    EXPECT_THROW(c.eval(0.5, 4), std::domain_error);
    EXPECT_THROW(HermiteCurve(build_uniform_mesh(0, 1, 2), 1, Vec::Zero(3)), std::invalid_argument);
}

TEST(Interpolation, HermiteReproducesCubics) {
    const auto f = polynomial({1.0, -2.0, 0.5, 3.0});
    for (std::size_t M : {1u, 3u}) {
        const HermiteCurve c = interp_hermite(f, build_uniform_mesh(-1, 1, M));
        for (double x = -1; x <= 1; x += 0.0625)
            for (int k = 0; k <= 3; ++k) EXPECT_NEAR(c.eval(x, k)[0], f(x, k)[0], 1e-12) << "x=" << x << " k=" << k;
    }
}

TEST(Interpolation, HermiteSineMaxErrorOrderFour) {
    const auto f = sine_oracle();
    std::vector<double> errs, hs;
    for (std::size_t M : {16u, 32u, 64u}) {
        const Mesh1D m = build_uniform_mesh(0, 2 * pi, M);
        const HermiteCurve c = interp_hermite(f, m);
        double worst = 0.0;
        for (int s = 0; s <= 4000; ++s) {
            const double x = 2 * pi * s / 4000.0;
            worst = std::max(worst, std::abs(c.eval(x, 0)[0] - std::sin(x)));
        }
        errs.push_back(worst);
        hs.push_back(m.h());
    }
    for (double r : eoc(errs, hs)) EXPECT_NEAR(r, 4.0, 0.2);
}

TEST(Interpolation, QuadraticAndLinear) {
    const Mesh1D one = build_uniform_mesh(0, 1, 1);
    const QuadraticField q = interp_quadratic(polynomial({0, 0, 0, 1}), one);
    EXPECT_DOUBLE_EQ(q.values()(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(q.values()(1, 0), 0.125);
    EXPECT_DOUBLE_EQ(q.values()(2, 0), 1.0);

    const auto quad = polynomial({0.3, -1.0, 2.0});
    const QuadraticField qq = interp_quadratic(quad, build_uniform_mesh(0, 2, 3));
    const LinearField ll = interp_linear(polynomial({0.3, -1.0}), build_uniform_mesh(0, 2, 3));
    for (double x = 0; x <= 2; x += 0.05) {
        EXPECT_NEAR(qq.eval(x)[0], quad(x)[0], 1e-13);
        EXPECT_NEAR(ll.eval(x)[0], 0.3 - x, 1e-13);
    }

    std::vector<double> errs, hs;
    for (std::size_t M : {8u, 16u, 32u, 64u}) {
        const Mesh1D m = build_uniform_mesh(0, 2 * pi, M);
        const QuadraticField s = interp_quadratic(sine_oracle(), m);
        double worst = 0.0;
        for (int k = 0; k <= 3000; ++k) {
            const double x = 2 * pi * k / 3000.0;
            worst = std::max(worst, std::abs(s.eval(x)[0] - std::sin(x)));
        }
        errs.push_back(worst);
        hs.push_back(m.h());
    }
    for (double r : eoc(errs, hs)) EXPECT_NEAR(r, 3.0, 0.2);
}

TEST(Interpolation, ZeroBoundary) {
    const QuadraticField q = zero_boundary(interp_quadratic(polynomial({1.0}), build_uniform_mesh(0, 1, 2)));
    EXPECT_EQ(q.values()(0, 0), 0.0);
    EXPECT_EQ(q.values()(4, 0), 0.0);
    EXPECT_EQ(q.values()(2, 0), 1.0);
}

TEST(InterpJ3, LinearIsExact) {
    const FunctionOracle line = curves::line(2);
    const Mesh1D m = build_uniform_mesh(0, 1, 4);
    const HermiteCurve c = interp_j3(line(0.0), derivative_of(line), m);
    const HermiteCurve ref = interp_hermite(line, m);
    EXPECT_LT((c.dofs() - ref.dofs()).norm(), 1e-15);
}

TEST(InterpJ3, CircleUnitSpeedAtN2AndDerivativeInterpolation) {
    const FunctionOracle z = curves::circle();
    for (std::size_t M : {1u, 8u, 33u}) {
        const Mesh1D m = build_uniform_mesh(0, 2 * pi, M);
        const HermiteCurve c = interp_j3(z(0.0), derivative_of(z), m);
        EXPECT_LT(constraint_violation(c, ConstraintVariant::P2), 1e-14);
        for (const double x : constraint_nodes(m, ConstraintVariant::P2)) EXPECT_LT((c.eval(x, 1) - z(x, 1)).norm(), 1e-14);
    }
}

TEST(InterpJ3, EndpointDriftOrderFour) {
    // over a full period the circle's drift cancels by symmetry, so stop at x = 2
    const FunctionOracle z = curves::circle();
    std::vector<double> errs, hs;
    for (std::size_t M : {4u, 8u, 16u, 32u}) {
        const Mesh1D m = build_uniform_mesh(0, 2, M);
        const HermiteCurve c = interp_j3(z(0.0), derivative_of(z), m);
        errs.push_back((c.value(M) - z(2.0, 0)).norm());
        hs.push_back(m.h());
    }
    for (double r : eoc(errs, hs)) EXPECT_NEAR(r, 4.0, 0.2);
}

TEST(InterpJ3, ConstraintExactForUnitSpeedInput) {
    // Arbitrary unit-speed planar curve: tangent angle theta(x) = sin(3x) + x^2.
    const FunctionOracle tangent{2, [](double x, int k) -> Vec {
                                     const double th = std::sin(3 * x) + x * x;
                                     if (k == 0) return curves::vec2(std::cos(th), std::sin(th));
                                     const double dth = 3 * std::cos(3 * x) + 2 * x;
                                     return curves::vec2(-std::sin(th) * dth, std::cos(th) * dth);
                                 }};
    const Mesh1D m = build_uniform_mesh(0, 2, 50);
    const HermiteCurve c = interp_j3(curves::vec2(0, 0), tangent, m);
    EXPECT_LT(constraint_violation(c, ConstraintVariant::P2), 1e-13);
}

TEST(InterpJ2, PiecewiseQuadraticSatisfiesP1) {
    const FunctionOracle z = curves::circle();
    const Mesh1D m = build_uniform_mesh(0, 2 * pi, 8);
    const HermiteCurve c = interp_j2(z(0.0), derivative_of(z), m);
    EXPECT_LT(constraint_violation(c, ConstraintVariant::P1), 1e-14);
    for (std::size_t e = 0; e < m.elements(); ++e) {
        EXPECT_LT(c.eval_in_element(e, m.midpoint(e), 3).norm(), 1e-10);
        // derivative is the linear interpolant of the tangent
        EXPECT_LT((c.eval_in_element(e, m.midpoint(e), 1) - 0.5 * (z(m.node(e), 1) + z(m.node(e + 1), 1))).norm(), 1e-14);
    }
}

TEST(Lumping, Weights) {
    const auto w2 = lumped_weights(build_uniform_mesh(0, 1, 2));
    const std::vector<double> expect = {1.0 / 12, 1.0 / 3, 1.0 / 6, 1.0 / 3, 1.0 / 12};
    ASSERT_EQ(w2.size(), expect.size());
    for (std::size_t k = 0; k < w2.size(); ++k) EXPECT_NEAR(w2[k], expect[k], 1e-15);
    const auto w1 = lumped_weights(build_uniform_mesh(0, 1, 1));
    EXPECT_NEAR(w1[0], 1.0 / 6, 1e-16);
    EXPECT_NEAR(w1[1], 2.0 / 3, 1e-16);
    EXPECT_NEAR(w1[2], 1.0 / 6, 1e-16);
    const Mesh1D graded({0.0, 0.1, 0.5, 0.6, 2.0});
    for (auto v : {ConstraintVariant::P1, ConstraintVariant::P2}) {
        const auto w = lumped_weights(graded, v);
        double total = 0.0;
        for (double x : w) {
            EXPECT_GT(x, 0.0);
            total += x;
        }
        EXPECT_NEAR(total, 2.0, 1e-14);
    }
}

TEST(Lumping, Products) {
    const Mesh1D m = build_uniform_mesh(-1, 3, 5);
    QuadraticField one(m, 1);
    one.values().setOnes();
    EXPECT_NEAR(lumped_product(one, one, ConstraintVariant::P2), 4.0, 1e-14);
    EXPECT_NEAR(lumped_product(one, one, ConstraintVariant::P1), 4.0, 1e-14);

    const QuadraticField id = interp_quadratic(polynomial({0, 1}), build_uniform_mesh(0, 1, 1));
    EXPECT_NEAR(lumped_product(id, id, ConstraintVariant::P2), 1.0 / 3, 1e-16);
    EXPECT_NEAR(lumped_product(id, id, ConstraintVariant::P1), 0.5, 1e-16);

    QuadraticField other(build_uniform_mesh(0, 1, 2), 1);
    EXPECT_THROW(lumped_product(id, other, ConstraintVariant::P2), std::invalid_argument);
}

TEST(LumpingProperty, SymmetricBilinearPositive) {
    std::mt19937 rng(11);
    std::normal_distribution<double> g;
    const Mesh1D m({0.0, 0.3, 0.7, 1.6, 2.0});
    for (int trial = 0; trial < 100; ++trial) {
        QuadraticField f(m, 3), h(m, 3), k(m, 3);
        for (auto* q : {&f, &h, &k})
            for (Eigen::Index i = 0; i < q->values().size(); ++i) q->values().data()[i] = g(rng);
        const double a = g(rng);
        QuadraticField comb(m, 3);
        comb.values() = a * f.values() + h.values();
        for (auto v : {ConstraintVariant::P1, ConstraintVariant::P2}) {
            EXPECT_NEAR(lumped_product(f, h, v), lumped_product(h, f, v), 1e-13);
            EXPECT_NEAR(lumped_product(comb, k, v), a * lumped_product(f, k, v) + lumped_product(h, k, v), 1e-12);
        }
        EXPECT_GT(lumped_product(f, f, ConstraintVariant::P2), 0.0);
    }
}

TEST(LumpingProperty, SimpsonExactOnCubics) {
    std::mt19937 rng(5);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(-3, 3), len(1e-3, 4);
    for (int trial = 0; trial < 1000; ++trial) {
        const double c0 = g(rng), c1 = g(rng), c2 = g(rng), c3 = g(rng);
        const double lo = u(rng), hi = lo + len(rng);
        const auto q = [&](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); };
        const auto Q = [&](double x) { return x * (c0 + x * (c1 / 2 + x * (c2 / 3 + x * c3 / 4))); };
        const double exact = Q(hi) - Q(lo);
        const double scale = (hi - lo) * (std::abs(c0) + std::abs(c1) * 3 + std::abs(c2) * 9 + std::abs(c3) * 27 + 1e-300);
        EXPECT_LE(std::abs(simpson(q, lo, hi) - exact), 1e-13 * scale);
    }
}

TEST(LumpingProperty, NormEquivalenceRandomQuadraticFields) {
    std::mt19937 rng(2024);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::uniform_int_distribution<int> msize(1, 40);
    double lo = 1e300, hi = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int M = msize(rng);
        std::vector<double> nodes = {0.0};
        for (int i = 0; i < M; ++i) nodes.push_back(nodes.back() + u(rng));
        const Mesh1D m(nodes);
        QuadraticField f(m, 2);
        for (Eigen::Index i = 0; i < f.values().size(); ++i) f.values().data()[i] = g(rng);
        double l2 = 0.0;
        for (std::size_t e = 0; e < m.elements(); ++e)
            l2 += oracle::integrate([&](double x) { return f.eval(x).squaredNorm(); }, m.node(e), m.node(e + 1), 1);
        const double ratio = lumped_product(f, f, ConstraintVariant::P2) / l2;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    EXPECT_GE(lo, 0.2);
    EXPECT_LE(hi, 5.0);
}

TEST(InterpolationProperty, SineEocMatchesOrders) {
    const ExperimentTable t = interpolation_study({8, 16, 32, 64, 128});
    const std::map<std::string, double> expect = {{"linf", 4}, {"l2", 4}, {"h1", 3}, {"h2", 2}};
    for (const auto& col : t.columns)
        for (std::size_t r = 1; r < col.eoc.size(); ++r) {
            ASSERT_TRUE(col.eoc[r]);
            EXPECT_NEAR(*col.eoc[r], expect.at(col.label), 0.2) << col.label << " row " << r;
        }
}
