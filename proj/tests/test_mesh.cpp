#include "bending/mesh.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <numeric>
#include <random>

using namespace bending;
using std::numbers::pi;

TEST(Mesh, UniformQuarterCircle) {
    const Mesh1D m = build_uniform_mesh(0.0, 2 * pi, 4);
    ASSERT_EQ(m.num_nodes(), 5u);
    const std::vector<double> nodes = {0, pi / 2, pi, 3 * pi / 2, 2 * pi};
    const std::vector<double> mids = {pi / 4, 3 * pi / 4, 5 * pi / 4, 7 * pi / 4};
    for (std::size_t i = 0; i < nodes.size(); ++i) EXPECT_NEAR(m.node(i), nodes[i], 1e-15);
    for (std::size_t i = 0; i < mids.size(); ++i) EXPECT_NEAR(m.midpoint(i), mids[i], 1e-15);
    EXPECT_DOUBLE_EQ(m.quasi_uniformity(), 1.0);
}

TEST(Mesh, SingleElement) {
    const Mesh1D m = build_uniform_mesh(0.0, 1.0, 1);
    EXPECT_EQ(m.elements(), 1u);
    EXPECT_DOUBLE_EQ(m.midpoint(0), 0.5);
    EXPECT_DOUBLE_EQ(m.h(), 1.0);
}

TEST(Mesh, OvalInterval) {
    const Mesh1D m = build_uniform_mesh(0.0, 4 * pi, 8);
    EXPECT_NEAR(m.h(), pi / 2, 1e-15);
    EXPECT_EQ(m.num_nodes(), 9u);
    EXPECT_EQ(m.midpoints().size(), 8u);
}

TEST(Mesh, RejectsBadInput) {
    EXPECT_THROW(build_uniform_mesh(1.0, 1.0, 4), std::invalid_argument);
    EXPECT_THROW(build_uniform_mesh(2.0, 1.0, 4), std::invalid_argument);
    EXPECT_THROW(build_uniform_mesh(0.0, 1.0, 0), std::invalid_argument);
    EXPECT_THROW(Mesh1D({0.0}), std::invalid_argument);
    EXPECT_THROW(Mesh1D({0.0, 0.5, 0.5, 1.0}), std::invalid_argument);
}

TEST(Mesh, ConstraintNodes) {
    const Mesh1D m = build_uniform_mesh(0.0, 1.0, 2);
    EXPECT_EQ(constraint_nodes(m, ConstraintVariant::P1), (std::vector<double>{0, 0.5, 1}));
    EXPECT_EQ(constraint_nodes(m, ConstraintVariant::P2), (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
    const auto one = constraint_nodes(build_uniform_mesh(0.0, 2 * pi, 1), ConstraintVariant::P2);
    ASSERT_EQ(one.size(), 3u);
    EXPECT_NEAR(one[1], pi, 1e-15);
    EXPECT_NEAR(one[2], 2 * pi, 1e-15);
}

TEST(Mesh, ConstraintPointBookkeeping) {
    const Mesh1D m = build_uniform_mesh(0.0, 1.0, 3);
    const auto pts = constraint_points(m, ConstraintVariant::P2);
    ASSERT_EQ(pts.size(), 7u);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        EXPECT_EQ(pts[k].is_node(), k % 2 == 0);
        if (!pts[k].is_node()) {
            EXPECT_EQ(pts[k].element, k / 2);
        }
    }
}

TEST(Mesh, LocateUsesLeftElementAtNodes) {
    const Mesh1D m = build_uniform_mesh(0.0, 1.0, 4);
    EXPECT_EQ(m.locate(0.0), 0u);
    EXPECT_EQ(m.locate(0.25), 0u);
    EXPECT_EQ(m.locate(0.26), 1u);
    EXPECT_EQ(m.locate(1.0), 3u);
    EXPECT_THROW((void)m.locate(-1e-9), std::domain_error);
    EXPECT_THROW((void)m.locate(1.0 + 1e-9), std::domain_error);
}

TEST(MeshProperty, GradedMeshes) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t M = 1 + static_cast<std::size_t>(trial % 17);
        std::vector<double> nodes = {-1.0};
        for (std::size_t i = 0; i < M; ++i) nodes.push_back(nodes.back() + u(rng));
        const Mesh1D m(nodes);
        EXPECT_EQ(constraint_nodes(m, ConstraintVariant::P1).size(), M + 1);
        EXPECT_EQ(constraint_nodes(m, ConstraintVariant::P2).size(), 2 * M + 1);
        const auto& len = m.element_lengths();
        const double total = std::accumulate(len.begin(), len.end(), 0.0);
        EXPECT_NEAR(total, m.b() - m.a(), 4e-16 * M * (m.b() - m.a()));
        for (std::size_t e = 0; e < M; ++e) {
            EXPECT_LT(m.node(e), m.midpoint(e));
            EXPECT_LT(m.midpoint(e), m.node(e + 1));
            EXPECT_LE(m.h(), m.quasi_uniformity() * len[e] * (1 + 1e-15));
        }
    }
}
