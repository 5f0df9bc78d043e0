#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bending {

/// Where the discrete inextensibility constraint is imposed: nodes only (P1)
/// or nodes and element midpoints (P2).
enum class ConstraintVariant { P1, P2 };

inline std::string_view to_string(ConstraintVariant v) {
    return v == ConstraintVariant::P1 ? "p1" : "p2";
}

inline ConstraintVariant parse_constraint_variant(std::string_view s) {
    if (s == "p1" || s == "P1") return ConstraintVariant::P1;
    if (s == "p2" || s == "P2") return ConstraintVariant::P2;
    throw std::invalid_argument("unknown constraint variant '" + std::string(s) + "' (expected p1 or p2)");
}

/// Partition a = x_0 < x_1 < ... < x_M = b of a parameter interval.
///
/// Midpoints and element lengths are computed once at construction and
/// stored, so every module sees bit-identical constraint points.
class Mesh1D {
public:
    explicit Mesh1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 2)
            throw std::invalid_argument("Mesh1D: need at least two nodes");
        for (std::size_t i = 1; i < nodes_.size(); ++i) {
            if (!(nodes_[i] > nodes_[i - 1]))
                throw std::invalid_argument("Mesh1D: nodes must be strictly increasing");
        }
        const std::size_t m = nodes_.size() - 1;
        lengths_.resize(m);
        midpoints_.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            lengths_[i] = nodes_[i + 1] - nodes_[i];
            midpoints_[i] = 0.5 * (nodes_[i] + nodes_[i + 1]);
        }
        h_ = *std::max_element(lengths_.begin(), lengths_.end());
        h_min_ = *std::min_element(lengths_.begin(), lengths_.end());
    }

    [[nodiscard]] double a() const { return nodes_.front(); }
    [[nodiscard]] double b() const { return nodes_.back(); }
    /// Number of elements M.
    [[nodiscard]] std::size_t elements() const { return lengths_.size(); }
    [[nodiscard]] std::size_t num_nodes() const { return nodes_.size(); }
    [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }
    [[nodiscard]] const std::vector<double>& midpoints() const { return midpoints_; }
    [[nodiscard]] const std::vector<double>& element_lengths() const { return lengths_; }
    [[nodiscard]] double node(std::size_t i) const { return nodes_[i]; }
    [[nodiscard]] double midpoint(std::size_t e) const { return midpoints_[e]; }
    [[nodiscard]] double length(std::size_t e) const { return lengths_[e]; }
    /// Maximal element length h.
    [[nodiscard]] double h() const { return h_; }
    /// Smallest c with h <= c * h_i for all elements.
    [[nodiscard]] double quasi_uniformity() const { return h_ / h_min_; }

    /// Element containing x. Interior nodes belong to the element on their left.
    [[nodiscard]] std::size_t locate(double x) const {
        if (x < a() || x > b())
            throw std::domain_error("Mesh1D::locate: point outside the mesh interval");
        auto it = std::lower_bound(nodes_.begin() + 1, nodes_.end() - 1, x);
        return static_cast<std::size_t>(it - nodes_.begin()) - 1;
    }

    friend bool operator==(const Mesh1D& l, const Mesh1D& r) { return l.nodes_ == r.nodes_; }

private:
    std::vector<double> nodes_;
    std::vector<double> lengths_;
    std::vector<double> midpoints_;
    double h_ = 0.0;
    double h_min_ = 0.0;
};

inline Mesh1D build_uniform_mesh(double a, double b, std::size_t elements) {
    if (!(a < b)) throw std::invalid_argument("build_uniform_mesh: require a < b");
    if (elements == 0) throw std::invalid_argument("build_uniform_mesh: require at least one element");
    std::vector<double> nodes(elements + 1);
    const double width = b - a;
    for (std::size_t i = 0; i <= elements; ++i)
        nodes[i] = a + width * static_cast<double>(i) / static_cast<double>(elements);
    nodes.back() = b;
    return Mesh1D(std::move(nodes));
}

/// A point where the constraint is imposed. `element` is the element used
/// for derivative evaluation (the left one for interior nodes); `node` is the
/// node index for nodes and -1 for midpoints.
struct ConstraintPoint {
    double x;
    std::size_t element;
    long node;

    [[nodiscard]] bool is_node() const { return node >= 0; }
};

/// Constraint points in ascending order: N_1 for P1, N_1 together with the
/// midpoints for P2 (node, midpoint, node, ...).
inline std::vector<ConstraintPoint> constraint_points(const Mesh1D& mesh, ConstraintVariant variant) {
    const std::size_t m = mesh.elements();
    std::vector<ConstraintPoint> pts;
    pts.reserve(variant == ConstraintVariant::P2 ? 2 * m + 1 : m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        pts.push_back({mesh.node(i), i == 0 ? 0 : i - 1, static_cast<long>(i)});
        if (variant == ConstraintVariant::P2 && i < m)
            pts.push_back({mesh.midpoint(i), i, -1});
    }
    return pts;
}

inline std::vector<double> constraint_nodes(const Mesh1D& mesh, ConstraintVariant variant) {
    std::vector<double> xs;
    for (const auto& p : constraint_points(mesh, variant)) xs.push_back(p.x);
    return xs;
}

} // namespace bending
