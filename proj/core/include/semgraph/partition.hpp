#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "semgraph/pointcloud.hpp"

namespace semgraph {

/// Default neighbourhood threshold for 1,024-point clouds on the unit sphere.
inline constexpr double kDefaultTau = 0.283;

/// Square 0/1 matrix, row-major.
class BinaryMatrix {
public:
    BinaryMatrix() = default;
    explicit BinaryMatrix(std::size_t n, std::uint8_t fill = 0) : n_(n), bits_(n * n, fill) {}

    std::size_t size() const { return n_; }
    std::uint8_t operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j]; }
    std::uint8_t& operator()(std::size_t i, std::size_t j) { return bits_[i * n_ + j]; }
    std::size_t count() const;

    /// All off-diagonal entries 1, diagonal 0.
    static BinaryMatrix complete(std::size_t n);

    friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct NeighborhoodMatrix {
    BinaryMatrix entries;  // (i, j) = 1 iff distance <= threshold; diagonal is 1
    double threshold = 0.0;
};

NeighborhoodMatrix build_neighborhood(std::span<const Point3> part, double tau);

/// Connected components of the tau-neighbourhood graph as index lists.
/// Components are ordered by their smallest index; indices within a
/// component are ascending.
std::vector<std::vector<std::size_t>> connected_subparts(std::span<const Point3> part, double tau);

/// Same components, returned as point lists.
std::vector<std::vector<Point3>> split_subparts(std::span<const Point3> part, double tau);

/// Centroid of a non-empty point list.
Point3 extract_node(std::span<const Point3> part);

struct SemanticGraph {
    std::vector<Point3> node_positions;
    std::vector<int> part_labels;  // metadata only; not a node feature
    int class_label = 0;
    BinaryMatrix adjacency;  // complete digraph without self-loops

    std::size_t node_count() const { return node_positions.size(); }
};

/// Part label groups (ascending label) -> spatial sub-parts -> one centroid
/// node each, fully connected in both directions.
SemanticGraph build_graph(const PointCloud& labeled_cloud, double tau, int class_label);

}  // namespace semgraph
