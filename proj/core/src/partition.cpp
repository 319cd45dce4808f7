#include "semgraph/partition.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "semgraph/error.hpp"

namespace semgraph {

std::size_t BinaryMatrix::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMatrix BinaryMatrix::complete(std::size_t n) {
    BinaryMatrix m(n, 1);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 0;
    return m;
}

namespace {

void check_part(std::span<const Point3> part, double tau) {
    if (part.empty()) throw ArgumentError("part must contain at least one point");
    if (!(tau > 0.0)) throw ArgumentError("neighbourhood threshold tau must be positive");
}

}  // namespace

NeighborhoodMatrix build_neighborhood(std::span<const Point3> part, double tau) {
    check_part(part, tau);
    const DistanceMatrix d = pairwise_distances(part);
    NeighborhoodMatrix out{BinaryMatrix(part.size()), tau};
    for (std::size_t i = 0; i < part.size(); ++i) {
        for (std::size_t j = 0; j < part.size(); ++j)
            out.entries(i, j) = (i == j || d(i, j) <= tau) ? 1 : 0;
    }
    return out;
}

std::vector<std::vector<std::size_t>> connected_subparts(std::span<const Point3> part, double tau) {
    const NeighborhoodMatrix nb = build_neighborhood(part, tau);
    const std::size_t n = part.size();
    std::vector<char> visited(n, 0);
    std::vector<std::vector<std::size_t>> components;
    std::vector<std::size_t> stack;

    // Each DFS removes one connected sub-part until no points remain.
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (visited[seed]) continue;
        std::vector<std::size_t> component;
        visited[seed] = 1;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            component.push_back(i);
            for (std::size_t j = 0; j < n; ++j) {
                if (!visited[j] && nb.entries(i, j)) {
                    visited[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        std::sort(component.begin(), component.end());
        components.push_back(std::move(component));
    }
    return components;
}

std::vector<std::vector<Point3>> split_subparts(std::span<const Point3> part, double tau) {
    std::vector<std::vector<Point3>> out;
    for (const auto& component : connected_subparts(part, tau)) {
        std::vector<Point3> points;
        points.reserve(component.size());
        for (auto i : component) points.push_back(part[i]);
        out.push_back(std::move(points));
    }
    return out;
}

Point3 extract_node(std::span<const Point3> part) {
    if (part.empty()) throw ArgumentError("cannot extract a node from an empty part");
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (const auto& p : part) {
        sx += p.x;
        sy += p.y;
        sz += p.z;
    }
    const double n = static_cast<double>(part.size());
    return {sx / n, sy / n, sz / n};
}

SemanticGraph build_graph(const PointCloud& labeled_cloud, double tau, int class_label) {
    if (!labeled_cloud.has_labels())
        throw ArgumentError("graph extraction needs a part-labeled cloud");
    if (!(tau > 0.0)) throw ArgumentError("neighbourhood threshold tau must be positive");

    std::map<int, std::vector<Point3>> parts;
    const auto& labels = labeled_cloud.labels();
    for (std::size_t i = 0; i < labeled_cloud.size(); ++i)
        parts[labels[i]].push_back(labeled_cloud[i]);

    SemanticGraph graph;
    graph.class_label = class_label;
    for (const auto& [label, points] : parts) {
        for (const auto& sub : split_subparts(points, tau)) {
            graph.node_positions.push_back(extract_node(sub));
            graph.part_labels.push_back(label);
        }
    }
    graph.adjacency = BinaryMatrix::complete(graph.node_count());
    return graph;
}

}  // namespace semgraph
