#include "semgraph/graph_sample.hpp"

#include "semgraph/error.hpp"

namespace semgraph {

void GraphSample::validate() const {
    const std::size_t n = node_features.rows();
    if (n == 0) throw ArgumentError("graph sample has no nodes");
    if (node_features.cols() == 0) throw ArgumentError("graph sample has no node features");
    if (base_adjacency.size() != n)
        throw ArgumentError("adjacency is " + std::to_string(base_adjacency.size()) + "x" +
                            std::to_string(base_adjacency.size()) + " for " + std::to_string(n) + " nodes");
    for (std::size_t i = 0; i < n; ++i)
        if (base_adjacency(i, i)) throw ArgumentError("adjacency has a self-loop at node " + std::to_string(i));
    if (!node_features.all_finite()) throw ArgumentError("node features must be finite");
}

GraphSample to_sample(const SemanticGraph& graph, std::string id) {
    GraphSample s;
    s.node_features = Matrix(graph.node_count(), 3);
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        s.node_features(i, 0) = graph.node_positions[i].x;
        s.node_features(i, 1) = graph.node_positions[i].y;
        s.node_features(i, 2) = graph.node_positions[i].z;
    }
    s.base_adjacency = graph.adjacency;
    s.label = graph.class_label;
    s.id = std::move(id);
    return s;
}

}  // namespace semgraph
