#pragma once

#include <string>

#include "semgraph/partition.hpp"
#include "semgraph/tensor.hpp"

namespace semgraph {

/// One graph ready for the classifier.
struct GraphSample {
    Matrix node_features;        // n x f0
    BinaryMatrix base_adjacency;  // n x n, zero diagonal; self-loops are added by the model
    int label = 0;
    std::string id;  // optional source identifier (cloud id), may be empty

    std::size_t node_count() const { return node_features.rows(); }

    /// Throws ArgumentError when the sample violates its invariants.
    void validate() const;

    friend bool operator==(const GraphSample&, const GraphSample&) = default;
};

/// Node positions as features, complete adjacency.
GraphSample to_sample(const SemanticGraph& graph, std::string id = {});

}  // namespace semgraph
