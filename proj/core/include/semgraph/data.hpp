#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semgraph/graph_sample.hpp"

namespace semgraph {

enum class FeatureKind { Position3d, OneHot };

struct GraphDataset {
    std::vector<GraphSample> samples;
    std::vector<std::string> class_names;
    FeatureKind feature_kind = FeatureKind::Position3d;

    std::size_t num_classes() const { return class_names.size(); }
    std::size_t feature_width() const;

    /// Non-empty, labels in [0, C), shared feature width, valid samples.
    void validate() const;

    friend bool operator==(const GraphDataset&, const GraphDataset&) = default;
};

/// Default class names "0".."C-1".
std::vector<std::string> numbered_classes(std::size_t count);

/// SEMGRAPH v1 text format:
///
///     SEMGRAPH v1
///     classes <C> [name_0 ... name_{C-1}]
///     kind position3d|one_hot          (optional, default position3d)
///     graph <n> <label> [id]
///     <n lines of whitespace-separated node features>
///     complete | <n lines of n 0/1 adjacency entries>
///
/// Reals are written in shortest round-trip form.
void write_dataset(const GraphDataset& ds, std::ostream& out);
GraphDataset read_dataset(std::istream& in);
void save_dataset(const GraphDataset& ds, const std::filesystem::path& path);
GraphDataset load_dataset(const std::filesystem::path& path);

struct TuOptions {
    /// Node-label values in one-hot order. Labels outside it widen the
    /// encoding (appended in ascending order) and add a warning. When empty,
    /// the sorted distinct labels of the dataset are used.
    std::vector<long> node_label_alphabet;
};

struct TuLoad {
    GraphDataset dataset;
    std::vector<long> node_label_alphabet;  // value of each one-hot column
    std::vector<long> graph_label_values;   // original value of each dense class index
    std::vector<std::string> warnings;
};

/// Reads <dir>/<name>_A.txt, _graph_indicator.txt, _graph_labels.txt and
/// _node_labels.txt. Node labels become one-hot features, graph labels are
/// remapped to 0..C-1 in ascending order of value, and edges listed in only
/// one direction are symmetrized.
TuLoad load_tu(const std::filesystem::path& dir, const std::string& name, const TuOptions& options = {});

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;  // fold index per sample
    std::uint64_t seed = 0;

    std::vector<std::size_t> fold_sizes() const;
};

/// Seeded shuffle then round-robin fold assignment. With `stratified`, the
/// round-robin runs class by class so every fold gets a near-equal share of
/// each class.
FoldPlan make_folds(const GraphDataset& ds, std::size_t k, std::uint64_t seed, bool stratified = false);

/// (train, test) where test is fold `fold`.
std::pair<GraphDataset, GraphDataset> split_by_fold(const GraphDataset& ds, const FoldPlan& plan, std::size_t fold);

/// One id per line; blank lines and '#' comments are skipped.
std::vector<std::string> load_id_list(const std::filesystem::path& path);

/// (samples whose id is not listed, samples whose id is listed).
std::pair<GraphDataset, GraphDataset> split_by_ids(const GraphDataset& ds, const std::vector<std::string>& ids);

}  // namespace semgraph
