#include "semgraph/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

#include "semgraph/error.hpp"
#include "semgraph/random.hpp"
#include "semgraph/text.hpp"

namespace semgraph {

// ---- dataset ---------------------------------------------------------------

std::size_t GraphDataset::feature_width() const {
    return samples.empty() ? 0 : samples.front().node_features.cols();
}

void GraphDataset::validate() const {
    if (samples.empty()) throw ArgumentError("dataset has no graphs");
    if (class_names.empty()) throw ArgumentError("dataset declares no classes");
    const std::size_t width = feature_width();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        s.validate();
        if (s.node_features.cols() != width)
            throw ArgumentError("graph " + std::to_string(i) + " has feature width " +
                                std::to_string(s.node_features.cols()) + ", expected " + std::to_string(width));
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= class_names.size())
            throw ArgumentError("graph " + std::to_string(i) + " label " + std::to_string(s.label) +
                                " outside [0, " + std::to_string(class_names.size()) + ")");
    }
}

std::vector<std::string> numbered_classes(std::size_t count) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < count; ++i) names.push_back(std::to_string(i));
    return names;
}

namespace {

constexpr std::string_view kMagic = "SEMGRAPH";
constexpr std::string_view kVersion = "v1";

bool has_space(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string_view kind_name(FeatureKind k) { return k == FeatureKind::OneHot ? "one_hot" : "position3d"; }

}  // namespace

void write_dataset(const GraphDataset& ds, std::ostream& out) {
    ds.validate();
    out << kMagic << ' ' << kVersion << '\n';
    out << "classes " << ds.class_names.size();
    for (const auto& name : ds.class_names) {
        if (name.empty() || has_space(name))
            throw ArgumentError("class name '" + name + "' must be non-empty without whitespace");
        out << ' ' << name;
    }
    out << '\n' << "kind " << kind_name(ds.feature_kind) << '\n';
    for (const auto& s : ds.samples) {
        if (has_space(s.id)) throw ArgumentError("sample id '" + s.id + "' contains whitespace");
        const std::size_t n = s.node_count();
        out << "graph " << n << ' ' << s.label;
        if (!s.id.empty()) out << ' ' << s.id;
        out << '\n';
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < s.node_features.cols(); ++c) {
                if (c) out << ' ';
                out << text::format_double(s.node_features(i, c));
            }
            out << '\n';
        }
        if (s.base_adjacency == BinaryMatrix::complete(n)) {
            out << "complete\n";
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) out << (j ? " " : "") << int(s.base_adjacency(i, j));
                out << '\n';
            }
        }
    }
}

GraphDataset read_dataset(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> tokens;

    // Next non-blank line; false at end of input.
    auto next = [&]() {
        while (std::getline(in, line)) {
            ++line_no;
            tokens = text::split_ws(line);
            if (!tokens.empty()) return true;
        }
        return false;
    };

    if (!next() || tokens[0] != kMagic) throw FormatError("not a SEMGRAPH dataset", line_no);
    if (tokens.size() != 2 || tokens[1] != kVersion)
        throw FormatError("unsupported dataset version '" + (tokens.size() > 1 ? std::string(tokens[1]) : "") +
                              "', expected " + std::string(kVersion),
                          line_no);

    GraphDataset ds;
    std::size_t num_classes = 0;
    if (!next() || tokens[0] != "classes" || tokens.size() < 2 || !text::parse_number(tokens[1], num_classes) ||
        num_classes == 0)
        throw FormatError("expected 'classes <C>' with C >= 1", line_no);
    if (tokens.size() == 2) {
        ds.class_names = numbered_classes(num_classes);
    } else if (tokens.size() == 2 + num_classes) {
        for (std::size_t i = 0; i < num_classes; ++i) ds.class_names.emplace_back(tokens[2 + i]);
    } else {
        throw FormatError("classes line names " + std::to_string(tokens.size() - 2) + " classes, expected " +
                              std::to_string(num_classes),
                          line_no);
    }

    bool have_line = next();
    if (have_line && tokens[0] == "kind") {
        if (tokens.size() != 2) throw FormatError("expected 'kind position3d|one_hot'", line_no);
        if (tokens[1] == "one_hot") {
            ds.feature_kind = FeatureKind::OneHot;
        } else if (tokens[1] == "position3d") {
            ds.feature_kind = FeatureKind::Position3d;
        } else {
            throw FormatError("unknown feature kind '" + std::string(tokens[1]) + "'", line_no);
        }
        have_line = next();
    }

    std::size_t width = 0;
    while (have_line) {
        const std::size_t graph_index = ds.samples.size();
        const std::string where = "graph " + std::to_string(graph_index);
        std::size_t n = 0;
        long label = 0;
        if (tokens[0] != "graph" || tokens.size() < 3 || tokens.size() > 4 || !text::parse_number(tokens[1], n) ||
            !text::parse_number(tokens[2], label))
            throw FormatError("expected 'graph <n> <label> [id]'", line_no);
        if (n == 0) throw FormatError(where + " has no nodes", line_no);
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
            throw FormatError(where + " label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(num_classes) + ")",
                              line_no);
        GraphSample s;
        s.label = static_cast<int>(label);
        if (tokens.size() == 4) s.id = std::string(tokens[3]);

        std::vector<double> features;
        for (std::size_t i = 0; i < n; ++i) {
            if (!next()) throw FormatError("truncated file: " + where + " ends after " + std::to_string(i) + " of " +
                                               std::to_string(n) + " node lines",
                                           line_no);
            if (width == 0) width = tokens.size();
            if (tokens.size() != width)
                throw FormatError(where + " node " + std::to_string(i) + " has " + std::to_string(tokens.size()) +
                                      " features, expected " + std::to_string(width),
                                  line_no);
            for (auto tok : tokens) {
                double v = 0;
                if (!text::parse_number(tok, v))
                    throw FormatError("invalid feature value '" + std::string(tok) + "'", line_no);
                features.push_back(v);
            }
        }
        s.node_features = Matrix(n, width, std::move(features));

        if (!next()) throw FormatError("truncated file: " + where + " has no adjacency", line_no);
        if (tokens.size() == 1 && tokens[0] == "complete") {
            s.base_adjacency = BinaryMatrix::complete(n);
        } else {
            s.base_adjacency = BinaryMatrix(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (i > 0 && !next())
                    throw FormatError("truncated file: " + where + " adjacency ends after " + std::to_string(i) +
                                          " rows",
                                      line_no);
                if (tokens.size() != n)
                    throw FormatError(where + " adjacency row " + std::to_string(i) + " has " +
                                          std::to_string(tokens.size()) + " entries, expected " + std::to_string(n),
                                      line_no);
                for (std::size_t j = 0; j < n; ++j) {
                    if (tokens[j] != "0" && tokens[j] != "1")
                        throw FormatError(where + " adjacency entries must be 0 or 1", line_no);
                    s.base_adjacency(i, j) = tokens[j] == "1" ? 1 : 0;
                }
                if (s.base_adjacency(i, i))
                    throw FormatError(where + " adjacency has a self-loop at node " + std::to_string(i), line_no);
            }
        }
        ds.samples.push_back(std::move(s));
        have_line = next();
    }
    if (ds.samples.empty()) throw FormatError("dataset contains no graphs", line_no);
    return ds;
}

void save_dataset(const GraphDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path.string());
    write_dataset(ds, out);
    if (!out) throw ArgumentError("failed writing " + path.string());
}

GraphDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path.string());
    return read_dataset(in);
}

// ---- TU format ---------------------------------------------------------------

namespace {

// First integer field of every non-blank line.
std::vector<long> read_int_column(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("missing TU file " + path.string());
    std::vector<long> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = text::split_fields(line);
        if (fields.empty()) continue;
        long v = 0;
        if (!text::parse_number(fields[0], v))
            throw FormatError(path.filename().string() + ": invalid integer '" + std::string(fields[0]) + "'", line_no);
        values.push_back(v);
    }
    return values;
}

}  // namespace

TuLoad load_tu(const std::filesystem::path& dir, const std::string& name, const TuOptions& options) {
    const auto file = [&](const char* suffix) { return dir / (name + suffix); };
    const auto indicator = read_int_column(file("_graph_indicator.txt"));
    const auto graph_labels = read_int_column(file("_graph_labels.txt"));
    const auto node_labels = read_int_column(file("_node_labels.txt"));
    const auto a_path = file("_A.txt");

    TuLoad result;
    const std::size_t num_nodes = indicator.size();
    const std::size_t num_graphs = graph_labels.size();
    if (num_graphs == 0) throw FormatError(name + ": no graph labels", 0);
    if (node_labels.size() != num_nodes)
        throw FormatError(name + ": " + std::to_string(node_labels.size()) + " node labels for " +
                              std::to_string(num_nodes) + " nodes in the graph indicator",
                          0);

    // Node -> (graph, local index); local order follows global node order.
    std::vector<std::size_t> local(num_nodes);
    std::vector<std::size_t> graph_size(num_graphs, 0);
    for (std::size_t v = 0; v < num_nodes; ++v) {
        const long g = indicator[v];
        if (g < 1 || static_cast<std::size_t>(g) > num_graphs)
            throw FormatError(name + "_graph_indicator.txt: graph id " + std::to_string(g) + " outside [1, " +
                                  std::to_string(num_graphs) + "]",
                              v + 1);
        local[v] = graph_size[static_cast<std::size_t>(g - 1)]++;
    }
    for (std::size_t g = 0; g < num_graphs; ++g)
        if (graph_size[g] == 0)
            throw FormatError(name + ": graph " + std::to_string(g + 1) + " has no nodes in the indicator file", 0);

    // One-hot alphabet.
    std::vector<long> alphabet = options.node_label_alphabet;
    {
        std::set<long> declared(alphabet.begin(), alphabet.end());
        std::set<long> extra;
        for (long l : node_labels)
            if (!declared.count(l)) extra.insert(l);
        if (!alphabet.empty() && !extra.empty()) {
            for (long l : extra)
                result.warnings.push_back("node label " + std::to_string(l) +
                                          " outside the declared alphabet; one-hot width grows to " +
                                          std::to_string(alphabet.size() + extra.size()));
        }
        alphabet.insert(alphabet.end(), extra.begin(), extra.end());
    }
    std::map<long, std::size_t> column;
    for (std::size_t i = 0; i < alphabet.size(); ++i) column.emplace(alphabet[i], i);

    // Graph labels -> dense classes by ascending value.
    const std::set<long> label_values(graph_labels.begin(), graph_labels.end());
    result.graph_label_values.assign(label_values.begin(), label_values.end());
    std::map<long, int> class_of;
    for (const long v : result.graph_label_values) {
        class_of.emplace(v, static_cast<int>(class_of.size()));
        result.dataset.class_names.push_back(std::to_string(v));
    }

    auto& samples = result.dataset.samples;
    samples.resize(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        samples[g].node_features = Matrix(graph_size[g], alphabet.size());
        samples[g].base_adjacency = BinaryMatrix(graph_size[g]);
        samples[g].label = class_of.at(graph_labels[g]);
        samples[g].id = name + ":" + std::to_string(g + 1);
    }
    for (std::size_t v = 0; v < num_nodes; ++v) {
        const std::size_t g = static_cast<std::size_t>(indicator[v] - 1);
        samples[g].node_features(local[v], column.at(node_labels[v])) = 1.0;
    }

    std::ifstream in(a_path);
    if (!in) throw ArgumentError("missing TU file " + a_path.string());
    std::string line;
    std::size_t line_no = 0;
    std::size_t self_loops = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = text::split_fields(line);
        if (fields.empty()) continue;
        long a = 0, b = 0;
        if (fields.size() != 2 || !text::parse_number(fields[0], a) || !text::parse_number(fields[1], b))
            throw FormatError(name + "_A.txt: expected 'i, j'", line_no);
        if (a < 1 || b < 1 || static_cast<std::size_t>(a) > num_nodes || static_cast<std::size_t>(b) > num_nodes)
            throw FormatError(name + "_A.txt: node id outside [1, " + std::to_string(num_nodes) + "]", line_no);
        const auto u = static_cast<std::size_t>(a - 1);
        const auto w = static_cast<std::size_t>(b - 1);
        if (indicator[u] != indicator[w])
            throw FormatError(name + "_A.txt: edge joins graphs " + std::to_string(indicator[u]) + " and " +
                                  std::to_string(indicator[w]),
                              line_no);
        if (u == w) {
            ++self_loops;
            continue;
        }
        auto& adj = samples[static_cast<std::size_t>(indicator[u] - 1)].base_adjacency;
        adj(local[u], local[w]) = 1;
        adj(local[w], local[u]) = 1;
    }
    if (self_loops > 0)
        result.warnings.push_back(std::to_string(self_loops) + " self-loop edge(s) dropped; the model adds its own");

    result.dataset.feature_kind = FeatureKind::OneHot;
    result.node_label_alphabet = std::move(alphabet);
    result.dataset.validate();
    return result;
}

// ---- folds -----------------------------------------------------------------

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : assignments) ++sizes[f];
    return sizes;
}

FoldPlan make_folds(const GraphDataset& ds, std::size_t k, std::uint64_t seed, bool stratified) {
    const std::size_t n = ds.samples.size();
    if (k == 0) throw ArgumentError("fold count must be at least 1");
    if (k > n)
        throw ArgumentError("cannot make " + std::to_string(k) + " folds from " + std::to_string(n) + " samples");
    Rng rng = substream(seed, "folds");
    auto shuffle = [&](std::vector<std::size_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    };

    std::vector<std::vector<std::size_t>> groups;
    if (stratified) {
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[ds.samples[i].label].push_back(i);
        for (auto& [label, members] : by_class) groups.push_back(std::move(members));
    } else {
        groups.emplace_back(n);
        for (std::size_t i = 0; i < n; ++i) groups[0][i] = i;
    }

    FoldPlan plan{k, std::vector<std::size_t>(n), seed};
    std::size_t counter = 0;
    for (auto& g : groups) {
        shuffle(g);
        for (auto i : g) plan.assignments[i] = counter++ % k;
    }
    return plan;
}

std::pair<GraphDataset, GraphDataset> split_by_fold(const GraphDataset& ds, const FoldPlan& plan, std::size_t fold) {
    if (fold >= plan.k) throw ArgumentError("fold " + std::to_string(fold) + " outside [0, " + std::to_string(plan.k) + ")");
    if (plan.assignments.size() != ds.samples.size())
        throw ArgumentError("fold plan covers " + std::to_string(plan.assignments.size()) + " samples, dataset has " +
                            std::to_string(ds.samples.size()));
    GraphDataset train{{}, ds.class_names, ds.feature_kind};
    GraphDataset test{{}, ds.class_names, ds.feature_kind};
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        (plan.assignments[i] == fold ? test : train).samples.push_back(ds.samples[i]);
    return {std::move(train), std::move(test)};
}

std::vector<std::string> load_id_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        std::string id = text::trim(line);
        if (id.empty() || id.front() == '#') continue;
        ids.push_back(std::move(id));
    }
    return ids;
}

std::pair<GraphDataset, GraphDataset> split_by_ids(const GraphDataset& ds, const std::vector<std::string>& ids) {
    const std::unordered_set<std::string> listed(ids.begin(), ids.end());
    GraphDataset rest{{}, ds.class_names, ds.feature_kind};
    GraphDataset selected{{}, ds.class_names, ds.feature_kind};
    for (const auto& s : ds.samples) (listed.count(s.id) ? selected : rest).samples.push_back(s);
    return {std::move(rest), std::move(selected)};
}

}  // namespace semgraph
