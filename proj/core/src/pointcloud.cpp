#include "semgraph/pointcloud.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <string_view>

#include "semgraph/error.hpp"
#include "semgraph/random.hpp"
#include "semgraph/text.hpp"

namespace semgraph {

PointCloud::PointCloud(std::vector<Point3> points, std::optional<std::vector<int>> labels,
                       std::optional<std::string> category)
    : points_(std::move(points)), labels_(std::move(labels)), category_(std::move(category)) {
    if (points_.empty()) throw ArgumentError("point cloud must contain at least one point");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!points_[i].finite())
            throw ArgumentError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
    if (labels_ && labels_->size() != points_.size()) {
        throw ArgumentError("label count " + std::to_string(labels_->size()) +
                            " does not match point count " + std::to_string(points_.size()));
    }
}

const std::vector<int>& PointCloud::labels() const {
    if (!labels_) throw ArgumentError("point cloud has no part labels");
    return *labels_;
}

PointCloud PointCloud::with_labels(std::vector<int> labels) const {
    return PointCloud(points_, std::move(labels), category_);
}

CloudFormat format_for_path(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".off" ? CloudFormat::OffMesh : CloudFormat::XyzText;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path.string());
    return in;
}

Point3 parse_point(const std::vector<std::string_view>& tokens, std::size_t line_no) {
    double c[3];
    for (int i = 0; i < 3; ++i) {
        if (!text::parse_number(tokens[i], c[i]))
            throw FormatError("invalid coordinate '" + std::string(tokens[i]) + "'", line_no);
    }
    Point3 p{c[0], c[1], c[2]};
    if (!p.finite()) throw FormatError("non-finite coordinate", line_no);
    return p;
}

PointCloud load_xyz(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<Point3> points;
    std::vector<int> labels;
    std::optional<bool> labeled;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = text::split_ws(line);
        if (tokens.empty() || tokens.front().front() == '#') continue;
        if (tokens.size() != 3 && tokens.size() != 4)
            throw FormatError("expected 3 coordinates and an optional label, got " +
                                  std::to_string(tokens.size()) + " fields",
                              line_no);
        const bool has_label = tokens.size() == 4;
        if (labeled && *labeled != has_label)
            throw FormatError("label column present on some lines only", line_no);
        labeled = has_label;
        points.push_back(parse_point(tokens, line_no));
        if (has_label) {
            int label = 0;
            if (!text::parse_number(tokens[3], label))
                throw FormatError("invalid part label '" + std::string(tokens[3]) + "'", line_no);
            labels.push_back(label);
        }
    }
    if (points.empty()) throw EmptyCloudError(path.string());
    std::optional<std::vector<int>> maybe_labels;
    if (labeled.value_or(false)) maybe_labels = std::move(labels);
    return PointCloud(std::move(points), std::move(maybe_labels));
}

PointCloud load_off(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;

    auto next_content = [&](std::vector<std::string_view>& tokens) {
        while (std::getline(in, line)) {
            ++line_no;
            tokens = text::split_ws(line);
            if (!tokens.empty() && tokens.front().front() != '#') return true;
        }
        return false;
    };

    std::vector<std::string_view> tokens;
    if (!next_content(tokens)) throw EmptyCloudError(path.string());
    if (tokens.front().substr(0, 3) != "OFF")
        throw FormatError("missing OFF header", line_no);

    // Some distributed meshes glue the counts onto the header ("OFF1024 800 0").
    std::string header_rest = std::string(tokens.front().substr(3));
    for (std::size_t i = 1; i < tokens.size(); ++i) header_rest += " " + std::string(tokens[i]);
    std::string counts_line = header_rest;
    std::vector<std::string_view> count_tokens = text::split_ws(counts_line);
    if (count_tokens.empty()) {
        if (!next_content(tokens)) throw FormatError("missing vertex/face counts", line_no);
        counts_line = line;
        count_tokens = text::split_ws(counts_line);
    }
    std::size_t vertex_count = 0;
    if (count_tokens.size() < 2 || !text::parse_number(count_tokens[0], vertex_count))
        throw FormatError("invalid vertex/face counts", line_no);
    if (vertex_count == 0) throw EmptyCloudError(path.string());

    std::vector<Point3> points;
    points.reserve(vertex_count);
    while (points.size() < vertex_count) {
        if (!next_content(tokens))
            throw FormatError("file ends after " + std::to_string(points.size()) + " of " +
                                  std::to_string(vertex_count) + " vertices",
                              line_no);
        if (tokens.size() < 3) throw FormatError("vertex line needs 3 coordinates", line_no);
        points.push_back(parse_point(tokens, line_no));
    }
    return PointCloud(std::move(points));
}

}  // namespace

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
    return format == CloudFormat::OffMesh ? load_off(path) : load_xyz(path);
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path.string());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point3& p = cloud[i];
        out << text::format_double(p.x) << ' ' << text::format_double(p.y) << ' '
            << text::format_double(p.z);
        if (cloud.has_labels()) out << ' ' << cloud.labels()[i];
        out << '\n';
    }
    if (!out) throw ArgumentError("failed writing " + path.string());
}

std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ArgumentError("subsample size must be at least 1");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (count <= n) return order;
    Rng rng(seed);
    // Partial Fisher-Yates: the first n slots become a uniform n-subset.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(count - i));
        std::swap(order[i], order[j]);
    }
    order.resize(n);
    std::sort(order.begin(), order.end());
    return order;
}

PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
    const auto picked = subsample_indices(cloud.size(), n, seed);
    if (picked.size() == cloud.size()) return cloud;
    std::vector<Point3> points;
    points.reserve(picked.size());
    for (auto i : picked) points.push_back(cloud[i]);
    std::optional<std::vector<int>> labels;
    if (cloud.has_labels()) {
        labels.emplace();
        labels->reserve(picked.size());
        for (auto i : picked) labels->push_back(cloud.labels()[i]);
    }
    return PointCloud(std::move(points), std::move(labels), cloud.category());
}

Neighbor nearest_neighbor(const Point3& query, std::span<const Point3> points) {
    if (points.empty()) throw ArgumentError("nearest_neighbor on an empty point set");
    std::size_t best = 0;
    double best_d2 = squared_distance(query, points[0]);
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double d2 = squared_distance(query, points[i]);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return {best, std::sqrt(best_d2)};
}

Neighbor nearest_neighbor(const Point3& query, const PointCloud& cloud) {
    return nearest_neighbor(query, std::span<const Point3>(cloud.points()));
}

DistanceMatrix pairwise_distances(std::span<const Point3> points) {
    if (points.empty()) throw ArgumentError("pairwise_distances on an empty point set");
    DistanceMatrix d(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double v = distance(points[i], points[j]);
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

DistanceMatrix pairwise_distances(const PointCloud& cloud) {
    return pairwise_distances(std::span<const Point3>(cloud.points()));
}

KdTree::KdTree(std::span<const Point3> points) : points_(points.begin(), points.end()) {
    if (points_.empty()) throw ArgumentError("KdTree over an empty point set");
    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    nodes_.reserve(points_.size());
    root_ = build(order, 0, order.size(), 0);
}

std::int32_t KdTree::build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi,
                           int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(lo),
                     order.begin() + static_cast<std::ptrdiff_t>(mid),
                     order.begin() + static_cast<std::ptrdiff_t>(hi),
                     [&](std::size_t a, std::size_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({order[mid], axis, -1, -1});
    const std::int32_t left = build(order, lo, mid, depth + 1);
    const std::int32_t right = build(order, mid + 1, hi, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

void KdTree::search(std::int32_t node_id, const Point3& q, std::size_t& best,
                    double& best_d2) const {
    if (node_id < 0) return;
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    const double d2 = squared_distance(q, points_[node.point]);
    if (d2 < best_d2 || (d2 == best_d2 && node.point < best)) {
        best_d2 = d2;
        best = node.point;
    }
    const double delta = q[static_cast<std::size_t>(node.axis)] -
                         points_[node.point][static_cast<std::size_t>(node.axis)];
    const std::int32_t near = delta < 0 ? node.left : node.right;
    const std::int32_t far = delta < 0 ? node.right : node.left;
    search(near, q, best, best_d2);
    // Equal distance to the plane must still be explored: a lower index may tie.
    if (delta * delta <= best_d2) search(far, q, best, best_d2);
}

Neighbor KdTree::nearest(const Point3& query) const {
    std::size_t best = nodes_[static_cast<std::size_t>(root_)].point;
    double best_d2 = squared_distance(query, points_[best]);
    search(root_, query, best, best_d2);
    return {best, std::sqrt(best_d2)};
}

NeighborIndex::NeighborIndex(std::span<const Point3> points) : points_(points) {
    if (points.empty()) throw ArgumentError("NeighborIndex over an empty point set");
    if (points.size() > kBruteForceLimit) tree_ = std::make_unique<KdTree>(points);
}

Neighbor NeighborIndex::nearest(const Point3& query) const {
    return tree_ ? tree_->nearest(query) : nearest_neighbor(query, points_);
}

}  // namespace semgraph
