#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semgraph {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](std::size_t axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

    Point3& operator+=(const Point3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    friend Point3 operator+(Point3 a, const Point3& b) { return a += b; }
    friend Point3 operator-(const Point3& a, const Point3& b) {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend Point3 operator*(double s, const Point3& p) { return {s * p.x, s * p.y, s * p.z}; }
    friend bool operator==(const Point3&, const Point3&) = default;

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double squared_distance(const Point3& a, const Point3& b) {
    const Point3 d = a - b;
    return dot(d, d);
}
inline double distance(const Point3& a, const Point3& b) { return std::sqrt(squared_distance(a, b)); }

/// Ordered set of points with optional per-point part labels.
///
/// Construction validates: at least one point, finite coordinates, and a
/// label vector (when given) of the same length as the points.
class PointCloud {
public:
    explicit PointCloud(std::vector<Point3> points,
                        std::optional<std::vector<int>> labels = std::nullopt,
                        std::optional<std::string> category = std::nullopt);

    std::size_t size() const { return points_.size(); }
    const std::vector<Point3>& points() const { return points_; }
    const Point3& operator[](std::size_t i) const { return points_[i]; }

    bool has_labels() const { return labels_.has_value(); }
    /// Throws ArgumentError when the cloud is unlabeled.
    const std::vector<int>& labels() const;
    const std::optional<std::string>& category() const { return category_; }

    PointCloud with_labels(std::vector<int> labels) const;

private:
    std::vector<Point3> points_;
    std::optional<std::vector<int>> labels_;
    std::optional<std::string> category_;
};

enum class CloudFormat { XyzText, OffMesh };

/// Picks the format from the file extension (".off" is OFF, anything else xyz text).
CloudFormat format_for_path(const std::filesystem::path& path);

/// xyz text: one point per line, three reals and an optional integer part
/// label. Blank lines and lines starting with '#' are skipped. Either all
/// point lines carry a label or none do.
///
/// OFF: the vertex block is read, faces are ignored.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);

/// Writes xyz text with shortest round-trip formatting, including labels when present.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// n points drawn uniformly without replacement, kept in their original
/// order. Clouds with at most n points are returned unchanged.
PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

/// Indices chosen by `subsample`, ascending.
std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t n, std::uint64_t seed);

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
};

/// Exhaustive scan; ties resolve to the lowest index.
Neighbor nearest_neighbor(const Point3& query, std::span<const Point3> points);
Neighbor nearest_neighbor(const Point3& query, const PointCloud& cloud);

/// Dense symmetric matrix of Euclidean distances.
class DistanceMatrix {
public:
    explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }

private:
    std::size_t n_;
    std::vector<double> values_;
};

DistanceMatrix pairwise_distances(std::span<const Point3> points);
DistanceMatrix pairwise_distances(const PointCloud& cloud);

/// Static 3-d tree over a point set. Queries return exactly what
/// `nearest_neighbor` returns, including the lowest-index tie-break.
class KdTree {
public:
    explicit KdTree(std::span<const Point3> points);

    Neighbor nearest(const Point3& query) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::size_t point = 0;  // index into points_
        int axis = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
    };

    std::int32_t build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi, int depth);
    void search(std::int32_t node, const Point3& q, std::size_t& best, double& best_d2) const;

    std::vector<Point3> points_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

/// Brute force below `kBruteForceLimit` points, a KdTree above it.
class NeighborIndex {
public:
    static constexpr std::size_t kBruteForceLimit = 2048;

    explicit NeighborIndex(std::span<const Point3> points);

    Neighbor nearest(const Point3& query) const;

private:
    std::span<const Point3> points_;
    std::unique_ptr<KdTree> tree_;
};

}  // namespace semgraph
