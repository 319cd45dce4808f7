#include "semgraph/registration.hpp"

#include <cmath>

#include "semgraph/error.hpp"

namespace semgraph {

std::vector<Point3> RigidTransform::apply(std::span<const Point3> points) const {
    std::vector<Point3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(apply(p));
    return out;
}

RigidTransform RigidTransform::after(const RigidTransform& first) const {
    return {rotation * first.rotation, rotation * first.translation + translation};
}

namespace {

Point3 centroid(std::span<const Point3> points) {
    Point3 sum{};
    for (const auto& p : points) sum += p;
    return (1.0 / static_cast<double>(points.size())) * sum;
}

}  // namespace

RigidSolve rigid_solve(std::span<const Point3> source, std::span<const Point3> target) {
    if (source.size() != target.size())
        throw ArgumentError("rigid_solve needs equally sized point lists (" +
                            std::to_string(source.size()) + " vs " +
                            std::to_string(target.size()) + ")");
    if (source.size() < 3)
        throw ArgumentError("rigid_solve needs at least 3 correspondences, got " +
                            std::to_string(source.size()));

    const Point3 cs = centroid(source);
    const Point3 ct = centroid(target);

    // Cross-covariance H = sum (s - cs)(t - ct)^T
    Mat3 h;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Point3 a = source[i] - cs;
        const Point3 b = target[i] - ct;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) h(r, c) += a[static_cast<std::size_t>(r)] * b[static_cast<std::size_t>(c)];
    }

    const Svd3 svd = svd3(h);
    const Mat3 ut = svd.u.transposed();
    Mat3 v = svd.v;
    if ((v * ut).determinant() < 0.0) {
        for (int r = 0; r < 3; ++r) v(r, 2) = -v(r, 2);
    }

    RigidSolve out;
    out.transform.rotation = v * ut;
    out.transform.translation = ct - out.transform.rotation * cs;

    // Centered source spread; rank <= 1 leaves a free rotation axis.
    Mat3 spread;
    for (const auto& p : source) {
        const Point3 a = p - cs;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) spread(r, c) += a[static_cast<std::size_t>(r)] * a[static_cast<std::size_t>(c)];
    }
    const Svd3 spread_svd = svd3(spread);
    out.degenerate = !(spread_svd.s[1] > 1e-12 * spread_svd.s[0]);
    return out;
}

namespace {

// Nearest target point for each moved source point; returns the mean squared distance.
double correspond(const NeighborIndex& index, std::span<const Point3> target,
                  std::span<const Point3> moved, std::vector<Point3>& matched) {
    matched.resize(moved.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i) {
        const Neighbor nn = index.nearest(moved[i]);
        matched[i] = target[nn.index];
        sum += squared_distance(moved[i], matched[i]);
    }
    return sum / static_cast<double>(moved.size());
}

}  // namespace

IcpResult icp_register(const PointCloud& source, const PointCloud& target,
                       const IcpOptions& options) {
    if (options.max_iters < 1) throw ArgumentError("icp max_iters must be at least 1");
    if (!(options.tol > 0.0)) throw ArgumentError("icp tol must be positive");

    const std::span<const Point3> src(source.points());
    const std::span<const Point3> tgt(target.points());
    const NeighborIndex index(tgt);

    IcpResult result;
    std::vector<Point3> moved(src.begin(), src.end());
    std::vector<Point3> matched;
    double previous = correspond(index, tgt, moved, matched);
    result.initial_error = previous;

    for (std::size_t it = 1; it <= options.max_iters; ++it) {
        RigidTransform step;
        if (moved.size() >= 3) {
            step = rigid_solve(moved, matched).transform;
        } else {
            // Too few points to fix a rotation: translate onto the matches.
            step.translation = centroid(matched) - centroid(moved);
        }
        result.transform = step.after(result.transform);
        moved = result.transform.apply(src);

        const double error = correspond(index, tgt, moved, matched);
        result.error_history.push_back(error);
        result.iterations = it;
        result.final_error = error;
        if (std::abs(previous - error) < options.tol) {
            result.converged = true;
            break;
        }
        previous = error;
    }
    return result;
}

PointCloud transfer_labels(const PointCloud& source, const PointCloud& labeled_template,
                           const RigidTransform& transform) {
    if (!labeled_template.has_labels())
        throw ArgumentError("label transfer needs a labeled template");
    const auto& template_labels = labeled_template.labels();
    const NeighborIndex index(std::span<const Point3>(labeled_template.points()));
    std::vector<int> labels;
    labels.reserve(source.size());
    for (const auto& p : source.points())
        labels.push_back(template_labels[index.nearest(transform.apply(p)).index]);
    return source.with_labels(std::move(labels));
}

TemplateMatch register_best(const PointCloud& source, std::span<const PointCloud> templates,
                            const IcpOptions& options) {
    if (templates.empty()) throw ArgumentError("register_best needs at least one template");
    TemplateMatch best{0, icp_register(source, templates[0], options)};
    for (std::size_t i = 1; i < templates.size(); ++i) {
        IcpResult r = icp_register(source, templates[i], options);
        if (r.final_error < best.icp.final_error) best = {i, std::move(r)};
    }
    return best;
}

}  // namespace semgraph
