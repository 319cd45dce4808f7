#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semgraph/linalg.hpp"
#include "semgraph/pointcloud.hpp"

namespace semgraph {

/// p -> rotation * p + translation
struct RigidTransform {
    Mat3 rotation = Mat3::identity();
    Point3 translation{};

    static RigidTransform identity() { return {}; }

    Point3 apply(const Point3& p) const { return rotation * p + translation; }
    std::vector<Point3> apply(std::span<const Point3> points) const;

    /// (this ∘ first): apply `first`, then this.
    RigidTransform after(const RigidTransform& first) const;
};

struct RigidSolve {
    RigidTransform transform;
    /// Set when the centered source is collinear or a single point, so the
    /// rotation is not determined by the data.
    bool degenerate = false;
};

/// Least-squares rotation and translation mapping source[i] onto target[i]
/// (Kabsch, no scaling). Reflections are corrected so det(R) = +1.
RigidSolve rigid_solve(std::span<const Point3> source, std::span<const Point3> target);

struct IcpOptions {
    std::size_t max_iters = 50;
    /// Stop when the mean squared correspondence distance changes by less than this.
    double tol = 1e-6;
};

struct IcpResult {
    RigidTransform transform;
    /// Mean squared distance from transformed source points to their nearest template points.
    double final_error = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Error at the identity, before the first update.
    double initial_error = 0.0;
    /// Error after each iteration; error_history.back() == final_error.
    std::vector<double> error_history;
};

/// Aligns `source` onto `target` starting from the identity, alternating
/// nearest-neighbour correspondence (source point -> closest target point)
/// with a rigid re-solve.
IcpResult icp_register(const PointCloud& source, const PointCloud& target,
                       const IcpOptions& options = {});

/// Labels each source point with the label of the template point nearest to
/// its transformed position.
PointCloud transfer_labels(const PointCloud& source, const PointCloud& labeled_template,
                           const RigidTransform& transform);

struct TemplateMatch {
    std::size_t template_index = 0;
    IcpResult icp;
};

/// Registers against every template and keeps the lowest final error
/// (earliest template on ties).
TemplateMatch register_best(const PointCloud& source, std::span<const PointCloud> templates,
                            const IcpOptions& options = {});

}  // namespace semgraph
