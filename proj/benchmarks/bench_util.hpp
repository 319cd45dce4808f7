#pragma once

#include <vector>

#include "semgraph/pointcloud.hpp"
#include "semgraph/random.hpp"

namespace semgraph::bench {

inline std::vector<Point3> random_points(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Point3> pts(n);
    for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return pts;
}

}  // namespace semgraph::bench
