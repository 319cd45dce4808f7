#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "semgraph/error.hpp"
#include "semgraph/pointcloud.hpp"
#include "semgraph/random.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace semgraph;
using semgraph::testing::TempDir;

namespace {

std::vector<Point3> random_points(Rng& rng, std::size_t n) {
    std::vector<Point3> pts;
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    return pts;
}

}  // namespace

TEST_SUITE("pointcloud") {

TEST_CASE("cloud construction validates its invariants") {
    CHECK_THROWS_AS(PointCloud({}), ArgumentError);
    CHECK_THROWS_AS(PointCloud({{0, 0, 0}}, std::vector<int>{1, 2}), ArgumentError);
    CHECK_THROWS_AS(PointCloud({{0, NAN, 0}}), ArgumentError);
    const PointCloud plain({{0, 0, 0}});
    CHECK_FALSE(plain.has_labels());
    CHECK_THROWS_AS(plain.labels(), ArgumentError);
}

TEST_CASE("xyz text loads points in file order") {
    TempDir dir;
    const auto p = dir.write("three.xyz", "0 0 0\n1 0 0\n0 1 0\n");
    const auto cloud = load_cloud(p, CloudFormat::XyzText);
    REQUIRE(cloud.size() == 3);
    CHECK(cloud[1] == Point3{1, 0, 0});
    CHECK(cloud[2] == Point3{0, 1, 0});
    CHECK_FALSE(cloud.has_labels());
}

TEST_CASE("xyz text with labels, comments and blank lines") {
    TempDir dir;
    const auto p = dir.write("l.xyz", "# header\n0 0 0 3\n\n1 2 3 4\n");
    const auto cloud = load_cloud(p, CloudFormat::XyzText);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.labels() == std::vector<int>{3, 4});
}

TEST_CASE("malformed xyz line reports its line number") {
    TempDir dir;
    const auto p = dir.write("bad.xyz", "0 0 0\na b c\n");
    try {
        load_cloud(p, CloudFormat::XyzText);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("mixed label columns are rejected") {
    TempDir dir;
    CHECK_THROWS_AS(load_cloud(dir.write("m.xyz", "0 0 0 1\n1 1 1\n"), CloudFormat::XyzText), FormatError);
}

TEST_CASE("empty files raise the empty-cloud error") {
    TempDir dir;
    CHECK_THROWS_AS(load_cloud(dir.write("e.xyz", ""), CloudFormat::XyzText), EmptyCloudError);
    CHECK_THROWS_AS(load_cloud(dir.write("c.xyz", "# only a comment\n"), CloudFormat::XyzText), EmptyCloudError);
    CHECK_THROWS_AS(load_cloud(dir.write("e.off", ""), CloudFormat::OffMesh), EmptyCloudError);
}

TEST_CASE("OFF vertices are read and faces ignored") {
    TempDir dir;
    const auto p = dir.write("m.off", "OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 2 3\n");
    const auto cloud = load_cloud(p, CloudFormat::OffMesh);
    REQUIRE(cloud.size() == 4);
    CHECK(cloud[3] == Point3{0, 0, 1});
    CHECK(format_for_path(p) == CloudFormat::OffMesh);
    CHECK(format_for_path(dir / "x.xyz") == CloudFormat::XyzText);
}

TEST_CASE("OFF header with glued counts") {
    TempDir dir;
    const auto p = dir.write("g.off", "OFF2 0 0\n0 0 0\n1 1 1\n");
    CHECK(load_cloud(p, CloudFormat::OffMesh).size() == 2);
}

TEST_CASE("OFF with missing vertices is a format error") {
    TempDir dir;
    CHECK_THROWS_AS(load_cloud(dir.write("t.off", "OFF\n3 0 0\n0 0 0\n"), CloudFormat::OffMesh), FormatError);
    CHECK_THROWS_AS(load_cloud(dir.write("h.off", "PLY\n"), CloudFormat::OffMesh), FormatError);
}

TEST_CASE("save and load round-trip exactly") {
    TempDir dir;
    Rng rng(3);
    auto pts = random_points(rng, 50);
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) labels.push_back(i % 4);
    const PointCloud cloud(pts, labels);
    save_cloud(cloud, dir / "rt.xyz");
    const auto back = load_cloud(dir / "rt.xyz", CloudFormat::XyzText);
    CHECK(back.points() == cloud.points());
    CHECK(back.labels() == cloud.labels());
}

TEST_CASE("subsample is seeded, label-preserving and duplicate-free") {
    Rng rng(5);
    auto pts = random_points(rng, 2048);
    std::vector<int> labels(2048);
    for (int i = 0; i < 2048; ++i) labels[i] = i;
    const PointCloud cloud(pts, labels);

    const auto a = subsample(cloud, 1024, 7);
    const auto b = subsample(cloud, 1024, 7);
    CHECK(a.size() == 1024);
    CHECK(a.points() == b.points());
    CHECK(subsample(cloud, 1024, 8).points() != a.points());

    std::set<int> seen(a.labels().begin(), a.labels().end());
    CHECK(seen.size() == 1024);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == pts[static_cast<std::size_t>(a.labels()[i])]);

    const PointCloud small(random_points(rng, 500));
    CHECK(subsample(small, 1024, 1).points() == small.points());
    CHECK_THROWS_AS(subsample(cloud, 0, 1), ArgumentError);

    const PointCloud ten = subsample(cloud, 10, 11);
    for (std::size_t i = 0; i < ten.size(); ++i) CHECK(ten[i] == pts[static_cast<std::size_t>(ten.labels()[i])]);
}

TEST_CASE("nearest neighbour examples") {
    const PointCloud c({{1, 0, 0}, {0, 2, 0}});
    const auto nn = nearest_neighbor({0, 0, 0}, c);
    CHECK(nn.index == 0);
    CHECK(nn.distance == 1.0);
    CHECK(nearest_neighbor({0, 2, 0}, c).distance == 0.0);
    CHECK(nearest_neighbor({0, 2, 0}, c).index == 1);

    const std::vector<Point3> tie{{5, 5, 5}, {9, 9, 9}, {1, 0, 0}, {4, 4, 4}, {3, 3, 3}, {-1, 0, 0}};
    CHECK(nearest_neighbor({0, 0, 0}, tie).index == 2);
    CHECK_THROWS_AS(nearest_neighbor({0, 0, 0}, std::span<const Point3>{}), ArgumentError);
}

TEST_CASE("nearest neighbour is minimal against an exhaustive check") {
    Rng rng(9);
    const auto pts = random_points(rng, 1000);
    for (int q = 0; q < 50; ++q) {
        const Point3 query{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        const auto nn = nearest_neighbor(query, pts);
        for (const auto& p : pts) CHECK(nn.distance <= distance(query, p));
    }
}

TEST_CASE("kd-tree matches brute force including ties") {
    Rng rng(21);
    auto pts = random_points(rng, 3000);
    // Exact duplicates and grid points force equal distances.
    for (int i = 0; i < 200; ++i) pts.push_back(pts[static_cast<std::size_t>(i)]);
    for (int x = -2; x <= 2; ++x)
        for (int y = -2; y <= 2; ++y) pts.push_back({x * 0.5, y * 0.5, 0.0});
    const KdTree tree(pts);
    const NeighborIndex index(pts);
    for (int q = 0; q < 500; ++q) {
        Point3 query{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
        if (q % 5 == 0) query = pts[rng.below(pts.size())];
        if (q % 7 == 0) query = {0.25, 0.25, 0.0};
        const auto brute = nearest_neighbor(query, pts);
        CHECK(tree.nearest(query).index == brute.index);
        CHECK(index.nearest(query).index == brute.index);
        CHECK(tree.nearest(query).distance == brute.distance);
    }
}

TEST_CASE("pairwise distances") {
    const PointCloud one({{1, 2, 3}});
    const auto d1 = pairwise_distances(one);
    CHECK(d1.size() == 1);
    CHECK(d1(0, 0) == 0.0);

    const PointCloud two({{0, 0, 0}, {3, 4, 0}});
    const auto d2 = pairwise_distances(two);
    CHECK(d2(0, 1) == 5.0);
    CHECK(d2(1, 0) == 5.0);

    Rng rng(4);
    const auto pts = random_points(rng, 10);
    const auto d = pairwise_distances(pts);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y, dz = pts[i].z - pts[j].z;
            CHECK(d(i, j) == doctest::Approx(std::sqrt(dx * dx + dy * dy + dz * dz)).epsilon(1e-15));
            CHECK(d(i, j) == d(j, i));
            for (std::size_t k = 0; k < 10; ++k) CHECK(d(i, k) <= d(i, j) + d(j, k) + 1e-9);
        }
        CHECK(d(i, i) == 0.0);
    }
}

}  // TEST_SUITE
