#include <catch2/catch_amalgamated.hpp>

#include "sfkit/geometry.hpp"
#include "sfkit/rng.hpp"

using namespace sfkit;

namespace {
PointSet make(std::size_t dim, std::vector<Vec> pts) {
    PointSet ps;
    ps.dim = dim;
    ps.points = std::move(pts);
    return ps;
}
}  // namespace

TEST_CASE("minkowski_average with a single set is the identity") {
    PointSet s = make(2, {{0, 0}, {1, 0}});
    PointSet avg = minkowski_average({s}, 10);
    REQUIRE(avg.points == s.points);
}

TEST_CASE("minkowski_average enumerates small products exactly") {
    PointSet s = make(1, {{0}, {1}});
    PointSet avg = minkowski_average({s, s}, 10);
    REQUIRE(avg.points.size() == 3);
    CHECK(avg.points[0][0] == Catch::Approx(0.0));
    CHECK(avg.points[1][0] == Catch::Approx(0.5));
    CHECK(avg.points[2][0] == Catch::Approx(1.0));
}

TEST_CASE("minkowski_average errors") {
    CHECK_THROWS_AS(minkowski_average({}, 10), std::invalid_argument);
    PointSet a = make(1, {{0}});
    PointSet b = make(2, {{0, 0}});
    CHECK_THROWS_AS(minkowski_average({a, b}, 10), std::invalid_argument);
}

TEST_CASE("averaging copies of a convex sample stays inside its hull") {
    // square corners: every tuple average lies in the square
    PointSet sq = make(2, {{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    PointSet avg = minkowski_average({sq, sq, sq}, 500, 3);
    for (const Vec& p : avg.points) {
        CHECK(p[0] >= -1e-12);
        CHECK(p[0] <= 1.0 + 1e-12);
        CHECK(p[1] >= -1e-12);
        CHECK(p[1] <= 1.0 + 1e-12);
    }
}

TEST_CASE("convex_hull_2d drops interior and collinear points") {
    PointSet sq = make(2, {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}});
    HullPolygon h = convex_hull_2d(sq);
    REQUIRE(h.vertices.size() == 4);
    CHECK_FALSE(h.degenerate);
    CHECK(h.vertices[0] == Vec{0, 0});  // lexicographic minimum first
    // strict convexity: consecutive cross products positive
    for (std::size_t i = 0; i < 4; ++i) {
        const Vec& o = h.vertices[i];
        const Vec& a = h.vertices[(i + 1) % 4];
        const Vec& b = h.vertices[(i + 2) % 4];
        CHECK((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]) > 0);
    }
}

TEST_CASE("convex_hull_2d degenerate inputs") {
    HullPolygon single = convex_hull_2d(make(2, {{0, 0}}));
    REQUIRE(single.vertices.size() == 1);
    CHECK(single.degenerate);

    HullPolygon collinear = convex_hull_2d(make(2, {{0, 0}, {1, 1}, {2, 2}, {0.5, 0.5}}));
    REQUIRE(collinear.vertices.size() == 2);
    CHECK(collinear.degenerate);
    CHECK(collinear.vertices[0] == Vec{0, 0});
    CHECK(collinear.vertices[1] == Vec{2, 2});
}

TEST_CASE("convex_hull_2d is invariant under input permutation") {
    Rng rng(11);
    std::vector<Vec> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    HullPolygon h1 = convex_hull_2d(make(2, pts));
    for (int pass = 0; pass < 5; ++pass) {
        for (std::size_t i = pts.size(); i > 1; --i) std::swap(pts[i - 1], pts[rng.below(i)]);
        HullPolygon h2 = convex_hull_2d(make(2, pts));
        REQUIRE(h2.vertices == h1.vertices);
    }
}

TEST_CASE("l_1/2 sphere hull is the l1 ball (four extreme points)") {
    HullPolygon h = convex_hull_2d(lhalf_sphere_sample(256));
    REQUIRE(h.vertices.size() == 4);
    for (const Vec& v : h.vertices)
        CHECK(std::abs(v[0]) + std::abs(v[1]) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("hausdorff_distance basics") {
    PointSet p = make(1, {{0}});
    PointSet q = make(1, {{3}});
    CHECK(hausdorff_distance(p, p) == 0.0);
    CHECK(hausdorff_distance(p, q) == Catch::Approx(3.0));
    CHECK_THROWS_AS(hausdorff_distance(p, make(2, {{0, 0}})), std::invalid_argument);
}

TEST_CASE("hausdorff_distance symmetry and triangle inequality") {
    Rng rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        auto draw = [&](std::size_t k) {
            std::vector<Vec> pts;
            for (std::size_t i = 0; i < k; ++i) pts.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
            return make(2, pts);
        };
        PointSet A = draw(6), B = draw(5), C = draw(7);
        double ab = hausdorff_distance(A, B);
        double ba = hausdorff_distance(B, A);
        CHECK(ab == Catch::Approx(ba));
        CHECK(ab <= hausdorff_distance(A, C) + hausdorff_distance(C, B) + 1e-12);
    }
}

TEST_CASE("two averaged l_1/2 samples are closer to the l1 ball than one") {
    PointSet sphere = lhalf_sphere_sample(256);
    PointSet ball = l1_ball_sample(61);
    double d1 = hausdorff_distance(sphere, ball);
    double d2 = hausdorff_distance(minkowski_average({sphere, sphere}, 4096, 0), ball);
    CHECK(d2 < d1);
}
