#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sfkit/envelope.hpp"
#include "sfkit/rng.hpp"

using namespace sfkit;

namespace {

SampledFunction sqrt_abs(std::size_t points) {
    Vec xs, vs;
    for (std::size_t k = 0; k < points; ++k) {
        double x = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(points - 1);
        xs.push_back(x);
        vs.push_back(std::sqrt(std::abs(x)));
    }
    return SampledFunction::line_1d(xs, vs);
}

// oracle: f** at a grid point is the max over affine minorants a + b x with
// a + b x_j <= f_j for all j; brute force over slopes through point pairs
double envelope_oracle_1d(const SampledFunction& f, std::size_t at) {
    double best = -1e300;
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double b = (i == j) ? 0.0
                                : (f.values[j] - f.values[i]) / (f.grid[j][0] - f.grid[i][0]);
            double a = f.values[i] - b * f.grid[i][0];
            bool minorant = true;
            for (std::size_t t = 0; t < n; ++t)
                if (a + b * f.grid[t][0] > f.values[t] + 1e-10) { minorant = false; break; }
            if (minorant) best = std::max(best, a + b * f.grid[at][0]);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("biconjugate of a convex sample equals the sample") {
    Vec xs, vs;
    for (int k = 0; k <= 100; ++k) {
        double x = -1.0 + 0.02 * k;
        xs.push_back(x);
        vs.push_back(x * x);
    }
    SampledFunction f = SampledFunction::line_1d(xs, vs);
    ConvexEnvelope env = biconjugate(f);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(env.grid_values[i] == Catch::Approx(f.values[i]).margin(1e-12));
    CHECK(rho(f) == 0.0);
}

TEST_CASE("biconjugate of sqrt(|x|) is |x| on the grid") {
    SampledFunction f = sqrt_abs(201);
    ConvexEnvelope env = biconjugate(f);
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(env.grid_values[i] == Catch::Approx(std::abs(f.grid[i][0])).margin(1e-9));
        CHECK(env.grid_values[i] == Catch::Approx(envelope_oracle_1d(f, i)).margin(1e-9));
    }
    CHECK(env.breakpoints.size() == 3);  // -1, 0, 1
}

TEST_CASE("two-point domains are always convex") {
    SampledFunction f = SampledFunction::line_1d({0, 1}, {0, 0});
    ConvexEnvelope env = biconjugate(f);
    CHECK(env.grid_values[0] == 0.0);
    CHECK(env.grid_values[1] == 0.0);
    CHECK(rho(f) == 0.0);
}

TEST_CASE("envelope properties on random samples") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 3 + rng.below(20);
        Vec xs, vs;
        double x = rng.uniform(-2, -1);
        for (std::size_t i = 0; i < n; ++i) {
            xs.push_back(x);
            x += rng.uniform(0.05, 0.5);
            vs.push_back(rng.uniform(-1, 1));
        }
        SampledFunction f = SampledFunction::line_1d(xs, vs);
        ConvexEnvelope env = biconjugate(f);
        // below f, convex second differences
        for (std::size_t i = 0; i < n; ++i) CHECK(env.grid_values[i] <= f.values[i] + 1e-12);
        for (std::size_t i = 2; i < env.breakpoints.size(); ++i) {
            double x0 = env.breakpoints[i - 2][0], x1 = env.breakpoints[i - 1][0],
                   x2 = env.breakpoints[i][0];
            double s1 = (env.breakpoint_values[i - 1] - env.breakpoint_values[i - 2]) / (x1 - x0);
            double s2 = (env.breakpoint_values[i] - env.breakpoint_values[i - 1]) / (x2 - x1);
            CHECK(s2 >= s1 - 1e-12);
        }
        // idempotence: the envelope of the envelope is itself
        SampledFunction g;
        g.dim = 1;
        g.grid = env.grid;
        g.values = env.grid_values;
        ConvexEnvelope env2 = biconjugate(g);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(env2.grid_values[i] == Catch::Approx(env.grid_values[i]).margin(1e-10));
        // random affine minorants never exceed the envelope
        for (int k = 0; k < 10; ++k) {
            double b = rng.uniform(-2, 2);
            double a = 1e300;
            for (std::size_t i = 0; i < n; ++i) a = std::min(a, f.values[i] - b * xs[i]);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(a + b * xs[i] <= env.grid_values[i] + 1e-10);
        }
    }
}

TEST_CASE("rho of sqrt(|x|) is 0.25 at x = +-0.25") {
    SampledFunction f = sqrt_abs(201);
    RhoResult r = rho_with_argmax(f);
    CHECK(r.value == Catch::Approx(0.25).margin(0.01));
    CHECK(std::abs(std::abs(r.argmax[0]) - 0.25) < 0.01);
}

TEST_CASE("rho is invariant under affine shifts") {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 4 + rng.below(12);
        Vec xs, vs;
        double x = 0;
        for (std::size_t i = 0; i < n; ++i) {
            xs.push_back(x);
            x += rng.uniform(0.1, 0.6);
            vs.push_back(rng.uniform(-1, 1));
        }
        SampledFunction f = SampledFunction::line_1d(xs, vs);
        double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
        Vec vs2 = vs;
        for (std::size_t i = 0; i < n; ++i) vs2[i] += a + b * xs[i];
        SampledFunction g = SampledFunction::line_1d(xs, vs2);
        CHECK(rho(f) == Catch::Approx(rho(g)).margin(1e-10));
    }
}

TEST_CASE("rho_k basics") {
    SampledFunction f = sqrt_abs(41);
    CHECK(rho_k(f, 1) == 0.0);
    CHECK(rho_k(f, 2) == Catch::Approx(rho(f)));   // 1-D: pairs achieve the hull
    CHECK(rho_k(f, 5) == Catch::Approx(rho(f)));   // saturation beyond d+1
    Vec convex_vals;
    for (const Vec& p : f.grid) convex_vals.push_back(p[0] * p[0]);
    SampledFunction g;
    g.dim = 1;
    g.grid = f.grid;
    g.values = convex_vals;
    CHECK(rho_k(g, 2) == 0.0);
    CHECK_THROWS_AS(rho_k(f, 0), std::invalid_argument);
}

TEST_CASE("1-D rho_2 matches the exhaustive pair oracle") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 3 + rng.below(8);
        Vec xs, vs;
        double x = 0;
        for (std::size_t i = 0; i < n; ++i) {
            xs.push_back(x);
            x += rng.uniform(0.2, 1.0);
            vs.push_back(rng.uniform(-1, 1));
        }
        SampledFunction f = SampledFunction::line_1d(xs, vs);
        // oracle: pairs (a,b), targets c strictly between, exact landing
        double best = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                for (std::size_t c = a; c <= b; ++c) {
                    double t = (xs[b] - xs[c]) / (xs[b] - xs[a]);
                    best = std::max(best, vs[c] - (t * vs[a] + (1 - t) * vs[b]));
                }
        CHECK(rho_k(f, 2) == Catch::Approx(best).margin(1e-10));
    }
}

TEST_CASE("2-D envelope and rho_k on a small grid") {
    // 3x3 grid with a lifted bump in the center
    SampledFunction f;
    f.dim = 2;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
            f.grid.push_back({double(i), double(j)});
            f.values.push_back((i == 0 && j == 0) ? 1.0 : 0.0);
        }
    ConvexEnvelope env = biconjugate(f);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double expect = (f.grid[i][0] == 0 && f.grid[i][1] == 0) ? 0.0 : f.values[i];
        CHECK(env.grid_values[i] == Catch::Approx(expect).margin(1e-8));
    }
    CHECK(rho(f) == Catch::Approx(1.0).margin(1e-8));
    CHECK(rho_k(f, 1) == 0.0);
    double r2 = rho_k(f, 2);
    double r3 = rho_k(f, 3);
    CHECK(r2 <= r3 + 1e-12);  // nondecreasing in k
    CHECK(r3 == Catch::Approx(rho(f)).margin(1e-8));  // saturation at d+1
    CHECK(r2 == Catch::Approx(1.0).margin(1e-8));     // opposite edge midpoints land on 0
}

TEST_CASE("rho_k refuses oversized enumeration") {
    SampledFunction f;
    f.dim = 2;
    Rng rng(1);
    for (int i = 0; i < 60; ++i) {
        f.grid.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
        f.values.push_back(rng.uniform(-1, 1));
    }
    RhoKLimits lim;
    lim.budget = 1000;
    CHECK_THROWS_AS(rho_k(f, 3, lim), std::runtime_error);
}

TEST_CASE("validation rejects malformed samples") {
    SampledFunction f;
    f.dim = 1;
    f.grid = {{0.0}, {0.0}};
    f.values = {1.0, 2.0};
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}
