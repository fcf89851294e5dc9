#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sfkit/linalg.hpp"
#include "sfkit/simplex.hpp"

namespace sfkit {

/// Block objective sampled on a finite grid. The grid carries the values;
/// between grid points the function is read as the piecewise-linear
/// interpolant on conv(grid) (1-coercive and lsc by construction).
struct SampledFunction {
    std::size_t dim = 0;
    std::vector<Vec> grid;
    Vec values;

    std::size_t size() const { return grid.size(); }

    static SampledFunction line_1d(Vec xs, Vec vals) {
        SampledFunction f;
        f.dim = 1;
        f.values = std::move(vals);
        f.grid.reserve(xs.size());
        for (double x : xs) f.grid.push_back({x});
        f.canonicalize();
        return f;
    }

    /// Sorts 1-D grids ascending (values follow) and verifies invariants.
    void canonicalize() {
        validate_shape();
        if (dim == 1) {
            std::vector<std::size_t> order(grid.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return grid[a][0] < grid[b][0]; });
            std::vector<Vec> g;
            Vec v;
            for (std::size_t i : order) {
                g.push_back(grid[i]);
                v.push_back(values[i]);
            }
            grid = std::move(g);
            values = std::move(v);
        }
        validate();
    }

    void validate_shape() const {
        if (dim == 0) throw std::invalid_argument("SampledFunction: dim must be positive");
        if (grid.empty()) throw std::invalid_argument("SampledFunction: empty grid");
        if (grid.size() != values.size())
            throw std::invalid_argument("SampledFunction: grid/values size mismatch");
        for (const Vec& p : grid)
            if (p.size() != dim || !all_finite(p))
                throw std::invalid_argument("SampledFunction: bad grid point");
        if (!all_finite(values)) throw std::invalid_argument("SampledFunction: non-finite value");
    }

    void validate() const {
        validate_shape();
        if (dim == 1) {
            for (std::size_t i = 1; i < grid.size(); ++i)
                if (!(grid[i - 1][0] < grid[i][0]))
                    throw std::invalid_argument("SampledFunction: 1-D grid not strictly increasing");
        } else {
            for (std::size_t i = 0; i < grid.size(); ++i)
                for (std::size_t j = i + 1; j < grid.size(); ++j)
                    if (grid[i] == grid[j])
                        throw std::invalid_argument("SampledFunction: duplicate grid point");
        }
    }

    /// Piecewise-linear value at x (1-D); +inf outside conv(grid).
    double interp_1d(double x) const {
        if (dim != 1) throw std::invalid_argument("interp_1d: dim != 1");
        if (x < grid.front()[0] - 1e-12 || x > grid.back()[0] + 1e-12)
            return std::numeric_limits<double>::infinity();
        x = std::clamp(x, grid.front()[0], grid.back()[0]);
        auto it = std::lower_bound(grid.begin(), grid.end(), x,
                                   [](const Vec& p, double v) { return p[0] < v; });
        std::size_t hi = static_cast<std::size_t>(it - grid.begin());
        if (hi == 0) return values[0];
        if (hi >= grid.size()) return values.back();
        std::size_t lo = hi - 1;
        double t = (x - grid[lo][0]) / (grid[hi][0] - grid[lo][0]);
        return (1.0 - t) * values[lo] + t * values[hi];
    }
};

/// Lower convex interpolation of f on its grid: breakpoints are the grid
/// points where the envelope meets f (lower-hull vertices).
struct ConvexEnvelope {
    std::size_t dim = 0;
    std::vector<Vec> breakpoints;
    Vec breakpoint_values;
    std::vector<Vec> grid;  // echo of the source grid
    Vec grid_values;        // envelope at every grid point

    /// Envelope value at an arbitrary point of conv(breakpoints);
    /// +inf outside. 1-D interpolates, d >= 2 solves a small LP.
    double value_at(const Vec& x) const {
        if (x.size() != dim) throw std::invalid_argument("ConvexEnvelope: point dim mismatch");
        if (dim == 1) {
            double v = x[0];
            if (v < breakpoints.front()[0] - 1e-12 || v > breakpoints.back()[0] + 1e-12)
                return std::numeric_limits<double>::infinity();
            v = std::clamp(v, breakpoints.front()[0], breakpoints.back()[0]);
            auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), v,
                                       [](const Vec& p, double t) { return p[0] < t; });
            std::size_t hi = static_cast<std::size_t>(it - breakpoints.begin());
            if (hi == 0) return breakpoint_values[0];
            if (hi >= breakpoints.size()) return breakpoint_values.back();
            std::size_t lo = hi - 1;
            double t = (v - breakpoints[lo][0]) / (breakpoints[hi][0] - breakpoints[lo][0]);
            return (1.0 - t) * breakpoint_values[lo] + t * breakpoint_values[hi];
        }
        const std::size_t k = breakpoints.size();
        LinearProgram lp;
        lp.c = breakpoint_values;
        lp.Aeq = Mat(dim + 1, k);
        lp.beq = Vec(dim + 1);
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t j = 0; j < k; ++j) lp.Aeq(r, j) = breakpoints[j][r];
            lp.beq[r] = x[r];
        }
        for (std::size_t j = 0; j < k; ++j) lp.Aeq(dim, j) = 1.0;
        lp.beq[dim] = 1.0;
        LpSolution s = solve_lp(lp);
        if (!s.optimal()) return std::numeric_limits<double>::infinity();
        return s.value;
    }
};

namespace detail {

inline ConvexEnvelope lower_hull_1d(const SampledFunction& f) {
    ConvexEnvelope env;
    env.dim = 1;
    env.grid = f.grid;
    const std::size_t n = f.size();
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            std::size_t a = hull[hull.size() - 2], b = hull.back();
            double xa = f.grid[a][0], xb = f.grid[b][0], xc = f.grid[i][0];
            // drop b unless it is strictly below chord a-c (collinear: endpoints only)
            if ((f.values[b] - f.values[a]) * (xc - xa) >=
                (f.values[i] - f.values[a]) * (xb - xa) - 1e-15 * (1.0 + std::abs(f.values[a])))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    for (std::size_t i : hull) {
        env.breakpoints.push_back(f.grid[i]);
        env.breakpoint_values.push_back(f.values[i]);
    }
    env.grid_values.resize(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (seg + 1 < hull.size() && f.grid[hull[seg + 1]][0] <= f.grid[i][0]) ++seg;
        if (seg + 1 >= hull.size()) {
            env.grid_values[i] = f.values[hull.back()];
        } else {
            double xa = f.grid[hull[seg]][0], xb = f.grid[hull[seg + 1]][0];
            double t = (f.grid[i][0] - xa) / (xb - xa);
            env.grid_values[i] =
                (1.0 - t) * f.values[hull[seg]] + t * f.values[hull[seg + 1]];
        }
        env.grid_values[i] = std::min(env.grid_values[i], f.values[i]);
    }
    return env;
}

}  // namespace detail

struct EnvelopeLimits {
    std::size_t max_grid_nd = 512;  // d >= 2 grids above this are refused
};

/// Biconjugate of a grid-sampled function: the lower convex hull of its
/// sampled epigraph. 1-D uses a monotone chain; d >= 2 evaluates the lower
/// hull by one small LP per grid point.
inline ConvexEnvelope biconjugate(const SampledFunction& f, EnvelopeLimits lim = {}) {
    f.validate();
    if (f.dim == 1) return detail::lower_hull_1d(f);
    if (f.size() > lim.max_grid_nd)
        throw std::invalid_argument("biconjugate: grid too large for d >= 2 envelope");

    const std::size_t n = f.size();
    ConvexEnvelope env;
    env.dim = f.dim;
    env.grid = f.grid;
    env.grid_values.resize(n);
    LinearProgram lp;
    lp.c = f.values;
    lp.Aeq = Mat(f.dim + 1, n);
    lp.beq = Vec(f.dim + 1);
    for (std::size_t j = 0; j < n; ++j) lp.Aeq(f.dim, j) = 1.0;
    lp.beq[f.dim] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < f.dim; ++r) {
            for (std::size_t j = 0; j < n; ++j) lp.Aeq(r, j) = f.grid[j][r];
            lp.beq[r] = f.grid[i][r];
        }
        LpSolution s = solve_lp(lp);
        if (!s.optimal()) throw std::runtime_error("biconjugate: inner LP failed");
        env.grid_values[i] = std::min(s.value, f.values[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (f.values[i] - env.grid_values[i] <= 1e-9 * (1.0 + std::abs(f.values[i]))) {
            env.breakpoints.push_back(f.grid[i]);
            env.breakpoint_values.push_back(env.grid_values[i]);
        }
    }
    return env;
}

/// rho(f) = max over the grid of f - f**.
struct RhoResult {
    double value = 0.0;
    Vec argmax;
};

inline RhoResult rho_with_argmax(const SampledFunction& f) {
    ConvexEnvelope env = biconjugate(f);
    RhoResult r;
    r.argmax = f.grid[0];
    for (std::size_t i = 0; i < f.size(); ++i) {
        double gap = f.values[i] - env.grid_values[i];
        if (gap > r.value) {
            r.value = gap;
            r.argmax = f.grid[i];
        }
    }
    return r;
}

inline double rho(const SampledFunction& f) { return rho_with_argmax(f).value; }

struct RhoKLimits {
    double budget = 2e6;  // subset-target pairs allowed for d >= 2 enumeration
};

/// k-th nonconvexity measure: the inner sup ranges over convex combinations
/// of at most k grid atoms that land exactly on a grid point (conservative:
/// never exceeds rho). Saturates at k = dim+1 where it equals rho.
inline double rho_k(const SampledFunction& f, std::size_t k, RhoKLimits lim = {}) {
    f.validate();
    if (k < 1) throw std::invalid_argument("rho_k: k must be >= 1");
    if (k == 1) return 0.0;
    if (k > f.dim + 1) k = f.dim + 1;  // Caratheodory saturation
    if (f.dim == 1) {
        // pairs achieve the lower hull in 1-D; exact landing on grid targets
        return rho(f);
    }
    const std::size_t n = f.size();
    double combos = 1.0;
    for (std::size_t i = 0; i < k; ++i) combos *= static_cast<double>(n - i) / (i + 1);
    if (combos * static_cast<double>(n) > lim.budget)
        throw std::runtime_error("rho_k: combinatorial budget exceeded");

    ConvexEnvelope env = biconjugate(f);  // for an early upper bound
    double best = 0.0;
    std::vector<std::size_t> idx(k);
    std::vector<bool> in_subset(n, false);
    // iterate k-subsets
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == k) {
            LinearProgram lp;
            lp.c.resize(k);
            lp.Aeq = Mat(f.dim + 1, k);
            lp.beq = Vec(f.dim + 1);
            for (std::size_t t = 0; t < k; ++t) {
                lp.c[t] = f.values[idx[t]];
                for (std::size_t r = 0; r < f.dim; ++r) lp.Aeq(r, t) = f.grid[idx[t]][r];
                lp.Aeq(f.dim, t) = 1.0;
            }
            lp.beq[f.dim] = 1.0;
            for (std::size_t c = 0; c < n; ++c) {
                double head = f.values[c] - env.grid_values[c];
                if (head <= best) continue;  // cannot beat even with the full hull
                for (std::size_t r = 0; r < f.dim; ++r) lp.beq[r] = f.grid[c][r];
                LpSolution s = solve_lp(lp);
                if (!s.optimal()) continue;  // target outside subset hull
                best = std::max(best, f.values[c] - s.value);
            }
            return;
        }
        for (std::size_t i = start; i + (k - depth) <= n; ++i) {
            idx[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

/// rho plus a profile of rho_k for the requested k values.
struct NonconvexityReport {
    double rho = 0.0;
    Vec argmax;
    std::map<std::size_t, double> rho_k;
};

inline NonconvexityReport nonconvexity_report(const SampledFunction& f,
                                              const std::vector<std::size_t>& ks) {
    NonconvexityReport rep;
    RhoResult r = rho_with_argmax(f);
    rep.rho = r.value;
    rep.argmax = r.argmax;
    for (std::size_t k : ks) rep.rho_k[k] = rho_k(f, k);
    return rep;
}

}  // namespace sfkit
