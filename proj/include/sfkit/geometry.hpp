#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfkit/linalg.hpp"
#include "sfkit/rng.hpp"

namespace sfkit {

/// Finite sample of a subset of R^d.
struct PointSet {
    std::string label;
    std::size_t dim = 0;
    std::vector<Vec> points;

    void validate() const {
        if (dim == 0) throw std::invalid_argument("PointSet: dim must be positive");
        if (points.empty()) throw std::invalid_argument("PointSet: empty");
        for (const Vec& p : points) {
            if (p.size() != dim) throw std::invalid_argument("PointSet: point dim mismatch");
            if (!all_finite(p)) throw std::invalid_argument("PointSet: non-finite coordinate");
        }
    }
};

/// 2-D hull, counterclockwise, first vertex lexicographic minimum.
/// degenerate marks collinear input (two-vertex "polygon") or a single point.
struct HullPolygon {
    std::vector<Vec> vertices;
    bool degenerate = false;
};

namespace detail {
inline double cross(const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}
}  // namespace detail

/// Monotone-chain hull. Collinear interior points are excluded; collinear
/// input collapses to its two extreme endpoints and is flagged degenerate.
inline HullPolygon convex_hull_2d(const PointSet& ps) {
    ps.validate();
    if (ps.dim != 2) throw std::invalid_argument("convex_hull_2d: dim must be 2");
    std::vector<Vec> pts = ps.points;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    HullPolygon out;
    if (pts.size() == 1) {
        out.vertices = pts;
        out.degenerate = true;
        return out;
    }
    const std::size_t n = pts.size();
    std::vector<Vec> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && detail::cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper chain
        while (k >= t && detail::cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    out.vertices = std::move(hull);
    out.degenerate = out.vertices.size() < 3;
    // monotone chain starts at the lexicographic minimum already; keep canonical
    return out;
}

inline double point_set_distance(const Vec& p, const PointSet& q) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& v : q.points) best = std::min(best, dist2(p, v));
    return best;
}

/// Hausdorff distance between the finite samples (a sample-level estimator
/// of the set distance).
inline double hausdorff_distance(const PointSet& P, const PointSet& Q) {
    P.validate();
    Q.validate();
    if (P.dim != Q.dim) throw std::invalid_argument("hausdorff_distance: dim mismatch");
    auto one_sided = [](const PointSet& A, const PointSet& B) {
        double worst = 0.0;
        for (const Vec& a : A.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec& b : B.points) {
                double s = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) {
                    double d = a[i] - b[i];
                    s += d * d;
                }
                best = std::min(best, s);
                if (best <= worst) break;  // cannot raise the sup
            }
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return std::max(one_sided(P, Q), one_sided(Q, P));
}

namespace detail {

inline void dedup_sorted(std::vector<Vec>& pts, double tol = 1e-12) {
    std::sort(pts.begin(), pts.end());
    std::vector<Vec> out;
    for (const Vec& p : pts) {
        if (!out.empty()) {
            bool same = true;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (std::abs(p[i] - out.back()[i]) > tol) { same = false; break; }
            if (same) continue;
        }
        out.push_back(p);
    }
    pts = std::move(out);
}

inline std::size_t argmax_dir(const std::vector<Vec>& pts, const Vec& u) {
    std::size_t best = 0;
    double bv = dot(pts[0], u);
    for (std::size_t j = 1; j < pts.size(); ++j) {
        double v = dot(pts[j], u);
        if (v > bv) { bv = v; best = j; }
    }
    return best;
}

}  // namespace detail

/// Minkowski average (1/n) sum_i V_i of finite point sets. When the Cartesian
/// product fits under `cap` the average is enumerated exactly (deduplicated);
/// otherwise a deterministic seeded subsample of true tuple averages is
/// returned, stratified so both the boundary (per-direction extreme tuples,
/// directions jittered per set to cover faces spanned by tied extremes) and
/// the interior (alignment-mixed tuples) of the average set are represented.
inline PointSet minkowski_average(const std::vector<PointSet>& sets, std::size_t cap,
                                  std::uint64_t seed = 0) {
    if (sets.empty()) throw std::invalid_argument("minkowski_average: empty input list");
    if (cap == 0) throw std::invalid_argument("minkowski_average: cap must be positive");
    const std::size_t d = sets[0].dim;
    for (const PointSet& s : sets) {
        s.validate();
        if (s.dim != d) throw std::invalid_argument("minkowski_average: dimension mismatch");
    }
    const std::size_t n = sets.size();
    PointSet out;
    out.dim = d;
    out.label = "minkowski_average";
    if (n == 1) {
        out.points = sets[0].points;
        out.label = sets[0].label;
        return out;
    }

    double product = 1.0;
    for (const PointSet& s : sets) product *= static_cast<double>(s.points.size());
    if (product <= static_cast<double>(cap)) {
        std::vector<Vec> acc = {Vec(d, 0.0)};
        for (const PointSet& s : sets) {
            std::vector<Vec> next;
            next.reserve(acc.size() * s.points.size());
            for (const Vec& a : acc)
                for (const Vec& p : s.points) next.push_back(add(a, p));
            acc = std::move(next);
        }
        const double inv = 1.0 / static_cast<double>(n);
        for (Vec& p : acc) p = scale(p, inv);
        detail::dedup_sorted(acc);
        out.points = std::move(acc);
        return out;
    }

    Rng rng(seed);
    std::vector<Vec> pts;
    pts.reserve(cap);
    // Boundary stratum: extreme tuple per direction, jittered per set.
    const std::size_t n_dirs = std::min<std::size_t>(std::max<std::size_t>(cap / 4, 16), 256);
    for (std::size_t k = 0; k < n_dirs && pts.size() < cap; ++k) {
        Vec u(d);
        if (d == 2) {
            double th = 6.283185307179586 * static_cast<double>(k) / static_cast<double>(n_dirs);
            u = {std::cos(th), std::sin(th)};
        } else {
            for (double& c : u) c = rng.gaussian();
        }
        double jitter = 0.5 * rng.unit();
        Vec acc(d, 0.0);
        for (const PointSet& s : sets) {
            Vec uj = u;
            for (double& c : uj) c += jitter * rng.gaussian();
            axpy(1.0, s.points[detail::argmax_dir(s.points, uj)], acc);
        }
        pts.push_back(scale(acc, 1.0 / static_cast<double>(n)));
    }
    // Interior stratum: per tuple, a random fraction of components are the
    // extreme atom in a shared jittered direction, the rest uniform draws.
    while (pts.size() < cap) {
        double align = rng.unit();
        Vec u(d);
        if (d == 2) {
            double th = 6.283185307179586 * rng.unit();
            u = {std::cos(th), std::sin(th)};
        } else {
            for (double& c : u) c = rng.gaussian();
        }
        double jitter = 0.5 * rng.unit();
        Vec acc(d, 0.0);
        for (const PointSet& s : sets) {
            if (rng.unit() < align) {
                Vec uj = u;
                for (double& c : uj) c += jitter * rng.gaussian();
                axpy(1.0, s.points[detail::argmax_dir(s.points, uj)], acc);
            } else {
                axpy(1.0, s.points[rng.below(s.points.size())], acc);
            }
        }
        pts.push_back(scale(acc, 1.0 / static_cast<double>(n)));
    }
    detail::dedup_sorted(pts);
    out.points = std::move(pts);
    return out;
}

/// Angle-uniform sample of the unit l_{1/2} sphere in R^2:
/// r(t) = (|cos t|^{1/2} + |sin t|^{1/2})^{-2}.
inline PointSet lhalf_sphere_sample(std::size_t count = 256) {
    if (count == 0) throw std::invalid_argument("lhalf_sphere_sample: count must be positive");
    PointSet out;
    out.dim = 2;
    out.label = "lhalf_sphere";
    out.points.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        double t = 6.283185307179586 * static_cast<double>(k) / static_cast<double>(count);
        double c = std::cos(t), s = std::sin(t);
        double denom = std::sqrt(std::abs(c)) + std::sqrt(std::abs(s));
        double r = 1.0 / (denom * denom);
        out.points.push_back({r * c, r * s});
    }
    return out;
}

/// Grid sample of the filled l_1 unit ball {|x|+|y| <= 1}.
inline PointSet l1_ball_sample(std::size_t res = 81) {
    if (res < 2) throw std::invalid_argument("l1_ball_sample: res must be >= 2");
    PointSet out;
    out.dim = 2;
    out.label = "l1_ball";
    for (std::size_t i = 0; i < res; ++i) {
        double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(res - 1);
        for (std::size_t j = 0; j < res; ++j) {
            double y = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(res - 1);
            if (std::abs(x) + std::abs(y) <= 1.0 + 1e-12) out.points.push_back({x, y});
        }
    }
    return out;
}

}  // namespace sfkit
