#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sfkit/linalg.hpp"
#include "sfkit/rng.hpp"
#include "sfkit/simplex.hpp"

namespace sfkit {

/// Inputs shared by the without-replacement tail formulas.
struct TailBoundParams {
    std::size_t N = 0;       // population size
    std::size_t m = 0;       // sample size
    double epsilon = 0.0;
    double delta0 = 0.5;
    double R_v = 0.0;
    double R_lambda = 0.0;
    double D_smooth = 1.0;
    double sigma_m = 0.0;
    double c = 1.0;

    double alpha_m() const {  // (m-1)/N, the sampling ratio
        return (static_cast<double>(m) - 1.0) / static_cast<double>(N);
    }

    void validate() const {
        if (N < 1 || m < 1 || m > N) throw std::invalid_argument("TailBoundParams: need 1 <= m <= N");
        if (epsilon < 0.0) throw std::invalid_argument("TailBoundParams: epsilon < 0");
    }
};

inline double clamp_prob(double p) { return std::clamp(p, 0.0, 1.0); }

/// Hoeffding-Serfling tail: 2 exp(-alpha_m eps^2 / (2N(1-alpha_m)R^2)),
/// R = max(R_v, R_lambda).
inline double hoeffding_serfling_tail(const TailBoundParams& p) {
    p.validate();
    const double R = std::max(p.R_v, p.R_lambda);
    if (R <= 0.0) throw std::invalid_argument("hoeffding_serfling_tail: R must be > 0");
    const double a = p.alpha_m();
    if (a <= 0.0) return 1.0;
    if (a >= 1.0) return 0.0;
    const double expo = -a * p.epsilon * p.epsilon /
                        (2.0 * static_cast<double>(p.N) * (1.0 - a) * R * R);
    return clamp_prob(2.0 * std::exp(expo));
}

/// Without-replacement variance sigma_m: the essential supremum over sampling
/// histories of the weighted combination of conditional variances.
struct SigmaResult {
    double value = 0.0;
    bool exact = false;  // MC mode returns a lower estimate
};

namespace detail {

// variance (under `norm`) of the remaining multiset after removing `removed`
inline double remaining_variance(const std::vector<Vec>& pop, const std::vector<bool>& removed,
                                 std::size_t n_removed, const NormSpec& norm) {
    const std::size_t N = pop.size();
    const std::size_t R = N - n_removed;
    if (R == 0) return 0.0;
    const std::size_t d = pop[0].size();
    Vec mean(d, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        if (!removed[i]) axpy(1.0, pop[i], mean);
    for (double& v : mean) v /= static_cast<double>(R);
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        if (removed[i]) continue;
        double nv = norm(sub(pop[i], mean));
        s += nv * nv;
    }
    return s / static_cast<double>(R);
}

}  // namespace detail

struct SigmaMode {
    bool exact = true;
    std::size_t trials = 100000;  // MC histories
    std::uint64_t seed = 0;
};

inline SigmaResult sigma_m(const std::vector<Vec>& population, std::size_t m,
                           const NormSpec& norm, const SigmaMode& mode = {}) {
    const std::size_t N = population.size();
    if (N < 2) throw std::invalid_argument("sigma_m: need N >= 2");
    if (m > N - 1) throw std::invalid_argument("sigma_m: need m <= N-1");
    Vec w(m + 1, 0.0);
    double wsum = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        w[k] = 1.0 / (static_cast<double>(N - k) * static_cast<double>(N - k));
        wsum += w[k];
    }
    SigmaResult out;
    if (mode.exact) {
        if (N > 10) throw std::invalid_argument("sigma_m: exact mode capped at N <= 10");
        // DP over removal subsets: chains pay w_{|S|+1} g(S) when leaving S
        const std::size_t full = std::size_t{1} << N;
        const double neg = -std::numeric_limits<double>::infinity();
        Vec F(full, neg);
        Vec g(full, 0.0);
        std::vector<bool> rm(N, false);
        for (std::size_t mask = 0; mask < full; ++mask) {
            std::size_t cnt = 0;
            for (std::size_t i = 0; i < N; ++i) {
                rm[i] = (mask >> i) & 1u;
                if (rm[i]) ++cnt;
            }
            if (cnt <= m) g[mask] = detail::remaining_variance(population, rm, cnt, norm);
        }
        F[0] = 0.0;
        double best = neg;
        for (std::size_t mask = 0; mask < full; ++mask) {
            if (F[mask] == neg) continue;
            std::size_t cnt = static_cast<std::size_t>(__builtin_popcountll(mask));
            if (cnt + 1 > m) continue;  // chains stop at |S| = m-1
            double leave = F[mask] + w[cnt + 1] * g[mask];
            if (cnt + 1 == m) {  // term k = m paid; chain complete
                best = std::max(best, leave);
                continue;
            }
            for (std::size_t i = 0; i < N; ++i) {
                if ((mask >> i) & 1u) continue;
                std::size_t nxt = mask | (std::size_t{1} << i);
                if (leave > F[nxt]) F[nxt] = leave;
            }
        }
        out.value = std::sqrt(std::max(best, 0.0) / wsum);
        out.exact = true;
        return out;
    }
    // Monte-Carlo lower estimate: max over sampled histories
    Rng rng(mode.seed);
    double best = 0.0;
    std::vector<bool> rm(N, false);
    for (std::size_t t = 0; t < std::max<std::size_t>(mode.trials, 1); ++t) {
        std::fill(rm.begin(), rm.end(), false);
        std::vector<std::size_t> hist = rng.sample_indices(N, m - 1);
        double acc = 0.0;
        for (std::size_t k = 1; k <= m; ++k) {
            acc += w[k] * detail::remaining_variance(population, rm, k - 1, norm);
            if (k <= m - 1) rm[hist[k - 1]] = true;
        }
        best = std::max(best, acc);
    }
    out.value = std::sqrt(best / wsum);
    out.exact = false;
    return out;
}

/// Bennett-Serfling tail: 2 exp(-m eps^2 / (2(2 D^2 ((N-m)/N) sigma_m^2 + eps R_v / 3))).
inline double bennett_serfling_tail(const TailBoundParams& p) {
    p.validate();
    const double frac = static_cast<double>(p.N - p.m) / static_cast<double>(p.N);
    const double denom =
        2.0 * (2.0 * p.D_smooth * p.D_smooth * frac * p.sigma_m * p.sigma_m +
               p.epsilon * p.R_v / 3.0);
    if (denom <= 0.0) return (p.epsilon > 0.0) ? 0.0 : 1.0;
    const double expo = -static_cast<double>(p.m) * p.epsilon * p.epsilon / denom;
    return clamp_prob(2.0 * std::exp(expo));
}

/// Smallest sampling ratio alpha_m ensuring the Bennett-Serfling tail is at
/// most delta0. Ratio > 1 means no sample size works at this epsilon; the
/// result is clamped to 1 and flagged infeasible.
struct RatioResult {
    double ratio = 0.0;
    std::size_t m_implied = 0;
    bool feasible = true;
};

inline RatioResult required_sampling_ratio(const TailBoundParams& p) {
    if (p.epsilon <= 0.0) throw std::invalid_argument("required_sampling_ratio: epsilon <= 0");
    if (p.delta0 <= 0.0 || p.delta0 >= 1.0)
        throw std::invalid_argument("required_sampling_ratio: delta0 in (0,1) required");
    const double L = 2.0 * std::log(2.0 / p.delta0);
    const double Ds2 = 2.0 * p.D_smooth * p.D_smooth * p.sigma_m * p.sigma_m;
    const double num = L * (Ds2 + p.epsilon * p.R_v / 3.0) / static_cast<double>(p.N);
    const double den = p.epsilon * p.epsilon + L * Ds2 / static_cast<double>(p.N);
    RatioResult out;
    double r = num / den;
    out.feasible = r <= 1.0;
    out.ratio = std::clamp(r, std::numeric_limits<double>::min(), 1.0);
    out.m_implied = static_cast<std::size_t>(
        std::clamp<double>(std::ceil(out.ratio * static_cast<double>(p.N)), 1.0,
                           static_cast<double>(p.N)));
    return out;
}

/// Fraction of seeded without-replacement samples whose mean deviates from
/// the population mean by at least epsilon (under `norm`).
inline double empirical_tail(const std::vector<Vec>& population, std::size_t m, double epsilon,
                             const NormSpec& norm, std::size_t trials, std::uint64_t seed) {
    const std::size_t N = population.size();
    if (N == 0 || m < 1 || m > N) throw std::invalid_argument("empirical_tail: bad N or m");
    if (trials < 1) throw std::invalid_argument("empirical_tail: trials must be >= 1");
    const std::size_t d = population[0].size();
    Vec mean(d, 0.0);
    for (const Vec& v : population) axpy(1.0, v, mean);
    for (double& v : mean) v /= static_cast<double>(N);
    Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<std::size_t> J = rng.sample_indices(N, m);
        Vec s(d, 0.0);
        for (std::size_t j : J) axpy(1.0, population[j], s);
        for (double& v : s) v /= static_cast<double>(m);
        if (norm(sub(s, mean)) >= epsilon) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

/// Approximate-Helly point distance alpha * sqrt((m-k)/(k(m-1))), m = min(n, d+1);
/// zero from k = m on. m_override (when nonzero) substitutes the active-row
/// count for min(n, d+1).
inline double helly_point_distance(double alpha, std::size_t n, std::size_t k, std::size_t d,
                                   std::size_t m_override = 0) {
    if (k < 1 || k > n) throw std::invalid_argument("helly_point_distance: need 0 < k <= n");
    if (alpha < 0.0) throw std::invalid_argument("helly_point_distance: alpha < 0");
    const std::size_t m = (m_override > 0) ? m_override : std::min(n, d + 1);
    if (k >= m) return 0.0;
    return alpha * std::sqrt(static_cast<double>(m - k) /
                             (static_cast<double>(k) * static_cast<double>(m - 1)));
}

struct HellyParams {
    std::size_t n_constraints = 0;
    std::size_t k = 0;
    std::size_t d = 0;
    std::size_t m_override = 0;  // 0 = min(n, d+1); set to the active-row count otherwise
    double D_diam = 0.0;         // may be +inf
    double L0 = 0.0;
    Vec L;       // per-constraint Lipschitz constants
    Vec lambda;  // dual multipliers >= 0
};

struct ConstraintBound {
    double value = 0.0;
    bool vacuous = false;  // D_diam was infinite
};

/// (L0 + sum lambda_i L_i) (D/2) sqrt((m-k)/(k(m-1))).
inline ConstraintBound constraint_sampling_bound(const HellyParams& h) {
    if (h.L.size() != h.n_constraints || h.lambda.size() != h.n_constraints)
        throw std::invalid_argument("constraint_sampling_bound: L/lambda size mismatch");
    ConstraintBound out;
    if (!std::isfinite(h.D_diam)) {
        out.vacuous = true;
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    double weight = h.L0;
    for (std::size_t i = 0; i < h.n_constraints; ++i) weight += h.lambda[i] * h.L[i];
    out.value = weight * (h.D_diam / 2.0) *
                helly_point_distance(1.0, h.n_constraints, h.k, h.d, h.m_override);
    return out;
}

/// LP instance with a max-affine objective f0(x) = max_j (C_j . x + d_j) and
/// linear constraints A x <= b; level sets of f0 are polytopes, which keeps
/// the diameter D finite when the C_j positively span.
struct SampledLpInstance {
    Mat obj_C;
    Vec obj_d;
    Mat A;
    Vec b;

    std::size_t dim() const { return obj_C.cols; }
    std::size_t n_constraints() const { return b.size(); }

    void validate() const {
        if (obj_C.rows == 0 || obj_C.rows != obj_d.size())
            throw std::invalid_argument("SampledLpInstance: objective rows mismatch");
        if (A.rows != b.size() || (A.rows > 0 && A.cols != obj_C.cols))
            throw std::invalid_argument("SampledLpInstance: constraint shape mismatch");
    }
};

namespace detail {

/// Solve min f0 over the rows of A indexed by `rows`; returns (value, x, duals on rows).
struct SubLpResult {
    bool optimal = false;
    bool unbounded = false;
    double value = 0.0;
    Vec x;
    Vec row_duals;
};

inline SubLpResult solve_subproblem(const SampledLpInstance& inst,
                                    const std::vector<std::size_t>& rows) {
    const std::size_t d = inst.dim();
    const std::size_t J = rows.size();
    const std::size_t P = inst.obj_C.rows;
    // vars (x, t): min t s.t. C_j x - t <= -d_j, a_r x <= b_r
    Vec c(d + 1, 0.0);
    c[d] = 1.0;
    Mat Aub(P + J, d + 1);
    Vec bub(P + J);
    for (std::size_t j = 0; j < P; ++j) {
        for (std::size_t t = 0; t < d; ++t) Aub(j, t) = inst.obj_C(j, t);
        Aub(j, d) = -1.0;
        bub[j] = -inst.obj_d[j];
    }
    for (std::size_t r = 0; r < J; ++r) {
        for (std::size_t t = 0; t < d; ++t) Aub(P + r, t) = inst.A(rows[r], t);
        bub[P + r] = inst.b[rows[r]];
    }
    LpSolution s = solve_lp_free_ub(c, Aub, bub);
    SubLpResult out;
    if (s.status == LpSolution::Status::Unbounded) {
        out.unbounded = true;
        return out;
    }
    if (!s.optimal()) return out;
    out.optimal = true;
    out.value = s.value;
    out.x.assign(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(d));
    out.row_duals.assign(J, 0.0);
    for (std::size_t r = 0; r < J; ++r) out.row_duals[r] = s.dual_ub[P + r];
    return out;
}

/// Diameter of the level polytope {x : C x + d <= level} by vertex-pair
/// enumeration (d-subsets of rows).
inline double level_set_diameter(const Mat& C, const Vec& dvec, double level) {
    const std::size_t d = C.cols, P = C.rows;
    std::vector<Vec> verts;
    std::vector<std::size_t> idx(d);
    std::vector<std::size_t> comb;
    // enumerate d-subsets of [0, P)
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == d) {
            Mat M(d, d);
            Vec rhs(d);
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t t = 0; t < d; ++t) M(r, t) = C(idx[r], t);
                rhs[r] = level - dvec[idx[r]];
            }
            try {
                Vec v = solve_dense(M, rhs);
                for (std::size_t j = 0; j < P; ++j) {
                    double lhs = dvec[j];
                    for (std::size_t t = 0; t < d; ++t) lhs += C(j, t) * v[t];
                    if (lhs > level + 1e-7 * (1.0 + std::abs(level))) return;
                }
                verts.push_back(v);
            } catch (const std::runtime_error&) {
            }
            return;
        }
        for (std::size_t j = start; j + (d - depth) <= P; ++j) {
            idx[depth] = j;
            rec(j + 1, depth + 1);
        }
    };
    rec(0, 0);
    double diam = 0.0;
    for (std::size_t a = 0; a < verts.size(); ++a)
        for (std::size_t b = a + 1; b < verts.size(); ++b)
            diam = std::max(diam, dist2(verts[a], verts[b]));
    if (verts.empty()) return std::numeric_limits<double>::infinity();
    return diam;
}

}  // namespace detail

struct ConstraintSamplingReport {
    double f0_star = 0.0;
    Vec x_star;
    double L0 = 0.0;
    double dual_weight = 0.0;  // L0 + sum lambda_i L_i
    double D_diam = 0.0;
    double factor = 0.0;  // sqrt((m-k)/(k(m-1)))
    double bound = 0.0;
    bool vacuous = false;
    std::size_t subsets_solved = 0;
    std::size_t unbounded_subsets = 0;
    double max_slack = 0.0;  // worst observed f0(x*) - f0(x_J)
    double min_slack = 0.0;  // best observed (the theorem's existential quantity)
    bool theorem_holds = false;  // min_slack <= bound + tol
};

/// Solves the full instance, prices the bound, then solves the k-subset
/// subproblems (exhaustively when trials = 0 or enough trials are allowed,
/// else a seeded random sample of subsets) and compares observed slacks.
inline ConstraintSamplingReport constraint_sampling_experiment(const SampledLpInstance& inst,
                                                               std::size_t k, std::size_t trials,
                                                               std::uint64_t seed) {
    inst.validate();
    const std::size_t n = inst.n_constraints();
    const std::size_t d = inst.dim();
    if (k < 1 || k > n)
        throw std::invalid_argument("constraint_sampling_experiment: need 0 < k <= n");

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    detail::SubLpResult full = detail::solve_subproblem(inst, all);
    if (!full.optimal)
        throw std::runtime_error("constraint_sampling_experiment: full problem not solvable");

    ConstraintSamplingReport rep;
    rep.f0_star = full.value;
    rep.x_star = full.x;
    for (std::size_t j = 0; j < inst.obj_C.rows; ++j)
        rep.L0 = std::max(rep.L0, norm2(inst.obj_C.row(j)));
    rep.dual_weight = rep.L0;
    for (std::size_t r = 0; r < n; ++r)
        rep.dual_weight += full.row_duals[r] * norm2(inst.A.row(r));
    rep.D_diam = detail::level_set_diameter(inst.obj_C, inst.obj_d, full.value);
    rep.factor = helly_point_distance(1.0, n, k, d);
    rep.vacuous = !std::isfinite(rep.D_diam);
    rep.bound = rep.vacuous ? std::numeric_limits<double>::infinity()
                            : rep.dual_weight * rep.D_diam / 2.0 * rep.factor;

    double max_slack = -std::numeric_limits<double>::infinity();
    double min_slack = std::numeric_limits<double>::infinity();
    auto consider = [&](const std::vector<std::size_t>& J) {
        detail::SubLpResult sub = detail::solve_subproblem(inst, J);
        ++rep.subsets_solved;
        if (sub.unbounded || !sub.optimal) {
            ++rep.unbounded_subsets;
            return;
        }
        double slack = full.value - sub.value;
        max_slack = std::max(max_slack, slack);
        min_slack = std::min(min_slack, slack);
    };

    double total_subsets = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        total_subsets *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    const bool exhaustive = (trials == 0) || (static_cast<double>(trials) >= total_subsets);
    if (exhaustive) {
        std::vector<std::size_t> idx(k);
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start,
                                                                std::size_t depth) {
            if (depth == k) {
                consider(idx);
                return;
            }
            for (std::size_t j = start; j + (k - depth) <= n; ++j) {
                idx[depth] = j;
                rec(j + 1, depth + 1);
            }
        };
        rec(0, 0);
    } else {
        Rng rng(seed);
        for (std::size_t t = 0; t < trials; ++t) {
            std::vector<std::size_t> J = rng.sample_indices(n, k);
            std::sort(J.begin(), J.end());
            consider(J);
        }
    }
    rep.max_slack = max_slack;
    rep.min_slack = min_slack;
    rep.theorem_holds =
        rep.vacuous || (min_slack <= rep.bound + 1e-7 * (1.0 + std::abs(rep.bound)));
    return rep;
}

}  // namespace sfkit
