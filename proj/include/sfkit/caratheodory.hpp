#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sfkit/linalg.hpp"
#include "sfkit/rng.hpp"

namespace sfkit {

/// Sparse conic (or convex) combination over a column set of atoms.
struct ConicCombination {
    std::vector<std::size_t> atom_indices;
    Vec weights;  // aligned with atom_indices, strictly positive entries
    std::size_t target_dim = 0;

    std::size_t support() const { return atom_indices.size(); }

    Vec reconstruct(const Mat& atoms) const {
        Vec x(atoms.rows, 0.0);
        for (std::size_t t = 0; t < atom_indices.size(); ++t)
            for (std::size_t r = 0; r < atoms.rows; ++r)
                x[r] += weights[t] * atoms(r, atom_indices[t]);
        return x;
    }

    double weight_sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Conic Caratheodory reduction: rewrites sum_j w_j atoms_j with at most
/// D = atoms.rows nonzero weights by repeated null-space pivoting over the
/// active columns. Preserves the represented point and nonnegativity.
inline ConicCombination reduce_conic(const Mat& atoms, const Vec& weights,
                                     double pivot_rel_tol = 1e-12) {
    const std::size_t D = atoms.rows, N = atoms.cols;
    if (weights.size() != N) throw std::invalid_argument("reduce_conic: weight count mismatch");
    for (double w : weights)
        if (w < 0.0 || !std::isfinite(w))
            throw std::invalid_argument("reduce_conic: weights must be nonnegative finite");

    std::vector<std::size_t> active;
    Vec w_active;
    auto eliminate_once = [&]() {
        const std::size_t S = active.size();
        Mat cols(D, S);
        for (std::size_t t = 0; t < S; ++t)
            for (std::size_t r = 0; r < D; ++r) cols(r, t) = atoms(r, active[t]);
        Vec eta = null_vector(cols, pivot_rel_tol);
        if (!all_finite(eta))
            throw std::runtime_error("reduce_conic: singular pivot in null-space step");
        // step w -= t*eta until the first weight hits zero; flip if needed
        double tpos = std::numeric_limits<double>::infinity();
        bool has_pos = false;
        for (double e : eta)
            if (e > 0.0) { has_pos = true; break; }
        if (!has_pos)
            for (double& e : eta) e = -e;
        std::size_t drop = S;
        for (std::size_t t = 0; t < S; ++t) {
            if (eta[t] <= 0.0) continue;
            double ratio = w_active[t] / eta[t];
            if (ratio < tpos) { tpos = ratio; drop = t; }
        }
        if (drop == S || !std::isfinite(tpos))
            throw std::runtime_error("reduce_conic: degenerate null-space direction");
        for (std::size_t t = 0; t < S; ++t) w_active[t] -= tpos * eta[t];
        w_active[drop] = 0.0;
        std::size_t out = 0;
        for (std::size_t t = 0; t < S; ++t) {
            if (w_active[t] > 0.0) {
                active[out] = active[t];
                w_active[out] = w_active[t];
                ++out;
            }
        }
        active.resize(out);
        w_active.resize(out);
    };

    for (std::size_t j = 0; j < N; ++j) {
        if (weights[j] <= 0.0) continue;
        active.push_back(j);
        w_active.push_back(weights[j]);
        while (active.size() > D) eliminate_once();
    }

    ConicCombination out;
    out.target_dim = D;
    out.atom_indices = active;
    out.weights = w_active;
    return out;
}

/// Convex Caratheodory reduction (at most D+1 atoms): conic reduction on
/// atoms lifted with an appended constant-1 coordinate.
inline ConicCombination reduce_convex(const Mat& atoms, const Vec& weights,
                                      double pivot_rel_tol = 1e-12) {
    const std::size_t D = atoms.rows, N = atoms.cols;
    Mat lifted(D + 1, N);
    for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t r = 0; r < D; ++r) lifted(r, j) = atoms(r, j);
        lifted(D, j) = 1.0;
    }
    ConicCombination out = reduce_conic(lifted, weights, pivot_rel_tol);
    out.target_dim = D;
    double s = out.weight_sum();
    if (s > 0.0)
        for (double& w : out.weights) w /= s;  // re-pin the simplex
    return out;
}

/// Frank-Wolfe sparse approximation of a hull member.
struct FwResult {
    ConicCombination comb;
    double error = 0.0;     // achieved ||target - combination||_p
    std::size_t budget = 0; // atom budget ceil(8 p D_p^2 / eps^2)
    std::size_t iterations = 0;
    Vec residuals;          // l2 residual after each iteration (nonincreasing)
};

/// Approximate Caratheodory via Frank-Wolfe with exact line search on
/// min ||target - v||_2^2 over Co(atoms); stops at the lp tolerance or the
/// sparsity budget, whichever first. Ties in atom selection break to the
/// lowest index.
inline FwResult fw_approx(const Vec& target, const Mat& atoms, double eps, const NormSpec& norm) {
    if (norm.kind != NormSpec::Kind::Lp && norm.kind != NormSpec::Kind::L2)
        throw std::invalid_argument("fw_approx: norm must be lp with p >= 2");
    const double p = (norm.kind == NormSpec::Kind::L2) ? 2.0 : norm.p;
    if (eps <= 0.0) throw std::invalid_argument("fw_approx: eps must be positive");
    const std::size_t D = atoms.rows, N = atoms.cols;
    if (target.size() != D) throw std::invalid_argument("fw_approx: target dim mismatch");

    double Dp = 0.0;
    for (std::size_t j = 0; j < N; ++j) Dp = std::max(Dp, norm_p(atoms.col(j), p));
    const auto budget = static_cast<std::size_t>(std::ceil(8.0 * p * Dp * Dp / (eps * eps)));

    // start at the atom closest to the target
    std::size_t start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j) {
        double d = dist2(target, atoms.col(j));
        if (d < best) { best = d; start = j; }
    }
    Vec lambda(N, 0.0);
    lambda[start] = 1.0;
    Vec v = atoms.col(start);

    FwResult res;
    res.budget = budget;
    auto support_count = [&]() {
        std::size_t s = 0;
        for (double w : lambda)
            if (w > 1e-15) ++s;
        return s;
    };
    const std::size_t max_iter = 200 * std::max<std::size_t>(budget, 1) + 1000;
    double err = norm_p(sub(target, v), p);
    while (err > eps) {
        if (res.iterations >= max_iter)
            throw std::runtime_error("fw_approx: tolerance not reached within iteration cap");
        Vec grad = sub(v, target);
        std::size_t s = 0;
        double sv = dot(grad, atoms.col(0));
        for (std::size_t j = 1; j < N; ++j) {
            double val = dot(grad, atoms.col(j));
            if (val < sv - 1e-15) { sv = val; s = j; }
        }
        if (lambda[s] <= 1e-15 && support_count() >= budget)
            throw std::runtime_error(
                "fw_approx: atom budget exhausted before tolerance (target outside hull or "
                "ill-conditioned)");
        Vec dir = sub(v, atoms.col(s));
        double dn = dot(dir, dir);
        double t = dn > 0.0 ? std::clamp(dot(dir, grad) / dn, 0.0, 1.0) : 0.0;
        if (t <= 0.0) break;  // stationary: cannot improve further
        for (double& w : lambda) w *= (1.0 - t);
        lambda[s] += t;
        for (std::size_t r = 0; r < D; ++r) v[r] = (1.0 - t) * v[r] + t * atoms(r, s);
        err = norm_p(sub(target, v), p);
        res.residuals.push_back(norm2(sub(target, v)));
        ++res.iterations;
    }
    if (err > eps)
        throw std::runtime_error("fw_approx: stalled before reaching tolerance");
    res.error = err;
    res.comb.target_dim = D;
    for (std::size_t j = 0; j < N; ++j) {
        if (lambda[j] > 1e-15) {
            res.comb.atom_indices.push_back(j);
            res.comb.weights.push_back(lambda[j]);
        }
    }
    return res;
}

/// Without-replacement sampling plan for the high-sampling-ratio theorems.
struct SamplingPlan {
    enum class Variant { Linf, Banach };
    Variant variant = Variant::Linf;
    std::size_t N = 0;
    double epsilon = 0.0;
    double delta0 = 0.5;
    double R_v = 0.0;
    double R_lambda = 0.0;
    double R = 0.0;  // max of the variant's defining terms
    double c = 0.0;  // absolute constant actually used
    std::size_t m = 0;
    std::size_t retry_budget = 64;
};

inline double default_banach_c(std::size_t dim) {
    return 2.0 * std::log(4.0 * static_cast<double>(std::max<std::size_t>(dim, 2)));
}

struct PlanInputs {
    std::size_t N = 0;
    std::size_t dim = 0;      // ambient dimension (drives log(4d) and the default c)
    double epsilon = 0.0;
    double R_v = 0.0;
    double R_lambda = 0.0;
    double smoothness_D = 1.0;  // Banach variant only
    double c = 0.0;             // 0 = use the default 2 log(4 dim)
};

/// Sample count m = ceil(1 + N t/(1+t)) clamped to [1, N], with
/// t = 2 log(4d) (sqrt(N) R / eps)^2 for the l_inf variant and
/// t = c (sqrt(N) R / eps)^2 for the (2,D)-smooth Banach variant.
inline SamplingPlan required_sample_size(const PlanInputs& in, SamplingPlan::Variant variant) {
    if (in.N < 2) throw std::invalid_argument("required_sample_size: N must be >= 2");
    if (in.epsilon <= 0.0) throw std::invalid_argument("required_sample_size: eps must be > 0");
    SamplingPlan plan;
    plan.variant = variant;
    plan.N = in.N;
    plan.epsilon = in.epsilon;
    plan.R_v = in.R_v;
    plan.R_lambda = in.R_lambda;
    plan.c = (in.c > 0.0) ? in.c : default_banach_c(in.dim);
    if (variant == SamplingPlan::Variant::Linf) {
        plan.R = std::max(in.R_v, in.R_lambda);
        plan.c = 2.0 * std::log(4.0 * static_cast<double>(std::max<std::size_t>(in.dim, 1)));
    } else {
        plan.R = std::max(in.smoothness_D * in.R_v, in.R_lambda);
    }
    if (plan.R <= 0.0) throw std::invalid_argument("required_sample_size: R must be > 0");
    double root = std::sqrt(static_cast<double>(in.N)) * plan.R / in.epsilon;
    double t = plan.c * root * root;
    double m_raw = 1.0 + static_cast<double>(in.N) * (t / (1.0 + t));
    auto m = static_cast<std::size_t>(std::ceil(m_raw - 1e-12));
    plan.m = std::clamp<std::size_t>(m, 1, in.N);
    return plan;
}

/// One seeded without-replacement draw, scaled by N/m, with the achieved
/// errors recomputed. The retry loop mirrors the probabilistic guarantee:
/// each attempt succeeds with probability >= 1/2 under the plan's m.
struct SampleResult {
    ConicCombination comb;   // mu_j = (N/m) lambda_j on the sampled index set
    double value_error = 0.0;   // ||x - x_hat|| under the requested norm
    double weight_error = 0.0;  // |sum mu - 1|
    std::size_t attempts = 0;
    bool ok = false;
};

inline SampleResult sample_without_replacement(const Mat& atoms, const Vec& weights,
                                               const SamplingPlan& plan, const NormSpec& norm,
                                               std::uint64_t seed) {
    const std::size_t N = atoms.cols, D = atoms.rows;
    if (weights.size() != N)
        throw std::invalid_argument("sample_without_replacement: weight count mismatch");
    if (plan.m < 1 || plan.m > N)
        throw std::invalid_argument("sample_without_replacement: plan.m out of range");

    Vec x(D, 0.0);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t r = 0; r < D; ++r) x[r] += weights[j] * atoms(r, j);

    Rng rng(seed);
    const double scale_w = static_cast<double>(N) / static_cast<double>(plan.m);
    SampleResult best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(plan.retry_budget, 1);
         ++attempt) {
        std::vector<std::size_t> J = rng.sample_indices(N, plan.m);
        std::sort(J.begin(), J.end());
        Vec xh(D, 0.0);
        double wsum = 0.0;
        for (std::size_t j : J) {
            double mu = scale_w * weights[j];
            wsum += mu;
            for (std::size_t r = 0; r < D; ++r) xh[r] += mu * atoms(r, j);
        }
        double verr = norm(sub(x, xh));
        double werr = std::abs(wsum - 1.0);
        double score = std::max(verr, werr) / plan.epsilon;
        if (score < best_score) {
            best_score = score;
            best.comb.target_dim = D;
            best.comb.atom_indices.clear();
            best.comb.weights.clear();
            for (std::size_t j : J) {
                if (weights[j] <= 0.0) continue;
                best.comb.atom_indices.push_back(j);
                best.comb.weights.push_back(scale_w * weights[j]);
            }
            best.value_error = verr;
            best.weight_error = werr;
        }
        best.attempts = attempt + 1;
        if (verr <= plan.epsilon && werr <= plan.epsilon) {
            best.ok = true;
            break;
        }
    }
    return best;
}

}  // namespace sfkit
