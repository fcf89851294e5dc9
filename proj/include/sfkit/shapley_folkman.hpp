#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "sfkit/caratheodory.hpp"
#include "sfkit/geometry.hpp"
#include "sfkit/linalg.hpp"

namespace sfkit {

/// n point sets of common ambient dimension with per-block simplex weights;
/// represents x = sum_i sum_j lambda_ij v_ij.
struct BlockFamily {
    std::size_t dim = 0;
    std::vector<PointSet> blocks;
    std::vector<Vec> weights;  // simplex per block

    std::size_t size() const { return blocks.size(); }

    void validate() const {
        if (blocks.empty()) throw std::invalid_argument("BlockFamily: no blocks");
        if (blocks.size() != weights.size())
            throw std::invalid_argument("BlockFamily: weights/blocks mismatch");
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            blocks[i].validate();
            if (blocks[i].dim != dim) throw std::invalid_argument("BlockFamily: dim mismatch");
            if (weights[i].size() != blocks[i].points.size())
                throw std::invalid_argument("BlockFamily: weight count mismatch");
            double s = 0.0;
            for (double w : weights[i]) {
                if (w < 0.0) throw std::invalid_argument("BlockFamily: negative weight");
                s += w;
            }
            if (std::abs(s - 1.0) > 1e-8)
                throw std::invalid_argument("BlockFamily: block weights not on the simplex");
        }
    }

    Vec represented_point() const {
        Vec x(dim, 0.0);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            for (std::size_t j = 0; j < weights[i].size(); ++j)
                axpy(weights[i][j], blocks[i].points[j], x);
        return x;
    }
};

/// Per-block outcome of a decomposition: extremal blocks carry one atom,
/// mixed blocks a genuine convex combination.
struct BlockRep {
    std::vector<std::size_t> atom_indices;
    Vec weights;

    bool extremal() const { return atom_indices.size() == 1; }
};

struct SFDecomposition {
    std::vector<BlockRep> blocks;
    std::vector<std::size_t> mixed_set;  // S: blocks with >= 2 atoms
    Vec x;                               // reconstructed point

    std::size_t atom_of(std::size_t i) const { return blocks[i].atom_indices[0]; }
};

namespace detail {

// merge atoms of a block that coincide within tol, summing their weights
inline void merge_duplicate_atoms(const PointSet& block, const Vec& w,
                                  std::vector<std::size_t>& idx_out, Vec& w_out,
                                  double tol = 1e-12) {
    idx_out.clear();
    w_out.clear();
    for (std::size_t j = 0; j < block.points.size(); ++j) {
        if (w[j] <= 0.0) continue;
        bool merged = false;
        for (std::size_t t = 0; t < idx_out.size(); ++t) {
            const Vec& a = block.points[idx_out[t]];
            const Vec& b = block.points[j];
            bool same = true;
            for (std::size_t r = 0; r < a.size(); ++r)
                if (std::abs(a[r] - b[r]) > tol) { same = false; break; }
            if (same) {
                w_out[t] += w[j];
                merged = true;
                break;
            }
        }
        if (!merged) {
            idx_out.push_back(j);
            w_out.push_back(w[j]);
        }
    }
}

}  // namespace detail

/// Exact Shapley-Folkman decomposition: lifts atoms to (beta v_ij; gamma e_i)
/// and reduces the conic representation to at most d + n coefficients, which
/// forces all but at most d blocks onto a single vertex.
inline SFDecomposition sf_decompose(const BlockFamily& family, double lift_beta = 1.0,
                                    double lift_gamma = 1.0) {
    family.validate();
    const std::size_t n = family.size();
    const std::size_t d = family.dim;

    SFDecomposition out;
    out.blocks.resize(n);

    // pre-filter blocks already sitting on a vertex
    std::vector<std::size_t> cand;
    std::vector<std::vector<std::size_t>> cand_idx;
    std::vector<Vec> cand_w;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> idx;
        Vec w;
        detail::merge_duplicate_atoms(family.blocks[i], family.weights[i], idx, w);
        if (idx.size() == 1 || std::any_of(w.begin(), w.end(),
                                           [](double x) { return std::abs(x - 1.0) <= 1e-12; })) {
            std::size_t best = 0;
            for (std::size_t t = 1; t < w.size(); ++t)
                if (w[t] > w[best]) best = t;
            out.blocks[i].atom_indices = {idx[best]};
            out.blocks[i].weights = {1.0};
        } else {
            cand.push_back(i);
            cand_idx.push_back(std::move(idx));
            cand_w.push_back(std::move(w));
        }
    }

    if (!cand.empty()) {
        const std::size_t nc = cand.size();
        std::size_t total = 0;
        for (const auto& w : cand_w) total += w.size();
        Mat lifted(d + nc, total);
        Vec weights(total);
        std::vector<std::pair<std::size_t, std::size_t>> owner(total);  // (cand slot, atom idx)
        std::size_t col = 0;
        for (std::size_t t = 0; t < nc; ++t) {
            const PointSet& blk = family.blocks[cand[t]];
            for (std::size_t u = 0; u < cand_idx[t].size(); ++u) {
                std::size_t j = cand_idx[t][u];
                for (std::size_t r = 0; r < d; ++r) lifted(r, col) = lift_beta * blk.points[j][r];
                lifted(d + t, col) = lift_gamma;
                weights[col] = cand_w[t][u];
                owner[col] = {t, j};
                ++col;
            }
        }
        ConicCombination red = reduce_conic(lifted, weights);
        std::vector<std::vector<std::size_t>> out_idx(nc);
        std::vector<Vec> out_w(nc);
        for (std::size_t t = 0; t < red.support(); ++t) {
            auto [slot, j] = owner[red.atom_indices[t]];
            out_idx[slot].push_back(j);
            out_w[slot].push_back(red.weights[t]);
        }
        for (std::size_t t = 0; t < nc; ++t) {
            if (out_idx[t].empty())
                throw std::runtime_error("sf_decompose: block lost all weight (numerical)");
            double s = 0.0;
            for (double w : out_w[t]) s += w;
            for (double& w : out_w[t]) w /= s;  // e_i row pins s to 1; re-pin exactly
            out.blocks[cand[t]].atom_indices = std::move(out_idx[t]);
            out.blocks[cand[t]].weights = std::move(out_w[t]);
        }
    }

    out.x.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < out.blocks[i].atom_indices.size(); ++t)
            axpy(out.blocks[i].weights[t], family.blocks[i].points[out.blocks[i].atom_indices[t]],
                 out.x);
    for (std::size_t i = 0; i < n; ++i)
        if (!out.blocks[i].extremal()) out.mixed_set.push_back(i);
    if (out.mixed_set.size() > d)
        throw std::runtime_error("sf_decompose: |S| exceeded d (numerical breakdown)");
    return out;
}

/// Approximate Shapley-Folkman: sampled without-replacement coefficients on
/// the mixed blocks of the scaled lift.
struct ApproxSFResult {
    Vec x_hat;
    std::map<std::size_t, double> mu;            // block -> scale mu_i (mixed blocks)
    std::vector<std::size_t> S;                  // still genuinely mixed after sampling
    std::vector<std::size_t> T;                  // single (or no) sampled atom
    std::size_t q = 0;                           // |S| + |T|
    double err_value = 0.0;                      // ||x - x_hat|| under `norm`
    double err_weight_total = 0.0;               // |sum mu - q|
    double err_weight_l2 = 0.0;                  // l2 norm of (mu_i - 1)
    double bound_value = 0.0;                    // q eps / beta
    double bound_weight_total = 0.0;             // q eps
    double bound_weight_l2 = 0.0;                // q eps / gamma
    double epsilon = 0.0, beta = 0.0, gamma = 0.0;
    std::size_t sampled_m = 0;  // coefficients drawn per attempt
    std::size_t attempts = 0;
    bool bound_violated = false;
    std::vector<BlockRep> blocks;                // sampled per-block representation
    SFDecomposition exact;                       // the exact decomposition sampled from
};

inline ApproxSFResult approx_sf_decompose(const BlockFamily& family, double epsilon, double beta,
                                          double gamma, const NormSpec& norm, std::uint64_t seed,
                                          double c_const = 0.0, std::size_t retry_budget = 64) {
    if (epsilon <= 0.0) throw std::invalid_argument("approx_sf_decompose: eps must be > 0");
    family.validate();
    const std::size_t d = family.dim;

    // exact reduction first (scales fixed below once R_v, R_lambda are known)
    SFDecomposition exact = sf_decompose(family);
    const std::size_t q = exact.mixed_set.size();
    Vec x = family.represented_point();

    ApproxSFResult res;
    res.exact = exact;
    res.q = q;
    res.epsilon = epsilon;
    if (q == 0) {  // nothing to sample
        res.x_hat = x;
        res.blocks = exact.blocks;
        res.beta = beta > 0 ? beta : 1.0;
        res.gamma = gamma > 0 ? gamma : 1.0;
        res.bound_value = res.bound_weight_total = res.bound_weight_l2 = 0.0;
        return res;
    }

    // mixed coefficient list
    struct Coeff {
        std::size_t block, atom;
        double lambda;
    };
    std::vector<Coeff> coeffs;
    for (std::size_t i : exact.mixed_set)
        for (std::size_t t = 0; t < exact.blocks[i].atom_indices.size(); ++t)
            coeffs.push_back({i, exact.blocks[i].atom_indices[t], exact.blocks[i].weights[t]});
    const std::size_t NI = coeffs.size();

    double Rv = 0.0, Rl = 0.0;
    for (const Coeff& c : coeffs) {
        Rv = std::max(Rv, norm(scale(family.blocks[c.block].points[c.atom], c.lambda)));
        Rl = std::max(Rl, std::abs(c.lambda));
    }
    if (gamma <= 0.0) gamma = static_cast<double>(q) / std::sqrt(static_cast<double>(d + q));
    if (beta <= 0.0) beta = (Rv > 0.0) ? gamma * Rl / Rv : gamma;
    res.beta = beta;
    res.gamma = gamma;
    res.bound_value = static_cast<double>(q) * epsilon / beta;
    res.bound_weight_total = static_cast<double>(q) * epsilon;
    res.bound_weight_l2 = static_cast<double>(q) * epsilon / gamma;

    // fixed contribution of the extremal blocks
    Vec x_fixed(d, 0.0);
    for (std::size_t i = 0; i < family.size(); ++i)
        if (exact.blocks[i].extremal())
            axpy(1.0, family.blocks[i].points[exact.atom_of(i)], x_fixed);

    SamplingPlan plan;
    if (NI >= 2) {
        PlanInputs in;
        in.N = NI;
        in.dim = d + q;
        in.epsilon = epsilon;
        in.R_v = beta * Rv / static_cast<double>(q);
        in.R_lambda = gamma * Rl / static_cast<double>(q);
        in.smoothness_D = norm.smoothness_D();
        in.c = c_const;
        plan = required_sample_size(in, SamplingPlan::Variant::Banach);
    } else {
        plan.N = NI;
        plan.m = NI;
    }
    plan.retry_budget = retry_budget;
    res.sampled_m = plan.m;

    Rng rng(seed);
    const double scale_w = static_cast<double>(NI) / static_cast<double>(plan.m);
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(retry_budget, 1); ++attempt) {
        std::vector<std::size_t> J = rng.sample_indices(NI, plan.m);
        std::sort(J.begin(), J.end());
        std::map<std::size_t, std::pair<std::vector<std::size_t>, Vec>> picked;
        for (std::size_t j : J) {
            const Coeff& c = coeffs[j];
            picked[c.block].first.push_back(c.atom);
            picked[c.block].second.push_back(scale_w * c.lambda);
        }
        Vec xh = x_fixed;
        std::map<std::size_t, double> mu;
        for (std::size_t i : exact.mixed_set) mu[i] = 0.0;
        for (auto& [i, pr] : picked)
            for (std::size_t t = 0; t < pr.first.size(); ++t) {
                mu[i] += pr.second[t];
                axpy(pr.second[t], family.blocks[i].points[pr.first[t]], xh);
            }
        double e1 = norm(sub(x, xh));
        double musum = 0.0, l2 = 0.0;
        for (auto& [i, m] : mu) {
            musum += m;
            l2 += (m - 1.0) * (m - 1.0);
        }
        double e2 = std::abs(musum - static_cast<double>(q));
        double e3 = std::sqrt(l2);
        double score = std::max({e1 / std::max(res.bound_value, 1e-300),
                                 e2 / std::max(res.bound_weight_total, 1e-300),
                                 e3 / std::max(res.bound_weight_l2, 1e-300)});
        if (score < best_score) {
            best_score = score;
            res.x_hat = xh;
            res.mu = mu;
            res.err_value = e1;
            res.err_weight_total = e2;
            res.err_weight_l2 = e3;
            res.S.clear();
            res.T.clear();
            res.blocks = exact.blocks;
            for (std::size_t i : exact.mixed_set) {
                auto it = picked.find(i);
                std::size_t got = (it == picked.end()) ? 0 : it->second.first.size();
                if (got >= 2) {
                    res.S.push_back(i);
                    res.blocks[i].atom_indices = it->second.first;
                    res.blocks[i].weights = it->second.second;
                } else {
                    res.T.push_back(i);
                    if (got == 1) {
                        res.blocks[i].atom_indices = it->second.first;
                        res.blocks[i].weights = it->second.second;
                    } else {
                        res.blocks[i].atom_indices.clear();
                        res.blocks[i].weights.clear();
                    }
                }
            }
        }
        res.attempts = attempt + 1;
        if (best_score <= 1.0) break;
    }
    res.bound_violated = best_score > 1.0;
    return res;
}

/// Plain-formula evaluation of the approximate-SF corollary.
struct CorollaryBound {
    std::size_t m = 0;        // sampled coefficient count
    std::size_t s_bound = 0;  // bound on |S|, clamped to [0, d]
    double x_error_bound = 0.0;
};

inline CorollaryBound corollary_error_bound(double R_v, double R_lambda, double M_V,
                                            std::size_t d, double epsilon, double c,
                                            double smoothness_D = 1.0) {
    if (R_v < 0 || R_lambda <= 0 || M_V < 0 || epsilon <= 0 || c <= 0)
        throw std::invalid_argument("corollary_error_bound: positive inputs required");
    double t = c * (smoothness_D * R_lambda / epsilon) * (smoothness_D * R_lambda / epsilon);
    double m_raw = 1.0 + 2.0 * static_cast<double>(d) * t / (1.0 + t);
    CorollaryBound out;
    out.m = static_cast<std::size_t>(std::ceil(m_raw - 1e-12));
    double s = static_cast<double>(out.m) - static_cast<double>(d);
    out.s_bound = static_cast<std::size_t>(std::clamp<double>(s, 0.0, static_cast<double>(d)));
    out.x_error_bound =
        std::sqrt(2.0 * static_cast<double>(d)) * (R_v / R_lambda + M_V) * epsilon;
    return out;
}

}  // namespace sfkit
