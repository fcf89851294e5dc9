#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sfkit/caratheodory.hpp"
#include "sfkit/envelope.hpp"
#include "sfkit/linalg.hpp"
#include "sfkit/shapley_folkman.hpp"
#include "sfkit/simplex.hpp"

namespace sfkit {

/// Instance of the separable problem: n sampled blocks, coupling rows Ax <= b.
/// C_aux (optional, m x p) switches the feasible set to an extended
/// formulation {x : A x + C_aux u <= b for some free u}; supplying a compact
/// extended representation can shrink the active-row count every bound uses.
struct SeparableProblem {
    std::vector<SampledFunction> blocks;
    Mat A;  // m x d, d = sum of block dims
    Vec b;
    Mat C_aux;  // empty unless an extended formulation is supplied

    std::size_t num_blocks() const { return blocks.size(); }
    std::size_t num_rows() const { return b.size(); }
    std::size_t num_aux() const { return C_aux.cols; }

    std::size_t total_dim() const {
        std::size_t d = 0;
        for (const auto& f : blocks) d += f.dim;
        return d;
    }

    std::size_t block_offset(std::size_t i) const {
        std::size_t off = 0;
        for (std::size_t t = 0; t < i; ++t) off += blocks[t].dim;
        return off;
    }

    void validate() const {
        if (blocks.empty()) throw std::invalid_argument("SeparableProblem: no blocks");
        for (const auto& f : blocks) f.validate();
        if (A.rows != b.size()) throw std::invalid_argument("SeparableProblem: A/b mismatch");
        if (A.cols != total_dim())
            throw std::invalid_argument("SeparableProblem: A columns != sum of block dims");
        if (C_aux.cols > 0 && C_aux.rows != num_rows())
            throw std::invalid_argument("SeparableProblem: C_aux rows != rows of A");
    }

    /// True when some free aux point u satisfies A x + C_aux u <= rhs.
    bool aux_feasible(const Vec& x, const Vec& rhs, Vec* u_out = nullptr) const {
        Vec Ax = A.mul(x);
        if (num_aux() == 0) {
            for (std::size_t r = 0; r < num_rows(); ++r)
                if (Ax[r] > rhs[r] + 1e-9 * (1.0 + std::abs(rhs[r]))) return false;
            if (u_out) u_out->clear();
            return true;
        }
        Vec c(num_aux(), 0.0);
        Vec slackened(num_rows());
        for (std::size_t r = 0; r < num_rows(); ++r)
            slackened[r] = rhs[r] - Ax[r] + 1e-9 * (1.0 + std::abs(rhs[r]));
        LpSolution s = solve_lp_free_ub(c, C_aux, slackened);
        if (s.optimal() && u_out) *u_out = s.x;
        return s.optimal();
    }

    /// (A_i g)_r for grid atom g of block i.
    double coupling_coeff(std::size_t row, std::size_t i, const Vec& g) const {
        const std::size_t off = block_offset(i);
        double s = 0.0;
        for (std::size_t t = 0; t < g.size(); ++t) s += A(row, off + t) * g[t];
        return s;
    }
};

struct RelaxationSolution {
    std::vector<Vec> theta;          // per-block simplex weights over grid atoms
    Vec x_star;                      // d-vector, x_i = sum_j theta_ij g_ij
    Vec aux_u;                       // extended-formulation aux point (may be empty)
    double value = 0.0;              // CoP value
    Vec dual_lambda;                 // m nonnegative multipliers
    Vec slack;                       // w = b - A x* - C_aux u >= 0
    std::vector<std::size_t> active_set;
    std::size_t lp_iterations = 0;

    std::size_t active_count() const { return active_set.size(); }

    std::vector<std::size_t> supported(std::size_t i, double tol = 1e-9) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < theta[i].size(); ++j)
            if (theta[i][j] > tol) out.push_back(j);
        return out;
    }

    std::vector<std::size_t> mixed_blocks(double tol = 1e-9) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < theta.size(); ++i)
            if (supported(i, tol).size() >= 2) out.push_back(i);
        return out;
    }
};

/// Solves the grid-atom relaxation: min sum theta_ij f_i(g_ij) over per-block
/// simplex weights with sum_i A_i (sum_j theta_ij g_ij) <= b. Equivalent to
/// the biconjugate relaxation on grid blocks; the vertex solution carries at
/// most m~ + n nonzero weights and exact duals.
inline RelaxationSolution solve_relaxation(const SeparableProblem& p) {
    p.validate();
    const std::size_t n = p.num_blocks();
    const std::size_t m = p.num_rows();
    std::vector<std::size_t> sizes(n), offs(n);
    std::size_t T = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sizes[i] = p.blocks[i].size();
        offs[i] = T;
        T += sizes[i];
    }

    const std::size_t aux = p.num_aux();
    LinearProgram lp;
    lp.c.assign(T + 2 * aux, 0.0);
    lp.Aeq = Mat(n, T + 2 * aux);
    lp.beq = Vec(n, 1.0);
    lp.Aub = Mat(m, T + 2 * aux);
    lp.bub = p.b;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < sizes[i]; ++j) {
            lp.c[offs[i] + j] = p.blocks[i].values[j];
            lp.Aeq(i, offs[i] + j) = 1.0;
            for (std::size_t r = 0; r < m; ++r)
                lp.Aub(r, offs[i] + j) = p.coupling_coeff(r, i, p.blocks[i].grid[j]);
        }
    }
    for (std::size_t a = 0; a < aux; ++a)  // free aux variables, split
        for (std::size_t r = 0; r < m; ++r) {
            lp.Aub(r, T + 2 * a) = p.C_aux(r, a);
            lp.Aub(r, T + 2 * a + 1) = -p.C_aux(r, a);
        }
    LpSolution s = solve_lp(lp);
    if (s.status == LpSolution::Status::Infeasible)
        throw std::runtime_error("solve_relaxation: infeasible instance");
    if (s.status == LpSolution::Status::Unbounded)
        throw std::runtime_error("solve_relaxation: unbounded (should not happen on finite grids)");

    RelaxationSolution out;
    out.value = s.value;
    out.lp_iterations = s.iterations;
    out.dual_lambda = s.dual_ub;
    out.theta.resize(n);
    out.x_star.assign(p.total_dim(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.theta[i].assign(sizes[i], 0.0);
        for (std::size_t j = 0; j < sizes[i]; ++j) {
            double w = s.x[offs[i] + j];
            if (w < 0.0 && w > -1e-12) w = 0.0;
            out.theta[i][j] = w;
            const std::size_t doff = p.block_offset(i);
            for (std::size_t t = 0; t < p.blocks[i].dim; ++t)
                out.x_star[doff + t] += w * p.blocks[i].grid[j][t];
        }
    }
    out.aux_u.resize(aux);
    for (std::size_t a = 0; a < aux; ++a) out.aux_u[a] = s.x[T + 2 * a] - s.x[T + 2 * a + 1];
    Vec load = p.A.mul(out.x_star);
    for (std::size_t a = 0; a < aux; ++a)
        for (std::size_t r = 0; r < m; ++r) load[r] += p.C_aux(r, a) * out.aux_u[a];
    out.slack.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
        out.slack[r] = p.b[r] - load[r];
        if (out.slack[r] <= 1e-7 * (1.0 + std::abs(p.b[r]))) out.active_set.push_back(r);
    }
    return out;
}

/// Lagrange dual: Psi(lambda) = sum_i min_j [f_i(g_ij) + lambda.(A_i g_ij)] - lambda.b.
inline double dual_value(const SeparableProblem& p, const Vec& lambda) {
    p.validate();
    if (lambda.size() != p.num_rows()) throw std::invalid_argument("dual_value: lambda size");
    for (double l : lambda)
        if (l < 0.0) throw std::invalid_argument("dual_value: lambda must be nonnegative");
    // free aux variables force C_aux^T lambda = 0; otherwise the inner inf is -inf
    for (std::size_t a = 0; a < p.num_aux(); ++a) {
        double s = 0.0;
        for (std::size_t r = 0; r < p.num_rows(); ++r) s += p.C_aux(r, a) * lambda[r];
        if (std::abs(s) > 1e-7 * (1.0 + norm_inf(lambda)))
            return -std::numeric_limits<double>::infinity();
    }
    double total = -dot(lambda, p.b);
    for (std::size_t i = 0; i < p.num_blocks(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < p.blocks[i].size(); ++j) {
            double v = p.blocks[i].values[j];
            for (std::size_t r = 0; r < p.num_rows(); ++r)
                v += lambda[r] * p.coupling_coeff(r, i, p.blocks[i].grid[j]);
            best = std::min(best, v);
        }
        total += best;
    }
    return total;
}

/// Rounding of a relaxation vertex to one grid atom per block.
struct PurifyResult {
    std::vector<std::size_t> atom;  // per-block chosen grid index
    Vec x_hat;
    double upper = 0.0;
    bool feasible = false;
    Vec violation;  // max(0, A x_hat - b)
};

/// Dual-greedy deterministic rounding: mixed blocks take the supported atom
/// minimizing f_i(g) + lambda.(A_i g), ties to the lowest index. Pass a seed
/// to use the randomized variant instead (atom drawn with probability
/// theta_ij among supported atoms).
inline PurifyResult purify(const RelaxationSolution& sol, const SeparableProblem& p,
                           const std::uint64_t* seed = nullptr) {
    const std::size_t n = p.num_blocks();
    PurifyResult out;
    out.atom.resize(n);
    Rng rng(seed ? *seed : 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> supp = sol.supported(i);
        if (supp.empty()) throw std::runtime_error("purify: block without support");
        std::size_t pick = supp[0];
        if (supp.size() > 1) {
            if (seed) {
                double u = rng.unit();
                double mass = 0.0;
                for (std::size_t j : supp) mass += sol.theta[i][j];
                double acc = 0.0;
                for (std::size_t j : supp) {
                    acc += sol.theta[i][j] / mass;
                    if (u <= acc) { pick = j; break; }
                    pick = j;
                }
            } else {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t j : supp) {
                    double score = p.blocks[i].values[j];
                    for (std::size_t r = 0; r < p.num_rows(); ++r)
                        score += sol.dual_lambda[r] * p.coupling_coeff(r, i, p.blocks[i].grid[j]);
                    if (score < best - 1e-12) {
                        best = score;
                        pick = j;
                    }
                }
            }
        }
        out.atom[i] = pick;
    }
    out.x_hat.assign(p.total_dim(), 0.0);
    out.upper = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.upper += p.blocks[i].values[out.atom[i]];
        const std::size_t doff = p.block_offset(i);
        for (std::size_t t = 0; t < p.blocks[i].dim; ++t)
            out.x_hat[doff + t] = p.blocks[i].grid[out.atom[i]][t];
    }
    if (p.num_aux() > 0) {
        out.violation.assign(p.num_rows(), 0.0);
        out.feasible = p.aux_feasible(out.x_hat, p.b);
        if (!out.feasible) {
            // violation reported against the relaxation's own aux point
            Vec load = p.A.mul(out.x_hat);
            for (std::size_t a = 0; a < p.num_aux(); ++a)
                for (std::size_t r = 0; r < p.num_rows(); ++r)
                    load[r] += p.C_aux(r, a) * sol.aux_u[a];
            for (std::size_t r = 0; r < p.num_rows(); ++r)
                out.violation[r] = std::max(0.0, load[r] - p.b[r]);
        }
        return out;
    }
    Vec Ax = p.A.mul(out.x_hat);
    out.violation.assign(p.num_rows(), 0.0);
    out.feasible = true;
    for (std::size_t r = 0; r < p.num_rows(); ++r) {
        double v = Ax[r] - p.b[r];
        if (v > 1e-9 * (1.0 + std::abs(p.b[r]))) {
            out.violation[r] = v;
            out.feasible = false;
        }
    }
    return out;
}

/// Sum of the (m~+1) largest block nonconvexities, m~ = active row count
/// (pass use_active = false for the conservative full-m variant).
inline double gap_bound_basic(const SeparableProblem& p, const RelaxationSolution& sol,
                              bool use_active = true) {
    const std::size_t m_eff = use_active ? sol.active_count() : p.num_rows();
    Vec rhos;
    for (const auto& f : p.blocks) rhos.push_back(rho(f));
    std::sort(rhos.begin(), rhos.end(), std::greater<double>());
    const std::size_t take = std::min(rhos.size(), m_eff + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < take; ++i) s += rhos[i];
    return s;
}

struct RefinedBound {
    double value = 0.0;
    bool rho_k_exact = true;  // false if a block fell back to rho (budget exceeded)
    std::size_t budget = 0;
};

/// Exact maximization of sum_i rho_{beta_i}(f_i) over beta_i in [1, m~+2],
/// sum beta_i = budget, by dynamic programming. Default budget n + m~ + 1.
inline RefinedBound gap_bound_refined(const SeparableProblem& p, const RelaxationSolution& sol,
                                      std::size_t budget = 0) {
    const std::size_t n = p.num_blocks();
    const std::size_t mt = sol.active_count();
    const std::size_t beta_max = mt + 2;
    if (budget == 0) budget = n + mt + 1;
    if (budget < n || budget > n * beta_max)
        throw std::invalid_argument("gap_bound_refined: budget out of range");

    RefinedBound out;
    out.budget = budget;
    std::vector<Vec> prof(n);  // prof[i][b-1] = rho_b(f_i)
    for (std::size_t i = 0; i < n; ++i) {
        prof[i].assign(beta_max, 0.0);
        for (std::size_t b = 2; b <= beta_max; ++b) {
            try {
                prof[i][b - 1] = rho_k(p.blocks[i], b);
            } catch (const std::runtime_error&) {
                prof[i][b - 1] = rho(p.blocks[i]);  // valid upper bound
                out.rho_k_exact = false;
            }
        }
    }
    const double neg = -std::numeric_limits<double>::infinity();
    Vec dp(budget + 1, neg);
    dp[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec next(budget + 1, neg);
        for (std::size_t r = 0; r <= budget; ++r) {
            if (dp[r] == neg) continue;
            for (std::size_t bta = 1; bta <= beta_max && r + bta <= budget; ++bta) {
                double v = dp[r] + prof[i][bta - 1];
                if (v > next[r + bta]) next[r + bta] = v;
            }
        }
        dp = std::move(next);
    }
    out.value = (dp[budget] == neg) ? 0.0 : dp[budget];
    return out;
}

enum class PrimalDomain {
    Atoms,   // block variables range over the grid atoms themselves
    Interp,  // 1-D blocks range over conv(grid) with piecewise-linear objectives
};

/// Optimal value of the perturbed primal h_P(u) (exhaustive) or of the
/// perturbed relaxation h_CoP(u) (LP). +inf when infeasible.
inline double perturbed_value(const SeparableProblem& p, const Vec& u, bool relaxed,
                              PrimalDomain domain = PrimalDomain::Interp,
                              double enumeration_budget = 1e6) {
    p.validate();
    if (u.size() != p.num_rows()) throw std::invalid_argument("perturbed_value: u size");
    Vec bu = add(p.b, u);
    const std::size_t n = p.num_blocks();
    if (relaxed) {
        SeparableProblem q = p;
        q.b = bu;
        try {
            return solve_relaxation(q).value;
        } catch (const std::runtime_error&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    if (domain == PrimalDomain::Atoms) {
        double combos = 1.0;
        for (const auto& f : p.blocks) combos *= static_cast<double>(f.size());
        if (combos > enumeration_budget)
            throw std::runtime_error("perturbed_value: enumeration budget exceeded");
        std::vector<std::size_t> sel(n, 0);
        double best = std::numeric_limits<double>::infinity();
        for (;;) {
            double val = 0.0;
            Vec x(p.total_dim(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                val += p.blocks[i].values[sel[i]];
                const std::size_t doff = p.block_offset(i);
                for (std::size_t t = 0; t < p.blocks[i].dim; ++t)
                    x[doff + t] = p.blocks[i].grid[sel[i]][t];
            }
            if (val < best && p.aux_feasible(x, bu)) best = val;
            std::size_t i = 0;
            for (; i < n; ++i) {
                if (++sel[i] < p.blocks[i].size()) break;
                sel[i] = 0;
            }
            if (i == n) break;
        }
        return best;
    }
    // Interp: exhaustive over per-block segments, exact LP over the fractions
    for (const auto& f : p.blocks)
        if (f.dim != 1)
            throw std::invalid_argument("perturbed_value: interp domain requires 1-D blocks");
    double combos = 1.0;
    for (const auto& f : p.blocks) combos *= static_cast<double>(std::max<std::size_t>(f.size() - 1, 1));
    if (combos > enumeration_budget)
        throw std::runtime_error("perturbed_value: enumeration budget exceeded");
    const std::size_t m = p.num_rows();
    const std::size_t aux = p.num_aux();
    std::vector<std::size_t> seg(n, 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        // block i moves on [g_lo, g_hi]: x_i = g_lo + t_i (g_hi - g_lo), t in [0,1]
        LinearProgram lp;
        lp.c.assign(n + 2 * aux, 0.0);
        lp.Aub = Mat(m + n, n + 2 * aux);
        lp.bub = Vec(m + n);
        double base = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& f = p.blocks[i];
            std::size_t lo = (f.size() == 1) ? 0 : seg[i];
            std::size_t hi = (f.size() == 1) ? 0 : seg[i] + 1;
            base += f.values[lo];
            lp.c[i] = f.values[hi] - f.values[lo];
            for (std::size_t r = 0; r < m; ++r) {
                double alo = p.coupling_coeff(r, i, f.grid[lo]);
                double ahi = p.coupling_coeff(r, i, f.grid[hi]);
                lp.Aub(r, i) = ahi - alo;
                lp.bub[r] -= alo;  // accumulated below
            }
            lp.Aub(m + i, i) = 1.0;
            lp.bub[m + i] = 1.0;
        }
        for (std::size_t a = 0; a < aux; ++a)
            for (std::size_t r = 0; r < m; ++r) {
                lp.Aub(r, n + 2 * a) = p.C_aux(r, a);
                lp.Aub(r, n + 2 * a + 1) = -p.C_aux(r, a);
            }
        for (std::size_t r = 0; r < m; ++r) lp.bub[r] += bu[r];
        LpSolution s = solve_lp(lp);
        if (s.optimal()) best = std::min(best, base + s.value);
        std::size_t i = 0;
        for (; i < n; ++i) {
            if (p.blocks[i].size() <= 2) { seg[i] = 0; continue; }
            if (++seg[i] < p.blocks[i].size() - 1) break;
            seg[i] = 0;
        }
        if (i == n) break;
    }
    return best;
}

/// Objective-gap and constraint-shift formulas for separable nonlinear
/// constraints: (m+1) rho_f_bar and the constant shift (m+1) rho_g_bar 1.
struct NonlinearGapBound {
    double objective_gap = 0.0;
    Vec constraint_shift;
};

inline NonlinearGapBound gap_bound_nonlinear(double rho_f_bar, double rho_g_bar, std::size_t m) {
    if (rho_f_bar < 0.0 || rho_g_bar < 0.0)
        throw std::invalid_argument("gap_bound_nonlinear: inputs must be nonnegative");
    NonlinearGapBound out;
    out.objective_gap = static_cast<double>(m + 1) * rho_f_bar;
    out.constraint_shift.assign(m, static_cast<double>(m + 1) * rho_g_bar);
    return out;
}

/// Full duality-gap certificate.
struct GapCertificate {
    double lower = 0.0;  // CoP value
    double upper = 0.0;  // objective at the purified point
    bool upper_feasible = false;
    std::vector<std::size_t> S;  // mixed blocks of the relaxation vertex
    std::size_t active_rows = 0;
    double bound_basic = 0.0;         // active-m variant
    double bound_basic_full_m = 0.0;  // conservative full-m variant
    double bound_refined = 0.0;
    bool refined_exact = true;
    // approximate-representation certificate
    double bound_approx = 0.0;  // gap(s) = |u1| + rho budget at s
    double u1 = 0.0;
    Vec u2;  // on the active rows, in row order of active_set
    double u_bound = 0.0;  // sqrt(2 m~)(R_v + R_lambda M_V) gamma
    double gamma = 0.0;
    double R_v = 0.0, R_lambda = 0.0, M_V = 0.0;
    bool M_V_exact = true;
    std::size_t s_budget = 0;  // rho-budget the approx bound was evaluated at
    std::size_t s_used = 0;    // support of the sampled representation
    bool bound_violated = false;
    std::size_t attempts = 0;
};

namespace detail {

inline double spectral_norm(const Mat& M) {
    if (M.cols == 0 || M.rows == 0) return 0.0;
    Vec v(M.cols, 1.0 / std::sqrt(static_cast<double>(M.cols)));
    double sigma = 0.0;
    for (int it = 0; it < 60; ++it) {
        Vec w = M.mul(v);
        Vec z(M.cols, 0.0);
        for (std::size_t j = 0; j < M.cols; ++j)
            for (std::size_t r = 0; r < M.rows; ++r) z[j] += M(r, j) * w[r];
        double nz = norm2(z);
        if (nz <= 0.0) return 0.0;
        for (double& t : z) t /= nz;
        v = z;
        sigma = norm2(M.mul(v));
    }
    return sigma;
}

}  // namespace detail

/// Approximate-representation certificate: samples the mixed coefficients of
/// the epigraph decomposition, renormalizes per block, and reports the
/// perturbation u together with gap(s) = |u1| + the rho budget at s.
inline GapCertificate gap_bound_approx(const SeparableProblem& p, const RelaxationSolution& sol,
                                       double gamma, std::uint64_t seed, double c_const = 0.0,
                                       std::size_t retry_budget = 64) {
    if (gamma <= 0.0) throw std::invalid_argument("gap_bound_approx: gamma must be > 0");
    p.validate();
    const std::size_t n = p.num_blocks();
    const std::size_t mt = sol.active_count();
    const std::size_t d_epi = mt + 1;

    GapCertificate cert;
    cert.lower = sol.value;
    cert.gamma = gamma;
    cert.active_rows = mt;
    cert.S = sol.mixed_blocks();
    cert.bound_basic = gap_bound_basic(p, sol, true);
    cert.bound_basic_full_m = gap_bound_basic(p, sol, false);
    RefinedBound rb = gap_bound_refined(p, sol);
    cert.bound_refined = rb.value;
    cert.refined_exact = rb.rho_k_exact;
    PurifyResult pur = purify(sol, p);
    cert.upper = pur.upper;
    cert.upper_feasible = pur.feasible;

    // epigraph family over the supported atoms of each block
    BlockFamily fam;
    fam.dim = d_epi;
    fam.blocks.resize(n);
    fam.weights.resize(n);
    std::vector<std::vector<std::size_t>> atom_of(n);  // family atom -> grid atom
    for (std::size_t i = 0; i < n; ++i) {
        fam.blocks[i].dim = d_epi;
        fam.blocks[i].label = "F" + std::to_string(i);
        std::vector<std::size_t> supp = sol.supported(i);
        double mass = 0.0;
        for (std::size_t j : supp) mass += sol.theta[i][j];
        for (std::size_t j : supp) {
            Vec z(d_epi);
            z[0] = p.blocks[i].values[j];
            for (std::size_t r = 0; r < mt; ++r)
                z[1 + r] = p.coupling_coeff(sol.active_set[r], i, p.blocks[i].grid[j]);
            fam.blocks[i].points.push_back(std::move(z));
            fam.weights[i].push_back(sol.theta[i][j] / mass);
            atom_of[i].push_back(j);
        }
    }
    Vec z_star = fam.represented_point();

    // stable radii over the mixed-block coefficients
    for (std::size_t i : cert.S)
        for (std::size_t t = 0; t < fam.weights[i].size(); ++t) {
            double lam = fam.weights[i][t];
            cert.R_v = std::max(cert.R_v, lam * norm2(fam.blocks[i].points[t]));
            cert.R_lambda = std::max(cert.R_lambda, lam);
        }

    // M_V over supported atoms: exact when the choice product is small,
    // otherwise the Cauchy-Schwarz upper bound
    {
        double product = 1.0;
        for (std::size_t i = 0; i < n; ++i) product *= static_cast<double>(fam.blocks[i].points.size());
        if (product <= 4096.0) {
            std::vector<std::size_t> pick(n, 0);
            for (;;) {
                Mat M(d_epi, n);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t r = 0; r < d_epi; ++r)
                        M(r, i) = fam.blocks[i].points[pick[i]][r];
                cert.M_V = std::max(cert.M_V, detail::spectral_norm(M));
                std::size_t i = 0;
                for (; i < n; ++i) {
                    if (++pick[i] < fam.blocks[i].points.size()) break;
                    pick[i] = 0;
                }
                if (i == n) break;
            }
            cert.M_V_exact = true;
        } else {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double best = 0.0;
                for (const Vec& v : fam.blocks[i].points) best = std::max(best, dot(v, v));
                s += best;
            }
            cert.M_V = std::sqrt(s);
            cert.M_V_exact = false;
        }
    }

    cert.u_bound = std::sqrt(2.0 * static_cast<double>(mt)) *
                   (cert.R_v + cert.R_lambda * cert.M_V) * gamma;

    const double c_eff = (c_const > 0.0)
                             ? c_const
                             : default_banach_c(d_epi + cert.S.size());
    const double s_formula =
        static_cast<double>(n) + 1.0 +
        2.0 * static_cast<double>(mt) * c_eff / (gamma * gamma + c_eff);
    const double eps_samp = std::max(gamma * cert.R_lambda, 1e-14);

    NormSpec l2 = NormSpec::l2();
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(retry_budget, 1); ++attempt) {
        ApproxSFResult asf = approx_sf_decompose(fam, eps_samp, 0.0, 0.0, l2,
                                                 seed + 0x9e37u * attempt, c_eff,
                                                 /*retry_budget=*/1);
        // normalize per block back onto the simplex; empty blocks fall back to
        // their heaviest supported atom
        Vec rep(d_epi, 0.0);
        std::size_t s_used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const BlockRep& br = asf.blocks[i];
            if (br.atom_indices.empty()) {
                std::size_t heavy = 0;
                for (std::size_t t = 1; t < fam.weights[i].size(); ++t)
                    if (fam.weights[i][t] > fam.weights[i][heavy]) heavy = t;
                axpy(1.0, fam.blocks[i].points[heavy], rep);
                s_used += 1;
                continue;
            }
            double mass = 0.0;
            for (double w : br.weights) mass += w;
            for (std::size_t t = 0; t < br.atom_indices.size(); ++t)
                axpy(br.weights[t] / mass, fam.blocks[i].points[br.atom_indices[t]], rep);
            s_used += br.atom_indices.size();
        }
        Vec u = sub(rep, z_star);
        double u1 = u[0];
        Vec u2(u.begin() + 1, u.end());
        double score = std::max(std::abs(u1), norm2(u2)) / std::max(cert.u_bound, 1e-300);
        if (score < best_score) {
            best_score = score;
            cert.u1 = u1;
            cert.u2 = u2;
            cert.s_used = s_used;
        }
        cert.attempts = attempt + 1;
        if (best_score <= 1.0 + 1e-9) break;
    }
    cert.bound_violated = best_score > 1.0 + 1e-9;

    std::size_t s_eff = static_cast<std::size_t>(std::ceil(s_formula - 1e-12));
    s_eff = std::max({s_eff, cert.s_used, n});
    s_eff = std::min(s_eff, n + mt + 1);
    cert.s_budget = s_eff;
    RefinedBound at_s = gap_bound_refined(p, sol, s_eff);
    cert.bound_approx = std::abs(cert.u1) + at_s.value;
    if (!at_s.rho_k_exact) cert.refined_exact = false;
    return cert;
}

}  // namespace sfkit
