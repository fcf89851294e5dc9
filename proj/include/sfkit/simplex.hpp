#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sfkit/linalg.hpp"

namespace sfkit {

/// min c.x  s.t.  Aeq x = beq,  Aub x <= bub,  x >= 0.
struct LinearProgram {
    Vec c;
    Mat Aeq;
    Vec beq;
    Mat Aub;
    Vec bub;

    std::size_t num_vars() const { return c.size(); }
};

struct LpSolution {
    enum class Status { Optimal, Infeasible, Unbounded };
    Status status = Status::Infeasible;
    double value = 0.0;
    Vec x;
    Vec dual_eq;   // standard duals y of the equality rows (value = y.b at optimum)
    Vec dual_ub;   // multipliers lambda >= 0 for the <= rows (Lagrangian convention)
    std::vector<std::size_t> basis;
    std::size_t iterations = 0;

    bool optimal() const { return status == Status::Optimal; }
};

/// Dense two-phase tableau simplex with Bland's rule (deterministic,
/// anti-cycling). Artificials are introduced on every row; duals are read
/// from the final reduced-cost row under the artificial columns.
class SimplexSolver {
  public:
    explicit SimplexSolver(double tol = 1e-9) : tol_(tol) {}

    LpSolution solve(const LinearProgram& lp) const {
        const std::size_t n = lp.num_vars();
        const std::size_t p = lp.Aeq.rows;
        const std::size_t q = lp.Aub.rows;
        if (p > 0 && lp.Aeq.cols != n) throw std::invalid_argument("simplex: Aeq shape");
        if (q > 0 && lp.Aub.cols != n) throw std::invalid_argument("simplex: Aub shape");
        if (lp.beq.size() != p || lp.bub.size() != q)
            throw std::invalid_argument("simplex: rhs size");

        const std::size_t rows = p + q;
        const std::size_t slack0 = n;
        const std::size_t art0 = n + q;
        const std::size_t cols = n + q + rows;  // x | s | a
        const std::size_t rhs = cols;           // rhs column index

        // sign normalization per row so the artificial starts feasible
        std::vector<double> sigma(rows, 1.0);
        Mat T(rows + 1, cols + 1, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const bool is_eq = r < p;
            const double b = is_eq ? lp.beq[r] : lp.bub[r - p];
            sigma[r] = (b < 0.0) ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n; ++j)
                T(r, j) = sigma[r] * (is_eq ? lp.Aeq(r, j) : lp.Aub(r - p, j));
            if (!is_eq) T(r, slack0 + (r - p)) = sigma[r];
            T(r, art0 + r) = 1.0;
            T(r, rhs) = sigma[r] * b;
        }
        std::vector<std::size_t> basis(rows);
        for (std::size_t r = 0; r < rows; ++r) basis[r] = art0 + r;

        LpSolution sol;

        // phase 1: min sum of artificials
        {
            Vec cost(cols + 1, 0.0);
            for (std::size_t r = 0; r < rows; ++r) cost[art0 + r] = 1.0;
            install_cost(T, basis, cost);
            if (!iterate(T, basis, /*allow_art=*/true, art0, sol.iterations)) {
                sol.status = LpSolution::Status::Infeasible;  // unbounded phase 1 cannot happen
                return sol;
            }
            if (-T(rows, rhs) > 1e-7 * (1.0 + scale_of(lp))) {
                sol.status = LpSolution::Status::Infeasible;
                return sol;
            }
            // drive basic artificials out where a real pivot exists
            for (std::size_t r = 0; r < rows; ++r) {
                if (basis[r] < art0) continue;
                std::size_t j = 0;
                for (; j < art0; ++j)
                    if (std::abs(T(r, j)) > tol_) break;
                if (j < art0) pivot(T, basis, r, j);
                // else: redundant row; artificial stays basic at zero
            }
        }

        // phase 2: real objective, artificials locked out of entering
        {
            Vec cost(cols + 1, 0.0);
            for (std::size_t j = 0; j < n; ++j) cost[j] = lp.c[j];
            install_cost(T, basis, cost);
            if (!iterate(T, basis, /*allow_art=*/false, art0, sol.iterations)) {
                sol.status = LpSolution::Status::Unbounded;
                return sol;
            }
        }

        sol.status = LpSolution::Status::Optimal;
        sol.x.assign(n, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            if (basis[r] < n) sol.x[basis[r]] = T(r, rhs);
        sol.value = dot(lp.c, sol.x);
        sol.basis = basis;

        // duals: reduced cost under artificial r is -y_r for the normalized
        // system; un-normalize by sigma.
        Vec y(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) y[r] = -sigma[r] * T(rows, art0 + r);
        sol.dual_eq.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(p));
        sol.dual_ub.assign(q, 0.0);
        for (std::size_t r = 0; r < q; ++r) sol.dual_ub[r] = std::max(0.0, -y[p + r]);
        return sol;
    }

  private:
    double tol_;

    static double scale_of(const LinearProgram& lp) {
        double s = 0.0;
        for (double v : lp.beq) s = std::max(s, std::abs(v));
        for (double v : lp.bub) s = std::max(s, std::abs(v));
        return s;
    }

    // install reduced-cost row for the given cost vector under current basis
    static void install_cost(Mat& T, const std::vector<std::size_t>& basis, const Vec& cost) {
        const std::size_t rows = T.rows - 1;
        const std::size_t width = T.cols;
        for (std::size_t j = 0; j < width; ++j) T(rows, j) = cost[j];
        for (std::size_t r = 0; r < rows; ++r) {
            double cb = cost[basis[r]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) T(rows, j) -= cb * T(r, j);
        }
    }

    void pivot(Mat& T, std::vector<std::size_t>& basis, std::size_t pr, std::size_t pc) const {
        const std::size_t R = T.rows, C = T.cols;
        const double inv = 1.0 / T(pr, pc);
        for (std::size_t j = 0; j < C; ++j) T(pr, j) *= inv;
        T(pr, pc) = 1.0;
        for (std::size_t i = 0; i < R; ++i) {
            if (i == pr) continue;
            double f = T(i, pc);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < C; ++j) T(i, j) -= f * T(pr, j);
            T(i, pc) = 0.0;
        }
        basis[pr] = pc;
    }

    // Bland iterations; returns false on unboundedness.
    bool iterate(Mat& T, std::vector<std::size_t>& basis, bool allow_art, std::size_t art0,
                 std::size_t& iter_count) const {
        const std::size_t rows = T.rows - 1;
        const std::size_t rhs = T.cols - 1;
        const std::size_t n_enterable = allow_art ? rhs : art0;
        for (;;) {
            std::size_t enter = n_enterable;
            for (std::size_t j = 0; j < n_enterable; ++j) {
                if (T(rows, j) < -tol_) { enter = j; break; }
            }
            if (enter == n_enterable) return true;  // optimal
            std::size_t leave = rows;
            double best_ratio = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                if (T(r, enter) <= tol_) continue;
                double ratio = T(r, rhs) / T(r, enter);
                // Bland: smallest ratio, ties to the smallest basis index
                if (leave == rows || ratio < best_ratio ||
                    (ratio == best_ratio && basis[r] < basis[leave])) {
                    leave = r;
                    best_ratio = ratio;
                }
            }
            if (leave == rows) return false;  // unbounded
            pivot(T, basis, leave, enter);
            ++iter_count;
        }
    }
};

inline LpSolution solve_lp(const LinearProgram& lp) { return SimplexSolver().solve(lp); }

/// min c.x s.t. Aub x <= bub with free (sign-unrestricted) variables,
/// handled by the usual x = x+ - x- split.
inline LpSolution solve_lp_free_ub(const Vec& c, const Mat& Aub, const Vec& bub) {
    const std::size_t n = c.size();
    LinearProgram lp;
    lp.c.resize(2 * n);
    lp.Aub = Mat(Aub.rows, 2 * n);
    lp.bub = bub;
    for (std::size_t j = 0; j < n; ++j) {
        lp.c[j] = c[j];
        lp.c[n + j] = -c[j];
        for (std::size_t r = 0; r < Aub.rows; ++r) {
            lp.Aub(r, j) = Aub(r, j);
            lp.Aub(r, n + j) = -Aub(r, j);
        }
    }
    LpSolution s = solve_lp(lp);
    if (s.optimal()) {
        Vec x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = s.x[j] - s.x[n + j];
        s.x = std::move(x);
    }
    return s;
}

}  // namespace sfkit
