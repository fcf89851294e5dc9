#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfkit {

using Vec = std::vector<double>;

/// Dense row-major matrix, desk scale.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    Vec col(std::size_t j) const {
        Vec out(rows);
        for (std::size_t i = 0; i < rows; ++i) out[i] = (*this)(i, j);
        return out;
    }
    Vec row(std::size_t i) const {
        return Vec(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                   data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
    }

    Vec mul(const Vec& x) const {
        if (x.size() != cols) throw std::invalid_argument("Mat::mul: size mismatch");
        Vec y(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            const double* r = &data[i * cols];
            for (std::size_t j = 0; j < cols; ++j) s += r[j] * x[j];
            y[i] = s;
        }
        return y;
    }
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

inline Vec scale(const Vec& a, double t) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * t;
    return c;
}

inline void axpy(double t, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += t * x[i];
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline double norm_p(const Vec& a, double p) {
    double s = 0.0;
    for (double v : a) s += std::pow(std::abs(v), p);
    return std::pow(s, 1.0 / p);
}

inline double dist2(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline bool all_finite(const Vec& a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

/// Norm choice for the approximate Caratheodory machinery.
/// smoothness_D: the (2,D)-smoothness constant of the space. l2 gives 1,
/// lp gives sqrt(p-1); linf has no finite constant and is handled through
/// the log(4d) union-bound route, so its D is reported as 1.
struct NormSpec {
    enum class Kind { L2, Lp, Linf };
    Kind kind = Kind::L2;
    double p = 2.0;

    static NormSpec l2() { return {Kind::L2, 2.0}; }
    static NormSpec lp(double p) {
        if (p < 2.0) throw std::invalid_argument("NormSpec::lp: requires p >= 2");
        return {Kind::Lp, p};
    }
    static NormSpec linf() { return {Kind::Linf, 0.0}; }

    double smoothness_D() const {
        switch (kind) {
            case Kind::L2: return 1.0;
            case Kind::Lp: return std::sqrt(p - 1.0);
            case Kind::Linf: return 1.0;
        }
        return 1.0;
    }

    double operator()(const Vec& v) const {
        switch (kind) {
            case Kind::L2: return norm2(v);
            case Kind::Lp: return norm_p(v, p);
            case Kind::Linf: return norm_inf(v);
        }
        return 0.0;
    }
};

/// Solves A x = b by Gaussian elimination with partial pivoting. A is n x n.
/// Throws on pivots below tol * max|entry|.
inline Vec solve_dense(Mat A, Vec b, double rel_tol = 1e-12) {
    const std::size_t n = A.rows;
    if (A.cols != n || b.size() != n) throw std::invalid_argument("solve_dense: shape mismatch");
    double scale_ref = 0.0;
    for (double v : A.data) scale_ref = std::max(scale_ref, std::abs(v));
    const double tol = rel_tol * std::max(scale_ref, 1.0);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
        if (std::abs(A(piv, k)) <= tol) throw std::runtime_error("solve_dense: singular pivot");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(piv, j), A(k, j));
            std::swap(b[piv], b[k]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = A(i, k) / A(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) A(i, j) -= f * A(k, j);
            b[i] -= f * b[k];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= A(k, j) * x[j];
        x[k] = s / A(k, k);
    }
    return x;
}

/// Finds a nonzero null-space vector of the D x S matrix whose columns are
/// `cols` (S > rank guaranteed when S > D). Column-pivoted elimination with
/// pivot tolerance rel_tol * max|entry|. Returns eta with sum_j eta_j cols_j = 0.
inline Vec null_vector(const Mat& A, double rel_tol = 1e-12) {
    const std::size_t D = A.rows, S = A.cols;
    Mat U = A;
    double scale_ref = 0.0;
    for (double v : U.data) scale_ref = std::max(scale_ref, std::abs(v));
    const double tol = rel_tol * std::max(scale_ref, 1.0);

    std::vector<std::size_t> pivot_col;  // pivot column per reduced row
    pivot_col.reserve(std::min(D, S));
    std::size_t r = 0;
    for (std::size_t c = 0; c < S && r < D; ++c) {
        std::size_t piv = r;
        for (std::size_t i = r + 1; i < D; ++i)
            if (std::abs(U(i, c)) > std::abs(U(piv, c))) piv = i;
        if (std::abs(U(piv, c)) <= tol) continue;  // free column
        if (piv != r)
            for (std::size_t j = 0; j < S; ++j) std::swap(U(piv, j), U(r, j));
        for (std::size_t i = 0; i < D; ++i) {
            if (i == r) continue;
            double f = U(i, c) / U(r, c);
            if (f == 0.0) continue;
            for (std::size_t j = c; j < S; ++j) U(i, j) -= f * U(r, j);
        }
        pivot_col.push_back(c);
        ++r;
    }
    // first free column not used as a pivot
    std::size_t free_col = S;
    {
        std::vector<bool> is_pivot(S, false);
        for (std::size_t c : pivot_col) is_pivot[c] = true;
        for (std::size_t c = 0; c < S; ++c)
            if (!is_pivot[c]) { free_col = c; break; }
    }
    if (free_col == S) throw std::runtime_error("null_vector: columns are independent");
    Vec eta(S, 0.0);
    eta[free_col] = 1.0;
    for (std::size_t k = 0; k < pivot_col.size(); ++k) {
        // row k has its pivot at pivot_col[k]; back out the coefficient
        eta[pivot_col[k]] = -U(k, free_col) / U(k, pivot_col[k]);
    }
    return eta;
}

}  // namespace sfkit
