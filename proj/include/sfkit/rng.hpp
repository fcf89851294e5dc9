#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace sfkit {

/// Seeded RNG with reproducible bounded draws. All randomized operations take
/// an explicit seed; nothing global. The bounded-int and unit-real mappings
/// are fixed here so outputs are stable across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed ^ 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform integer in [0, n). Lemire multiply-shift; bias < 2^-64 * n.
    std::size_t below(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below(0)");
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Uniform real in [0, 1).
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    double gaussian() {
        // Box-Muller on two unit draws; cache the second value.
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = unit(), u2 = unit();
        while (u1 <= 1e-300) u1 = unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// m distinct indices from [0, n), uniform without replacement
    /// (partial Fisher-Yates). Order of the sample is random.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m) {
        if (m > n) throw std::invalid_argument("Rng::sample_indices: m > n");
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t k = 0; k < m; ++k) {
            std::size_t j = k + below(n - k);
            std::swap(idx[k], idx[j]);
        }
        idx.resize(m);
        return idx;
    }

    /// Simplex-uniform weights of length k (normalized exponentials).
    std::vector<double> simplex(std::size_t k) {
        std::vector<double> w(k);
        double s = 0.0;
        for (auto& v : w) {
            v = -std::log(1.0 - unit());
            s += v;
        }
        for (auto& v : w) v /= s;
        return w;
    }

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sfkit
