#pragma once

// Elemental weights a_N(J), b_N(I) for the GEV tail estimator.
//
// The exact weight is b_N(I) = -1/beta_N(I), where beta_N(I) is the
// binomially weighted alternating sum of logarithms
//
//     beta_N(I) = C(N,I) * sum_{m=0}^{I} C(I,m) (-1)^m log(N-I+m)  (< 0).
//
// The sum cancels heavily, so three evaluation routes are offered:
//   direct         the sum itself, for oracle use at small N only;
//   recursion      a Pascal-triangle recursion seeded by N log(1 - 1/N);
//   approximation  b_N(I) ~ -((N-I) + x/12) log(1-x), x = I/N.
// `automatic` uses the recursion up to a threshold N and the
// approximation above it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "gevtail/errors.hpp"

namespace gevtail {

enum class CoefficientMethod { automatic, direct, recursion, approximation };

inline constexpr int default_method_threshold = 25;

inline std::string_view to_string(CoefficientMethod m) {
    switch (m) {
    case CoefficientMethod::automatic: return "auto";
    case CoefficientMethod::direct: return "direct";
    case CoefficientMethod::recursion: return "recursion";
    case CoefficientMethod::approximation: return "approx";
    }
    return "?";
}

inline CoefficientMethod parse_coefficient_method(std::string_view s) {
    if (s == "auto" || s == "automatic") return CoefficientMethod::automatic;
    if (s == "direct") return CoefficientMethod::direct;
    if (s == "recursion") return CoefficientMethod::recursion;
    if (s == "approx" || s == "approximation") return CoefficientMethod::approximation;
    throw config_error("unknown coefficient method '" + std::string(s) + "'");
}

/// One entry beta_N(I) together with the route that produced it.
struct BetaSum {
    int n = 0;
    int i = 0;
    double value = 0.0;
    CoefficientMethod method = CoefficientMethod::recursion;
};

namespace detail {

inline void check_coefficient_index(int n, int i, const char* op) {
    if (n < 2 || i < 1 || i > n - 1) {
        throw domain_error(std::string(op) + ": index out of range (n=" + std::to_string(n) +
                           ", i=" + std::to_string(i) + "; need n >= 2, 1 <= i <= n-1)");
    }
}

inline double checked_beta(double beta, int n, int i, CoefficientMethod method) {
    if (!std::isfinite(beta) || !(beta < 0.0)) {
        throw numeric_error("unstable " + std::string(to_string(method)) +
                            " evaluation of beta_N(I) at N=" + std::to_string(n) +
                            ", I=" + std::to_string(i) + " (value " + std::to_string(beta) +
                            "); use the approximation for this N");
    }
    return beta;
}

} // namespace detail

/// beta_N(I) by direct summation of the alternating binomial-log series.
///
/// Binomial coefficients are built by ratio updates and the sum is carried
/// in long double. Accurate to ~1e-12 relative for N <= 15; cancellation
/// destroys it beyond N ~ 25. Throws numeric_error once the result is
/// non-finite or has the wrong sign.
inline double beta_direct(int n, int i) {
    detail::check_coefficient_index(n, i, "beta_direct");
    using wide = long double;

    wide prefactor = 1.0L; // C(n, i)
    for (int k = 0; k < i; ++k) prefactor = prefactor * static_cast<wide>(n - k) / static_cast<wide>(k + 1);

    wide sum = 0.0L;
    wide binom = 1.0L; // C(i, m)
    for (int m = 0; m <= i; ++m) {
        const wide term = binom * std::log(static_cast<wide>(n - i + m));
        sum += (m % 2 == 0) ? term : -term;
        binom = binom * static_cast<wide>(i - m) / static_cast<wide>(m + 1);
    }
    const wide value = prefactor * sum;
    if (!std::isfinite(value)) {
        throw numeric_error("direct summation overflowed at N=" + std::to_string(n) +
                            ", I=" + std::to_string(i));
    }
    return detail::checked_beta(static_cast<double>(value), n, i, CoefficientMethod::direct);
}

/// Triangular table of beta_N(I), 2 <= N <= n_max, 1 <= I <= N-1.
class BetaTable {
public:
    BetaTable() = default;

    explicit BetaTable(int n_max) : n_max_(n_max) {
        if (n_max < 2) throw domain_error("beta_recursion_table: n_max must be >= 2");
        values_.resize(offset(n_max + 1));

        // Row I = 1: beta_N(1) = N log(1 - 1/N).
        for (int n = 2; n <= n_max; ++n) at(n, 1) = n * std::log1p(-1.0 / n);

        // Row I+1 from two entries of row I.
        for (int i = 1; i + 2 <= n_max; ++i) {
            for (int n = i + 2; n <= n_max; ++n) {
                const double up = static_cast<double>(n) / (i + 1);
                const double left = static_cast<double>(n - i) / (i + 1);
                at(n, i + 1) = up * at(n - 1, i) - left * at(n, i);
            }
        }
    }

    int n_max() const noexcept { return n_max_; }

    double value(int n, int i) const {
        if (n > n_max_) {
            throw domain_error("BetaTable: N=" + std::to_string(n) + " exceeds n_max=" +
                               std::to_string(n_max_));
        }
        detail::check_coefficient_index(n, i, "BetaTable::value");
        return values_[offset(n) + static_cast<std::size_t>(i - 1)];
    }

    BetaSum entry(int n, int i) const { return {n, i, value(n, i), CoefficientMethod::recursion}; }

private:
    static std::size_t offset(int n) {
        // rows 2..n-1 hold 1 + 2 + ... + (n-2) entries
        const auto m = static_cast<std::size_t>(n - 2);
        return m * (m + 1) / 2;
    }

    double& at(int n, int i) { return values_[offset(n) + static_cast<std::size_t>(i - 1)]; }

    int n_max_ = 0;
    std::vector<double> values_;
};

inline BetaTable beta_recursion_table(int n_max) { return BetaTable(n_max); }

/// Process-wide recursion table covering at least `n_max`. Entries for a
/// given (N, I) do not depend on the table size, so growing the cache never
/// changes a previously returned value. The returned table is immutable.
inline std::shared_ptr<const BetaTable> shared_recursion_table(int n_max) {
    static std::mutex mutex;
    static std::shared_ptr<const BetaTable> cached;
    std::lock_guard lock(mutex);
    if (!cached || cached->n_max() < n_max) {
        const int size = std::max(n_max, cached ? 2 * cached->n_max() : default_method_threshold);
        cached = std::make_shared<const BetaTable>(size);
    }
    return cached;
}

/// Large-N approximation of b_N(I), with the 1/(12N) finite-N correction.
inline double approx_b(int n, int i) {
    detail::check_coefficient_index(n, i, "approx_b");
    const double x = static_cast<double>(i) / n;
    const double log1mx = std::log1p(-x);
    return -(static_cast<double>(n - i) + x / 12.0) * log1mx;
}

inline CoefficientMethod resolve_method(int n, CoefficientMethod method,
                                        int threshold = default_method_threshold) {
    if (method != CoefficientMethod::automatic) return method;
    return n <= threshold ? CoefficientMethod::recursion : CoefficientMethod::approximation;
}

/// b_N(I) via the requested route; I = N-1 is accepted so that a_N(N) exists.
inline double b_coefficient(int n, int i, CoefficientMethod method = CoefficientMethod::automatic,
                            int threshold = default_method_threshold) {
    detail::check_coefficient_index(n, i, "b_coefficient");
    switch (resolve_method(n, method, threshold)) {
    case CoefficientMethod::direct:
        return -1.0 / beta_direct(n, i);
    case CoefficientMethod::recursion: {
        const double beta = shared_recursion_table(n)->value(n, i);
        return -1.0 / detail::checked_beta(beta, n, i, CoefficientMethod::recursion);
    }
    case CoefficientMethod::approximation:
    case CoefficientMethod::automatic:
        break;
    }
    return approx_b(n, i);
}

/// a_N(J) = b_N(J-1).
inline double a_coefficient(int n, int j, CoefficientMethod method = CoefficientMethod::automatic,
                            int threshold = default_method_threshold) {
    if (j < 2 || j > n) {
        throw domain_error("a_coefficient: index out of range (n=" + std::to_string(n) +
                           ", j=" + std::to_string(j) + "; need 2 <= j <= n)");
    }
    return b_coefficient(n, j - 1, method, threshold);
}

/// The (a, b) weight pair entering a_J log(tau) - b_I log(t).
struct CoefficientPair {
    double a = 0.0;
    double b = 0.0;
};

namespace detail {
inline void check_pair(int i, int j, const char* op) {
    if (i < 1 || j < i + 2) {
        throw domain_error(std::string(op) + ": invalid elemental pair (i=" + std::to_string(i) +
                           ", j=" + std::to_string(j) + "; need i >= 1, j >= i+2)");
    }
}
} // namespace detail

/// Generalized Pareto weights: a = J-1, b = I, independent of N.
inline CoefficientPair gpd_coefficients(int i, int j) {
    detail::check_pair(i, j, "gpd_coefficients");
    return {static_cast<double>(j - 1), static_cast<double>(i)};
}

/// Weights for the reflected (Weibull-related) family:
/// a^W(J) = -b_N(N+1-J), b^W(I) = -a_N(N+1-I).
inline CoefficientPair weibull_coefficients(int n, int i, int j,
                                            CoefficientMethod method = CoefficientMethod::automatic,
                                            int threshold = default_method_threshold) {
    detail::check_pair(i, j, "weibull_coefficients");
    if (j > n) throw domain_error("weibull_coefficients: j exceeds n");
    return {-b_coefficient(n, n + 1 - j, method, threshold),
            -a_coefficient(n, n + 1 - i, method, threshold)};
}

/// One row of a CoefficientTable.
struct CoefficientEntry {
    int i = 0;
    double beta = 0.0;
    double b = 0.0;
    CoefficientMethod method = CoefficientMethod::recursion;
};

/// All b_N(I), I = 1..N-1, for one sample size.
class CoefficientTable {
public:
    CoefficientTable(int n, CoefficientMethod method = CoefficientMethod::automatic,
                     int threshold = default_method_threshold)
        : n_(n), threshold_(threshold), method_(resolve_method(n, method, threshold)) {
        if (n < 2) throw domain_error("CoefficientTable: n must be >= 2");
        entries_.reserve(static_cast<std::size_t>(n - 1));
        for (int i = 1; i < n; ++i) {
            double beta = 0.0;
            double b = 0.0;
            switch (method_) {
            case CoefficientMethod::direct:
                beta = beta_direct(n, i);
                b = -1.0 / beta;
                break;
            case CoefficientMethod::recursion:
                beta = detail::checked_beta(shared_recursion_table(n)->value(n, i), n, i, method_);
                b = -1.0 / beta;
                break;
            default:
                b = approx_b(n, i);
                beta = -1.0 / b;
                break;
            }
            entries_.push_back({i, beta, b, method_});
        }
    }

    int n() const noexcept { return n_; }
    int method_threshold() const noexcept { return threshold_; }
    CoefficientMethod method() const noexcept { return method_; }

    double b(int i) const {
        detail::check_coefficient_index(n_, i, "CoefficientTable::b");
        return entries_[static_cast<std::size_t>(i - 1)].b;
    }
    double a(int k) const {
        if (k < 2 || k > n_) throw domain_error("CoefficientTable::a: index out of range");
        return b(k - 1);
    }

    const std::vector<CoefficientEntry>& entries() const noexcept { return entries_; }

private:
    int n_;
    int threshold_;
    CoefficientMethod method_;
    std::vector<CoefficientEntry> entries_;
};

} // namespace gevtail
