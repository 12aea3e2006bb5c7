#pragma once

// Elemental estimators of the GEV tail parameter and their unit-sum
// linear combinations.
//
// For an ordered sample X_1 >= ... >= X_N and a pair I < J-1,
//
//     tau = (X_I - X_{J-1}) / (X_I - X_J),   t = (X_{I+1} - X_J) / (X_I - X_J),
//     xi_hat = a(J) log(tau) - b(I) log(t),
//
// with (a, b) taken from the GEV, GPD or reflected-Weibull weight sets.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gevtail/coefficients.hpp"
#include "gevtail/errors.hpp"

namespace gevtail {

// ---------------------------------------------------------------------------
// Ordered samples

/// Sample sorted descending: x(1) is the maximum, x(n) the minimum.
class OrderedSample {
public:
    OrderedSample() = default;

    /// Adopts values that are already in descending order.
    static OrderedSample from_descending(std::vector<double> values) {
        check_finite(values);
        for (std::size_t k = 1; k < values.size(); ++k) {
            if (values[k - 1] < values[k]) {
                throw input_error("OrderedSample: values are not in descending order at position " +
                                  std::to_string(k + 1));
            }
        }
        OrderedSample s;
        s.values_ = std::move(values);
        return s;
    }

    int n() const noexcept { return static_cast<int>(values_.size()); }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    /// Order statistic X_k, 1-based.
    double x(int k) const { return values_[static_cast<std::size_t>(k - 1)]; }

    std::span<const double> values() const noexcept { return values_; }

    /// The affine image c*x + d (c > 0 keeps the order).
    OrderedSample affine(double scale, double shift) const {
        if (!(scale > 0.0)) throw domain_error("OrderedSample::affine: scale must be > 0");
        std::vector<double> v(values_);
        for (double& x : v) x = scale * x + shift;
        return from_descending(std::move(v));
    }

    /// -X in reversed order, i.e. the sample of the mirrored distribution.
    OrderedSample reflected() const {
        std::vector<double> v(values_.rbegin(), values_.rend());
        for (double& x : v) x = -x;
        return from_descending(std::move(v));
    }

    static void check_finite(std::span<const double> values) {
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (std::isnan(values[k])) {
                throw input_error("NaN value at position " + std::to_string(k + 1));
            }
            if (!std::isfinite(values[k])) {
                throw input_error("non-finite value at position " + std::to_string(k + 1));
            }
        }
    }

private:
    std::vector<double> values_;
};

/// Descending copy of `raw`; equal values keep their relative order.
inline OrderedSample order_sample(std::span<const double> raw) {
    if (raw.empty()) throw input_error("order_sample: empty sample");
    OrderedSample::check_finite(raw);
    std::vector<double> v(raw.begin(), raw.end());
    std::stable_sort(v.begin(), v.end(), std::greater<>{});
    return OrderedSample::from_descending(std::move(v));
}

inline void require_estimable(const OrderedSample& s) {
    if (s.n() < 3) {
        throw input_error("need N >= 3 order statistics for an elemental estimate (got " +
                          std::to_string(s.n()) + ")");
    }
}

// ---------------------------------------------------------------------------
// Indices, ratios, families

/// A pair (I, J) of order statistics with J >= I + 2, for sample size N.
struct ElementalIndex {
    int i = 1;
    int j = 3;
    int n = 3;

    ElementalIndex() = default;
    ElementalIndex(int i_, int j_, int n_) : i(i_), j(j_), n(n_) {
        if (i < 1 || j < i + 2 || j > n) {
            throw domain_error("invalid elemental index (i=" + std::to_string(i) + ", j=" +
                               std::to_string(j) + ", n=" + std::to_string(n) +
                               "); need 1 <= i, i+2 <= j <= n");
        }
    }

    friend auto operator<=>(const ElementalIndex&, const ElementalIndex&) = default;
};

struct SpacingRatios {
    double tau = 1.0;
    double t = 1.0;
};

enum class Family { gev, gpd, weibull };

inline std::string_view to_string(Family f) {
    switch (f) {
    case Family::gev: return "gev";
    case Family::gpd: return "gpd";
    case Family::weibull: return "weibull";
    }
    return "?";
}

inline Family parse_family(std::string_view s) {
    if (s == "gev") return Family::gev;
    if (s == "gpd") return Family::gpd;
    if (s == "weibull") return Family::weibull;
    throw config_error("unknown family '" + std::string(s) + "' (expected gev, gpd or weibull)");
}

namespace detail {

inline void check_index_for(const OrderedSample& s, const ElementalIndex& e) {
    if (e.n != s.n()) {
        throw domain_error("elemental index is for n=" + std::to_string(e.n) +
                           " but the sample has n=" + std::to_string(s.n()));
    }
}

inline void check_spacings(const OrderedSample& s, const ElementalIndex& e) {
    if (!(s.x(e.i) > s.x(e.j))) throw degenerate_spacing_error(e.i, e.j, "X_I = X_J");
    if (!(s.x(e.i) > s.x(e.j - 1))) throw degenerate_spacing_error(e.i, e.j, "tau = 0");
    if (!(s.x(e.i + 1) > s.x(e.j))) throw degenerate_spacing_error(e.i, e.j, "t = 0");
}

} // namespace detail

/// tau and t for one elemental.
inline SpacingRatios spacing_ratios(const OrderedSample& s, const ElementalIndex& e) {
    detail::check_index_for(s, e);
    detail::check_spacings(s, e);
    const double outer = s.x(e.i) - s.x(e.j);
    return {(s.x(e.i) - s.x(e.j - 1)) / outer, (s.x(e.i + 1) - s.x(e.j)) / outer};
}

/// (a_J, b_I) for every index of a sample size, per family. Stored 1-based.
class FamilyCoefficients {
public:
    FamilyCoefficients(Family family, int n,
                       CoefficientMethod method = CoefficientMethod::automatic,
                       int threshold = default_method_threshold)
        : family_(family), n_(n), a_(static_cast<std::size_t>(n) + 1, 0.0),
          b_(static_cast<std::size_t>(n) + 1, 0.0) {
        if (n < 3) throw domain_error("FamilyCoefficients: n must be >= 3");
        if (family == Family::gpd) {
            for (int j = 2; j <= n; ++j) a_[j] = j - 1;
            for (int i = 1; i < n; ++i) b_[i] = i;
            return;
        }
        const CoefficientTable table(n, method, threshold);
        for (int j = 2; j <= n; ++j) {
            a_[j] = family == Family::gev ? table.a(j) : -table.b(n + 1 - j);
        }
        for (int i = 1; i < n; ++i) {
            b_[i] = family == Family::gev ? table.b(i) : -table.a(n + 1 - i);
        }
    }

    Family family() const noexcept { return family_; }
    int n() const noexcept { return n_; }
    double a(int j) const { return a_[static_cast<std::size_t>(j)]; }
    double b(int i) const { return b_[static_cast<std::size_t>(i)]; }

private:
    Family family_;
    int n_;
    std::vector<double> a_;
    std::vector<double> b_;
};

inline CoefficientPair family_pair(Family family, const ElementalIndex& e,
                                   CoefficientMethod method = CoefficientMethod::automatic,
                                   int threshold = default_method_threshold) {
    switch (family) {
    case Family::gev:
        return {a_coefficient(e.n, e.j, method, threshold), b_coefficient(e.n, e.i, method, threshold)};
    case Family::gpd:
        return gpd_coefficients(e.i, e.j);
    case Family::weibull:
        return weibull_coefficients(e.n, e.i, e.j, method, threshold);
    }
    return {};
}

namespace detail {

// Shared by the single-elemental and the batched path so both agree bitwise.
inline double elemental_value(double a, double b, double x_i, double x_i1, double x_jm1, double x_j) {
    const double log_outer = std::log(x_i - x_j);
    const double log_tau = std::log(x_i - x_jm1) - log_outer;
    const double log_t = std::log(x_i1 - x_j) - log_outer;
    return a * log_tau - b * log_t;
}

} // namespace detail

/// a log(tau) - b log(t) with an explicit weight pair.
inline double elemental_estimate(const OrderedSample& s, const ElementalIndex& e, CoefficientPair w) {
    detail::check_index_for(s, e);
    detail::check_spacings(s, e);
    return detail::elemental_value(w.a, w.b, s.x(e.i), s.x(e.i + 1), s.x(e.j - 1), s.x(e.j));
}

inline double elemental_estimate(const OrderedSample& s, const ElementalIndex& e,
                                 Family family = Family::gev,
                                 CoefficientMethod method = CoefficientMethod::automatic,
                                 int threshold = default_method_threshold) {
    detail::check_index_for(s, e);
    detail::check_spacings(s, e);
    return elemental_estimate(s, e, family_pair(family, e, method, threshold));
}

/// All (i, j) with 1 <= i, i+2 <= j <= n, lexicographic.
inline std::vector<ElementalIndex> enumerate_elementals(int n) {
    if (n < 3) throw domain_error("enumerate_elementals: n must be >= 3 (got " + std::to_string(n) + ")");
    std::vector<ElementalIndex> out;
    out.reserve(static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n - 2) / 2);
    for (int i = 1; i + 2 <= n; ++i) {
        for (int j = i + 2; j <= n; ++j) out.emplace_back(i, j, n);
    }
    return out;
}

inline std::size_t elemental_count(int n) {
    return n < 3 ? 0 : static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n - 2) / 2;
}

// ---------------------------------------------------------------------------
// Batched evaluation

/// Evaluates every elemental of a sample size in one pass.
///
/// Log-spacings are shared across elementals, so a sample costs about
/// N^2/2 logarithms. Degenerate elementals are reported as NaN.
class ElementalEvaluator {
public:
    ElementalEvaluator(Family family, int n, CoefficientMethod method = CoefficientMethod::automatic,
                       int threshold = default_method_threshold)
        : coefficients_(family, n, method, threshold), indices_(enumerate_elementals(n)),
          row_i_(static_cast<std::size_t>(n) + 1), row_next_(static_cast<std::size_t>(n) + 1) {}

    ElementalEvaluator(const ElementalEvaluator& other)
        : coefficients_(other.coefficients_), indices_(other.indices_),
          row_i_(other.row_i_.size()), row_next_(other.row_next_.size()) {}

    int n() const noexcept { return coefficients_.n(); }
    Family family() const noexcept { return coefficients_.family(); }
    const FamilyCoefficients& coefficients() const noexcept { return coefficients_; }
    const std::vector<ElementalIndex>& indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }

    /// Fills `out` (size() entries, lexicographic order); returns the number
    /// of degenerate elementals, which are set to NaN.
    std::size_t evaluate(const OrderedSample& s, std::span<double> out) {
        const int n = coefficients_.n();
        if (s.n() != n) {
            throw domain_error("ElementalEvaluator: sample size " + std::to_string(s.n()) +
                               " does not match n=" + std::to_string(n));
        }
        if (out.size() != indices_.size()) throw domain_error("ElementalEvaluator: output size mismatch");

        const auto xs = s.values();
        auto x = [&](int k) { return xs[static_cast<std::size_t>(k - 1)]; };
        auto fill_row = [&](std::vector<double>& row, int top) {
            for (int q = top + 1; q <= n; ++q) row[static_cast<std::size_t>(q)] = std::log(x(top) - x(q));
        };

        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        std::size_t degenerate = 0;
        std::size_t k = 0;
        fill_row(row_i_, 1);
        for (int i = 1; i + 2 <= n; ++i) {
            if (i > 1) std::swap(row_i_, row_next_);
            fill_row(row_next_, i + 1);
            const double x_i = x(i);
            const double x_i1 = x(i + 1);
            const double b = coefficients_.b(i);
            for (int j = i + 2; j <= n; ++j, ++k) {
                const double x_j = x(j);
                if (!(x_i > x_j) || !(x_i > x(j - 1)) || !(x_i1 > x_j)) {
                    out[k] = nan;
                    ++degenerate;
                    continue;
                }
                const double log_outer = row_i_[static_cast<std::size_t>(j)];
                const double log_tau = row_i_[static_cast<std::size_t>(j - 1)] - log_outer;
                const double log_t = row_next_[static_cast<std::size_t>(j)] - log_outer;
                out[k] = coefficients_.a(j) * log_tau - b * log_t;
            }
        }
        return degenerate;
    }

private:
    FamilyCoefficients coefficients_;
    std::vector<ElementalIndex> indices_;
    std::vector<double> row_i_;
    std::vector<double> row_next_;
};

// ---------------------------------------------------------------------------
// Weight schemes

enum class WeightKind {
    equal,
    w_nj1,
    w_jmi,
    w_i,
    w_nj1_plus_jmi,
    w_jmi_plus_i,
    w_nj1_plus_i,
    custom
};

/// The seven built-in unit-sum combinations.
inline constexpr std::array<WeightKind, 7> standard_weight_kinds{
    WeightKind::equal,        WeightKind::w_nj1,          WeightKind::w_jmi,       WeightKind::w_i,
    WeightKind::w_nj1_plus_jmi, WeightKind::w_jmi_plus_i, WeightKind::w_nj1_plus_i};

struct WeightScheme {
    WeightKind kind = WeightKind::equal;
    /// (i, j) -> nonnegative weight; only read when kind == custom.
    std::map<std::pair<int, int>, double> custom_weights;

    static WeightScheme custom(std::map<std::pair<int, int>, double> weights) {
        return {WeightKind::custom, std::move(weights)};
    }

    static WeightScheme parse(std::string_view s) {
        if (s == "equal") return {WeightKind::equal, {}};
        if (s == "nj1") return {WeightKind::w_nj1, {}};
        if (s == "jmi") return {WeightKind::w_jmi, {}};
        if (s == "i") return {WeightKind::w_i, {}};
        if (s == "nj1+jmi") return {WeightKind::w_nj1_plus_jmi, {}};
        if (s == "jmi+i") return {WeightKind::w_jmi_plus_i, {}};
        if (s == "nj1+i") return {WeightKind::w_nj1_plus_i, {}};
        throw config_error("unknown weight scheme '" + std::string(s) + "'");
    }

    std::string name() const {
        switch (kind) {
        case WeightKind::equal: return "equal";
        case WeightKind::w_nj1: return "nj1";
        case WeightKind::w_jmi: return "jmi";
        case WeightKind::w_i: return "i";
        case WeightKind::w_nj1_plus_jmi: return "nj1+jmi";
        case WeightKind::w_jmi_plus_i: return "jmi+i";
        case WeightKind::w_nj1_plus_i: return "nj1+i";
        case WeightKind::custom: return "custom";
        }
        return "?";
    }

    /// Weight before normalization.
    double raw_weight(int i, int j, int n) const {
        const double nj1 = n - j + 1;
        const double jmi = j - 1 - i;
        const double ii = i;
        switch (kind) {
        case WeightKind::equal: return 1.0;
        case WeightKind::w_nj1: return nj1;
        case WeightKind::w_jmi: return jmi;
        case WeightKind::w_i: return ii;
        case WeightKind::w_nj1_plus_jmi: return nj1 + jmi;
        case WeightKind::w_jmi_plus_i: return jmi + ii;
        case WeightKind::w_nj1_plus_i: return nj1 + ii;
        case WeightKind::custom: {
            const auto it = custom_weights.find({i, j});
            return it == custom_weights.end() ? 0.0 : it->second;
        }
        }
        return 0.0;
    }
};

inline WeightScheme make_scheme(WeightKind kind) { return {kind, {}}; }

struct WeightedElemental {
    ElementalIndex index;
    double weight = 0.0;
};

/// Normalized weights for every elemental of size n (lexicographic order;
/// zero-weight entries included so the list aligns with the evaluator).
inline std::vector<WeightedElemental> combination_weights(const WeightScheme& scheme, int n) {
    const auto indices = enumerate_elementals(n);
    if (scheme.kind == WeightKind::custom) {
        for (const auto& [key, w] : scheme.custom_weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw config_error("custom weight for (" + std::to_string(key.first) + ", " +
                                   std::to_string(key.second) + ") must be finite and >= 0");
            }
            if (key.first < 1 || key.second < key.first + 2 || key.second > n) {
                throw config_error("custom weight names (" + std::to_string(key.first) + ", " +
                                   std::to_string(key.second) + "), not an elemental for n=" +
                                   std::to_string(n));
            }
        }
    }
    std::vector<WeightedElemental> out;
    out.reserve(indices.size());
    double total = 0.0;
    for (const auto& e : indices) {
        const double w = scheme.raw_weight(e.i, e.j, n);
        out.push_back({e, w});
        total += w;
    }
    if (!(total > 0.0)) throw config_error("weight scheme '" + scheme.name() + "' has no positive weight");
    for (auto& we : out) we.weight /= total;
    return out;
}

struct CombineOptions {
    /// Renormalize over evaluable elementals instead of failing on a zero spacing.
    bool skip_degenerate = false;
    CoefficientMethod method = CoefficientMethod::automatic;
    int threshold = default_method_threshold;
};

namespace detail {

inline double combine(std::span<const WeightedElemental> weights, std::span<const double> values,
                      bool skip_degenerate) {
    double acc = 0.0;
    double used = 0.0;
    bool skipped = false;
    const WeightedElemental* first_bad = nullptr;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double w = weights[k].weight;
        if (w == 0.0) continue;
        if (std::isnan(values[k])) {
            if (!first_bad) first_bad = &weights[k];
            if (!skip_degenerate) break;
            skipped = true;
            continue;
        }
        acc += w * values[k];
        used += w;
    }
    if (first_bad && !skip_degenerate) {
        throw degenerate_spacing_error(first_bad->index.i, first_bad->index.j,
                                       "zero spacing in a weighted elemental");
    }
    if (skipped) {
        if (!(used > 0.0)) {
            throw degenerate_spacing_error(first_bad->index.i, first_bad->index.j,
                                           "no evaluable elemental carries weight");
        }
        acc /= used;
    }
    return acc;
}

} // namespace detail

/// Unit-sum linear combination of the elementals of `s`.
inline double combined_estimate(const OrderedSample& s, const WeightScheme& scheme,
                                Family family = Family::gev, const CombineOptions& opts = {}) {
    require_estimable(s);
    const auto weights = combination_weights(scheme, s.n());
    ElementalEvaluator evaluator(family, s.n(), opts.method, opts.threshold);
    std::vector<double> values(evaluator.size());
    evaluator.evaluate(s, values);
    return detail::combine(weights, values, opts.skip_degenerate);
}

/// Precomputed combination for repeated use at a fixed sample size.
class CombinedEstimator {
public:
    CombinedEstimator(const WeightScheme& scheme, Family family, int n, const CombineOptions& opts = {})
        : weights_(combination_weights(scheme, n)), evaluator_(family, n, opts.method, opts.threshold),
          values_(evaluator_.size()), skip_degenerate_(opts.skip_degenerate) {}

    double operator()(const OrderedSample& s) {
        evaluator_.evaluate(s, values_);
        return detail::combine(weights_, values_, skip_degenerate_);
    }

    const std::vector<WeightedElemental>& weights() const noexcept { return weights_; }

private:
    std::vector<WeightedElemental> weights_;
    ElementalEvaluator evaluator_;
    std::vector<double> values_;
    bool skip_degenerate_;
};

/// Per-elemental breakdown used by reporting code.
struct ElementalRow {
    ElementalIndex index;
    double tau = 0.0;
    double t = 0.0;
    double estimate = 0.0;
};

inline std::vector<ElementalRow> per_elemental(const OrderedSample& s, Family family,
                                               CoefficientMethod method = CoefficientMethod::automatic,
                                               int threshold = default_method_threshold) {
    require_estimable(s);
    const FamilyCoefficients coeffs(family, s.n(), method, threshold);
    std::vector<ElementalRow> rows;
    for (const auto& e : enumerate_elementals(s.n())) {
        const auto r = spacing_ratios(s, e);
        rows.push_back({e, r.tau, r.t, elemental_estimate(s, e, {coeffs.a(e.j), coeffs.b(e.i)})});
    }
    return rows;
}

} // namespace gevtail
