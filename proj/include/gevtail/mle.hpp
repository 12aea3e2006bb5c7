#pragma once

// Plain maximum-likelihood GEV fit: negative log-likelihood plus a
// Nelder-Mead search over (mu, log sigma, xi). It exists as a baseline and
// reports boundary-chasing runs instead of hiding them.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gevtail/distributions.hpp"
#include "gevtail/errors.hpp"
#include "gevtail/estimator.hpp"

namespace gevtail {

inline double gev_negloglik(const GevParams& p, std::span<const double> xs) {
    if (!(p.sigma > 0.0)) throw domain_error("gev_negloglik: sigma must be > 0");
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double log_sigma = std::log(p.sigma);
    double total = 0.0;
    if (std::abs(p.xi) < gumbel_crossover) {
        for (double x : xs) {
            const double z = (x - p.mu) / p.sigma;
            total += log_sigma + z + std::exp(-z);
        }
        return total;
    }
    for (double x : xs) {
        const double s = p.xi * (x - p.mu) / p.sigma;
        if (!(s > -1.0)) return inf;
        const double l = std::log1p(s);
        total += log_sigma + (1.0 + 1.0 / p.xi) * l + std::exp(-l / p.xi);
    }
    return total;
}

inline double gev_negloglik(const GevParams& p, const OrderedSample& s) { return gev_negloglik(p, s.values()); }

enum class MleInit { elemental, moments, explicit_params };
enum class MleStatus { converged, max_iter, boundary_suspect, failed };

inline std::string_view to_string(MleStatus s) {
    switch (s) {
    case MleStatus::converged: return "converged";
    case MleStatus::max_iter: return "max_iter";
    case MleStatus::boundary_suspect: return "boundary_suspect";
    case MleStatus::failed: return "failed";
    }
    return "?";
}

inline MleInit parse_mle_init(std::string_view s) {
    if (s == "elemental") return MleInit::elemental;
    if (s == "moments") return MleInit::moments;
    if (s == "explicit") return MleInit::explicit_params;
    throw config_error("unknown MLE initialization '" + std::string(s) + "'");
}

struct MleOptions {
    int max_iter = 5000;
    /// Relative spread of the simplex objective values at convergence.
    double tol = 1e-10;
    /// Spread of the simplex vertices in (mu/sigma0, log sigma, xi).
    double xtol = 1e-8;
    MleInit init = MleInit::elemental;
    GevParams explicit_init{};
    /// Boundary heuristic: sigma below this fraction of the sample range.
    double sigma_floor = 1e-8;
    /// Boundary heuristic: min_i (1 + xi z_i) below this value.
    double support_floor = 1e-10;
};

struct MleResult {
    GevParams params{};
    double negloglik = std::numeric_limits<double>::infinity();
    MleStatus status = MleStatus::failed;
    int iterations = 0;
    GevParams initial{};
    double initial_negloglik = std::numeric_limits<double>::infinity();
    std::string note;
};

namespace detail {

inline double quantile_sorted_ascending(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double min_support_margin(const GevParams& p, std::span<const double> xs) {
    if (std::abs(p.xi) < gumbel_crossover) return 1.0;
    double m = std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::min(m, 1.0 + p.xi * (x - p.mu) / p.sigma);
    return m;
}

} // namespace detail

/// Starting point for the search, before any feasibility adjustment.
inline GevParams mle_initial_point(const OrderedSample& s, const MleOptions& opts) {
    if (opts.init == MleInit::explicit_params) return opts.explicit_init;

    std::vector<double> asc(s.values().rbegin(), s.values().rend());
    const double range = asc.back() - asc.front();
    if (opts.init == MleInit::moments) {
        double mean = 0.0;
        for (double x : asc) mean += x;
        mean /= static_cast<double>(asc.size());
        double ss = 0.0;
        for (double x : asc) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / static_cast<double>(asc.size() - 1));
        const double sigma = sd > 0.0 ? sd * std::sqrt(6.0) / std::numbers::pi : std::max(range, 1.0);
        return {mean - std::numbers::egamma * sigma, sigma, 0.0};
    }

    double xi = 0.0;
    try {
        xi = combined_estimate(s, make_scheme(WeightKind::equal), Family::gev, {.skip_degenerate = true});
    } catch (const degenerate_spacing_error&) {
        xi = 0.0;
    }
    const double median = detail::quantile_sorted_ascending(asc, 0.5);
    double sigma = (detail::quantile_sorted_ascending(asc, 0.75) - detail::quantile_sorted_ascending(asc, 0.25)) / 1.349;
    if (!(sigma > 0.0)) sigma = range > 0.0 ? range / 4.0 : 1.0;
    return {median, sigma, xi};
}

/// Maximum-likelihood fit; never throws on optimizer trouble, reports it in `status`.
inline MleResult fit_mle(const OrderedSample& s, const MleOptions& opts = {}) {
    if (s.n() < 3) throw domain_error("fit_mle: need N >= 3 (got " + std::to_string(s.n()) + ")");
    const auto xs = s.values();
    const double range = s.x(1) - s.x(s.n());

    MleResult result;
    GevParams start = mle_initial_point(s, opts);
    if (!(start.sigma > 0.0) || !std::isfinite(start.sigma) || !std::isfinite(start.mu) || !std::isfinite(start.xi)) {
        result.initial = start;
        result.note = "invalid initial point";
        return result;
    }
    double f_start = gev_negloglik(start, xs);
    for (int k = 0; k < 200 && !std::isfinite(f_start); ++k) {
        start.sigma *= 2.0;
        f_start = gev_negloglik(start, xs);
    }
    if (!std::isfinite(f_start)) {
        start = {start.mu, start.sigma, 0.0};
        f_start = gev_negloglik(start, xs);
    }
    result.initial = start;
    result.initial_negloglik = f_start;
    result.params = start;
    result.negloglik = f_start;
    if (!std::isfinite(f_start)) {
        result.note = "no feasible starting point";
        return result;
    }
    if (!(range > 0.0)) {
        result.note = "sample has zero range";
        return result;
    }

    // theta = (mu / scale0, log sigma, xi); mu is scaled so all axes are O(1).
    const double scale0 = start.sigma;
    using Point = std::array<double, 3>;
    auto to_params = [&](const Point& t) { return GevParams{t[0] * scale0, std::exp(t[1]), t[2]}; };
    auto objective = [&](const Point& t) {
        const GevParams p = to_params(t);
        if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) return std::numeric_limits<double>::infinity();
        const double f = gev_negloglik(p, xs);
        return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
    };

    std::array<Point, 4> simplex{};
    std::array<double, 4> fval{};
    simplex[0] = {start.mu / scale0, std::log(start.sigma), start.xi};
    const Point steps{0.25, 0.25, 0.1};
    for (int k = 1; k <= 3; ++k) {
        simplex[k] = simplex[0];
        simplex[k][static_cast<std::size_t>(k - 1)] += steps[static_cast<std::size_t>(k - 1)];
    }
    for (std::size_t k = 0; k < 4; ++k) fval[k] = objective(simplex[k]);

    constexpr double unbounded_below = -1e8;
    int iter = 0;
    bool converged = false;
    bool diverging = false;
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    for (; iter < opts.max_iter; ++iter) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fval[a] < fval[b]; });
        const std::size_t best = order[0];
        const std::size_t worst = order[3];
        const std::size_t second = order[2];

        if (fval[best] < unbounded_below) {
            diverging = true;
            break;
        }
        double fspread = 0.0;
        double xspread = 0.0;
        for (std::size_t k = 1; k < 4; ++k) {
            fspread = std::max(fspread, std::abs(fval[order[k]] - fval[best]));
            for (std::size_t d = 0; d < 3; ++d) {
                xspread = std::max(xspread, std::abs(simplex[order[k]][d] - simplex[best][d]));
            }
        }
        if (fspread <= opts.tol * (1.0 + std::abs(fval[best])) && xspread <= opts.xtol) {
            converged = true;
            break;
        }

        Point centroid{};
        for (std::size_t k = 0; k < 3; ++k) {
            for (std::size_t d = 0; d < 3; ++d) centroid[d] += simplex[order[k]][d] / 3.0;
        }
        auto along = [&](double coef) {
            Point p{};
            for (std::size_t d = 0; d < 3; ++d) p[d] = centroid[d] + coef * (simplex[worst][d] - centroid[d]);
            return p;
        };

        const Point reflected = along(-1.0);
        const double f_r = objective(reflected);
        if (f_r < fval[best]) {
            const Point expanded = along(-2.0);
            const double f_e = objective(expanded);
            if (f_e < f_r) {
                simplex[worst] = expanded;
                fval[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                fval[worst] = f_r;
            }
            continue;
        }
        if (f_r < fval[second]) {
            simplex[worst] = reflected;
            fval[worst] = f_r;
            continue;
        }
        const bool outside = f_r < fval[worst];
        const Point contracted = along(outside ? -0.5 : 0.5);
        const double f_c = objective(contracted);
        if (f_c < (outside ? f_r : fval[worst])) {
            simplex[worst] = contracted;
            fval[worst] = f_c;
            continue;
        }
        for (std::size_t k = 1; k < 4; ++k) {
            const std::size_t v = order[k];
            for (std::size_t d = 0; d < 3; ++d) simplex[v][d] = simplex[best][d] + 0.5 * (simplex[v][d] - simplex[best][d]);
            fval[v] = objective(simplex[v]);
        }
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k < 4; ++k) {
        if (fval[k] < fval[best]) best = k;
    }
    result.params = to_params(simplex[best]);
    result.negloglik = fval[best];
    result.iterations = iter;

    const bool sigma_collapse = result.params.sigma < opts.sigma_floor * range;
    const bool at_support_edge = detail::min_support_margin(result.params, xs) < opts.support_floor &&
                                 result.negloglik < result.initial_negloglik;
    if (diverging || sigma_collapse || at_support_edge || !std::isfinite(result.negloglik)) {
        result.status = MleStatus::boundary_suspect;
        result.note = diverging        ? "likelihood unbounded near the support boundary"
                      : sigma_collapse ? "sigma collapsed towards zero"
                                       : "optimum on the support boundary 1 + xi z = 0";
    } else {
        result.status = converged ? MleStatus::converged : MleStatus::max_iter;
    }
    return result;
}

} // namespace gevtail
