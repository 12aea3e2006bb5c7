#pragma once

// GEV and reflected (Weibull-related) distribution functions, quantiles,
// samplers and the deterministic "idealized" sample.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "gevtail/errors.hpp"
#include "gevtail/estimator.hpp"
#include "gevtail/random.hpp"

namespace gevtail {

/// Below this |xi| the xi = 0 (Gumbel) branch is used.
inline constexpr double gumbel_crossover = 1e-9;

struct GevParams {
    double mu = 0.0;
    double sigma = 1.0;
    double xi = 0.0;

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw domain_error("GEV scale sigma must be finite and > 0 (got " + std::to_string(sigma) + ")");
        }
        if (!std::isfinite(mu) || !std::isfinite(xi)) throw domain_error("GEV parameters must be finite");
    }

    /// Finite endpoint mu - sigma/xi (lower for xi > 0, upper for xi < 0).
    double endpoint() const {
        return std::abs(xi) < gumbel_crossover ? std::numeric_limits<double>::quiet_NaN() : mu - sigma / xi;
    }

    /// Same shape and scale with the location moved so the finite endpoint
    /// sits at zero. Sampling in this frame keeps full relative precision
    /// next to the endpoint; elemental estimates are unaffected.
    GevParams endpoint_anchored() const {
        if (std::abs(xi) < gumbel_crossover) return *this;
        return {sigma / xi, sigma, xi};
    }
};

struct WeibullRelParams {
    double mu = 0.0;
    double sigma = 1.0;
    double zeta = 0.0;

    /// Finite endpoint mu + sigma/zeta (upper for zeta > 0, lower for zeta < 0).
    double endpoint() const {
        return std::abs(zeta) < gumbel_crossover ? std::numeric_limits<double>::quiet_NaN() : mu + sigma / zeta;
    }

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw domain_error("scale sigma must be finite and > 0 (got " + std::to_string(sigma) + ")");
        }
        if (!std::isfinite(mu) || !std::isfinite(zeta)) throw domain_error("parameters must be finite");
    }
};

namespace detail {

// Below this value of 1 + xi z (or of y^(-xi) in the quantiles) the
// endpoint-relative forms are used: they keep full relative precision
// next to a finite endpoint, where 1 + xi z cancels.
inline constexpr double endpoint_form_below = 0.5;

inline void check_probability(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw domain_error("probability must lie in (0, 1) (got " + std::to_string(p) + ")");
    }
}
} // namespace detail

/// F(x) = exp(-(1 + xi z)^(-1/xi)), z = (x - mu)/sigma; exp(-exp(-z)) at xi = 0.
/// Outside the support the result clamps to 0 or 1.
inline double gev_cdf(double x, const GevParams& p) {
    p.validate();
    const double z = (x - p.mu) / p.sigma;
    if (std::abs(p.xi) < gumbel_crossover) return std::exp(-std::exp(-z));
    const double s = p.xi * z;
    double log_base = 0.0;
    if (1.0 + s >= detail::endpoint_form_below) {
        log_base = std::log1p(s);
    } else {
        const double base = p.xi * (x - p.endpoint()) / p.sigma;
        if (!(base > 0.0)) return p.xi > 0.0 ? 0.0 : 1.0;
        log_base = std::log(base);
    }
    return std::exp(-std::exp(-log_base / p.xi));
}

/// x = mu + (sigma/xi) [(-log F)^(-xi) - 1]; mu - sigma log(-log F) at xi = 0.
inline double gev_quantile(double prob, const GevParams& p) {
    p.validate();
    detail::check_probability(prob);
    const double y = -std::log(prob);
    if (std::abs(p.xi) < gumbel_crossover) return p.mu - p.sigma * std::log(y);
    const double power = std::exp(-p.xi * std::log(y));
    if (power < detail::endpoint_form_below) return p.endpoint() + p.sigma * power / p.xi;
    return p.mu + p.sigma * std::expm1(-p.xi * std::log(y)) / p.xi;
}

/// Reflected family: F(x) = 1 - exp(-(1 - zeta z)^(-1/zeta)); 1 - exp(-exp(z)) at zeta = 0.
inline double weibullrel_cdf(double x, const WeibullRelParams& p) {
    p.validate();
    const double z = (x - p.mu) / p.sigma;
    if (std::abs(p.zeta) < gumbel_crossover) return -std::expm1(-std::exp(z));
    const double s = -p.zeta * z;
    double log_base = 0.0;
    if (1.0 + s >= detail::endpoint_form_below) {
        log_base = std::log1p(s);
    } else {
        const double base = -p.zeta * (x - p.endpoint()) / p.sigma;
        if (!(base > 0.0)) return p.zeta > 0.0 ? 1.0 : 0.0;
        log_base = std::log(base);
    }
    return -std::expm1(-std::exp(-log_base / p.zeta));
}

inline double weibullrel_quantile(double prob, const WeibullRelParams& p) {
    p.validate();
    detail::check_probability(prob);
    const double y = -std::log1p(-prob);
    if (std::abs(p.zeta) < gumbel_crossover) return p.mu + p.sigma * std::log(y);
    const double power = std::exp(-p.zeta * std::log(y));
    if (power < detail::endpoint_form_below) return p.endpoint() - p.sigma * power / p.zeta;
    return p.mu - p.sigma * std::expm1(-p.zeta * std::log(y)) / p.zeta;
}

/// Generalized Pareto quantile: x = mu + sigma ((1-F)^(-xi) - 1)/xi; mu - sigma log(1-F) at xi = 0.
/// Used by the harness to exercise the GPD weights on their own family.
inline double gpd_quantile(double prob, const GevParams& p) {
    p.validate();
    detail::check_probability(prob);
    const double log_survival = std::log1p(-prob);
    if (std::abs(p.xi) < gumbel_crossover) return p.mu - p.sigma * log_survival;
    const double power = std::exp(-p.xi * log_survival);
    if (power < detail::endpoint_form_below) return (p.mu - p.sigma / p.xi) + p.sigma * power / p.xi;
    return p.mu + p.sigma * std::expm1(-p.xi * log_survival) / p.xi;
}

/// `count` independent GEV draws by inverting uniforms on (0, 1).
inline std::vector<double> sample_gev(const GevParams& p, std::size_t count, CounterRng& rng) {
    p.validate();
    std::vector<double> out(count);
    for (double& x : out) x = gev_quantile(rng.next_uniform(), p);
    return out;
}

inline std::vector<double> sample_gev(const GevParams& p, std::size_t count, RngSpec spec) {
    if (count < 1) throw domain_error("sample_gev: count must be >= 1");
    CounterRng rng(spec);
    return sample_gev(p, count, rng);
}

inline std::vector<double> sample_weibullrel(const WeibullRelParams& p, std::size_t count, RngSpec spec) {
    if (count < 1) throw domain_error("sample_weibullrel: count must be >= 1");
    p.validate();
    CounterRng rng(spec);
    std::vector<double> out(count);
    for (double& x : out) x = weibullrel_quantile(rng.next_uniform(), p);
    return out;
}

/// Quantiles at the midpoints (k - 1/2)/n, k = 1..n, in descending order.
inline OrderedSample idealized_sample(const GevParams& p, int n) {
    if (n < 3) throw domain_error("idealized_sample: n must be >= 3");
    p.validate();
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        const double f = (static_cast<double>(n - k) + 0.5) / n;
        v[static_cast<std::size_t>(k - 1)] = gev_quantile(f, p);
    }
    return OrderedSample::from_descending(std::move(v));
}

} // namespace gevtail
