#pragma once

// Seeded Monte Carlo experiments over the elemental estimators.
//
// Every replicate draws from its own Philox stream, keyed by
// (seed, stream_id + (cell << 32) + replicate), so results do not depend on
// the thread count or scheduling. Replicates are accumulated in fixed-size
// chunks and the chunk accumulators are merged in chunk order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "gevtail/accumulator.hpp"
#include "gevtail/distributions.hpp"
#include "gevtail/errors.hpp"
#include "gevtail/estimator.hpp"
#include "gevtail/mle.hpp"
#include "gevtail/random.hpp"

namespace gevtail {

inline constexpr std::uint64_t replicate_chunk = 2048;

/// Runs fn(index) for index in [0, count) on up to `threads` threads.
/// The first exception thrown by any task is rethrown on the caller.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= count) return;
            try {
                fn(k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline RngSpec replicate_stream(const RngSpec& base, std::uint64_t cell, std::uint64_t replicate) {
    return {base.seed, base.stream_id + (cell << 32) + replicate};
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
    int n = 7;
    std::vector<double> xi_grid{0.0};
    std::uint64_t replicates = 10000;
    std::vector<WeightScheme> schemes{make_scheme(WeightKind::equal)};
    /// Selects both the sampled distribution and the weight set.
    Family family = Family::gev;
    RngSpec seed{};
    bool per_elemental = false;
    double mu = 0.0;
    double sigma = 1.0;
    /// Move the finite endpoint to zero before sampling (estimates are invariant).
    bool anchor_endpoint = true;
    CoefficientMethod method = CoefficientMethod::automatic;
    int method_threshold = default_method_threshold;
    int threads = 0;
    /// Offset added to the cell index in stream derivation.
    std::uint64_t cell_offset = 0;

    void validate() const {
        if (n < 3) throw config_error("sweep: n must be >= 3");
        if (xi_grid.empty()) throw config_error("sweep: xi grid is empty");
        if (replicates < 1) throw config_error("sweep: replicates must be >= 1");
        if (replicates >= (std::uint64_t{1} << 32)) throw config_error("sweep: replicates must be < 2^32");
        if (schemes.empty() && !per_elemental) throw config_error("sweep: no estimator requested");
        if (!(sigma > 0.0)) throw config_error("sweep: sigma must be > 0");
        for (double xi : xi_grid) {
            if (!std::isfinite(xi)) throw config_error("sweep: xi grid contains a non-finite value");
        }
    }
};

struct SweepRow {
    double xi_true = 0.0;
    int n = 0;
    std::string estimator_id;
    double mean = 0.0;
    double bias = 0.0;
    double std = 0.0;
    double rmse = 0.0;
    std::uint64_t replicates = 0;
    std::uint64_t rejected_count = 0;
    std::uint64_t seed = 0;
    /// Every replicate of the cell was rejected.
    bool flagged = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;

    const SweepRow& find(double xi, const std::string& estimator_id) const {
        for (const auto& r : rows) {
            if (r.xi_true == xi && r.estimator_id == estimator_id) return r;
        }
        throw config_error("no row for xi=" + std::to_string(xi) + ", estimator " + estimator_id);
    }

    std::uint64_t total_rejected() const {
        std::map<double, std::uint64_t> per_cell;
        for (const auto& r : rows) per_cell[r.xi_true] = r.rejected_count;
        std::uint64_t total = 0;
        for (const auto& [xi, c] : per_cell) total += c;
        return total;
    }
};

inline std::string elemental_id(const ElementalIndex& e) {
    return "e" + std::to_string(e.i) + "_" + std::to_string(e.j);
}

/// The raw (unsorted) sample of one replicate, exactly as run_sweep draws it.
inline std::vector<double> draw_replicate_sample(const SweepConfig& cfg, std::size_t xi_index,
                                                 std::uint64_t replicate) {
    const double xi = cfg.xi_grid.at(xi_index);
    CounterRng rng(replicate_stream(cfg.seed, cfg.cell_offset + xi_index, replicate));
    std::vector<double> out(static_cast<std::size_t>(cfg.n));
    switch (cfg.family) {
    case Family::gev: {
        GevParams p{cfg.mu, cfg.sigma, xi};
        if (cfg.anchor_endpoint) p = p.endpoint_anchored();
        for (double& x : out) x = gev_quantile(rng.next_uniform(), p);
        break;
    }
    case Family::gpd: {
        // mu = sigma/xi puts x = (sigma/xi)(1-F)^(-xi), exact near either endpoint.
        const bool anchor = cfg.anchor_endpoint && std::abs(xi) >= gumbel_crossover;
        const GevParams p{anchor ? cfg.sigma / xi : cfg.mu, cfg.sigma, xi};
        for (double& x : out) x = gpd_quantile(rng.next_uniform(), p);
        break;
    }
    case Family::weibull: {
        WeibullRelParams p{cfg.mu, cfg.sigma, xi};
        if (cfg.anchor_endpoint && std::abs(xi) >= gumbel_crossover) p.mu = -cfg.sigma / xi;
        for (double& x : out) x = weibullrel_quantile(rng.next_uniform(), p);
        break;
    }
    }
    return out;
}

namespace detail {

struct ChunkStats {
    std::vector<RunningStats> stats;
    std::uint64_t rejected = 0;
};

} // namespace detail

/// Bias/std/RMSE of every requested estimator at every xi of the grid.
inline SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const ElementalEvaluator prototype(cfg.family, cfg.n, cfg.method, cfg.method_threshold);
    const std::size_t n_elem = prototype.size();

    std::vector<std::vector<double>> scheme_weights;
    for (const auto& scheme : cfg.schemes) {
        std::vector<double> w;
        for (const auto& we : combination_weights(scheme, cfg.n)) w.push_back(we.weight);
        scheme_weights.push_back(std::move(w));
    }
    const std::size_t n_est = (cfg.per_elemental ? n_elem : 0) + cfg.schemes.size();

    const std::uint64_t chunks_per_cell = (cfg.replicates + replicate_chunk - 1) / replicate_chunk;
    const std::size_t total_chunks = cfg.xi_grid.size() * chunks_per_cell;
    std::vector<detail::ChunkStats> chunk_results(total_chunks);

    parallel_for(total_chunks, cfg.threads, [&](std::size_t chunk) {
        const std::size_t xi_index = chunk / chunks_per_cell;
        const std::uint64_t first = (chunk % chunks_per_cell) * replicate_chunk;
        const std::uint64_t last = std::min(first + replicate_chunk, cfg.replicates);

        ElementalEvaluator evaluator(prototype);
        std::vector<double> values(n_elem);
        detail::ChunkStats out;
        out.stats.resize(n_est);
        for (std::uint64_t r = first; r < last; ++r) {
            auto raw = draw_replicate_sample(cfg, xi_index, r);
            std::sort(raw.begin(), raw.end(), std::greater<>{});
            if (!std::all_of(raw.begin(), raw.end(), [](double x) { return std::isfinite(x); })) {
                ++out.rejected;
                continue;
            }
            const auto sample = OrderedSample::from_descending(std::move(raw));
            if (evaluator.evaluate(sample, values) > 0) {
                ++out.rejected;
                continue;
            }
            std::size_t k = 0;
            if (cfg.per_elemental) {
                for (; k < n_elem; ++k) out.stats[k].push(values[k]);
            }
            for (const auto& w : scheme_weights) {
                double acc = 0.0;
                for (std::size_t e = 0; e < n_elem; ++e) acc += w[e] * values[e];
                out.stats[k++].push(acc);
            }
        }
        chunk_results[chunk] = std::move(out);
    });

    std::vector<std::string> ids;
    if (cfg.per_elemental) {
        for (const auto& e : prototype.indices()) ids.push_back(elemental_id(e));
    }
    for (const auto& s : cfg.schemes) ids.push_back(s.name());

    SweepResult result;
    for (std::size_t xi_index = 0; xi_index < cfg.xi_grid.size(); ++xi_index) {
        const double xi = cfg.xi_grid[xi_index];
        std::vector<RunningStats> merged(n_est);
        std::uint64_t rejected = 0;
        for (std::uint64_t c = 0; c < chunks_per_cell; ++c) {
            const auto& chunk = chunk_results[xi_index * chunks_per_cell + c];
            rejected += chunk.rejected;
            for (std::size_t k = 0; k < n_est; ++k) merged[k].merge(chunk.stats[k]);
        }
        for (std::size_t k = 0; k < n_est; ++k) {
            SweepRow row;
            row.xi_true = xi;
            row.n = cfg.n;
            row.estimator_id = ids[k];
            row.replicates = merged[k].count();
            row.rejected_count = rejected;
            row.seed = cfg.seed.seed;
            if (row.replicates == 0) {
                constexpr double nan = std::numeric_limits<double>::quiet_NaN();
                row.flagged = true;
                row.mean = row.bias = row.std = row.rmse = nan;
            } else {
                row.mean = merged[k].mean();
                row.bias = row.mean - xi;
                row.std = merged[k].stddev();
                row.rmse = merged[k].rms_about(xi);
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Relative efficiency

struct EfficiencyRow {
    double xi_true = 0.0;
    int n = 0;
    std::string estimator_id;
    std::string reference_id;
    double ratio = 0.0;
};

/// Per-cell RMSE ratio a/b; both results must cover the same cells.
inline std::vector<EfficiencyRow> relative_efficiency(const SweepResult& a, const SweepResult& b) {
    using Key = std::tuple<double, int, std::string>;
    std::map<Key, const SweepRow*> rows_b;
    for (const auto& r : b.rows) rows_b[{r.xi_true, r.n, r.estimator_id}] = &r;
    if (rows_b.size() != a.rows.size()) throw config_error("relative_efficiency: grids do not match");
    std::vector<EfficiencyRow> out;
    for (const auto& r : a.rows) {
        const auto it = rows_b.find({r.xi_true, r.n, r.estimator_id});
        if (it == rows_b.end()) {
            throw config_error("relative_efficiency: no matching cell for xi=" + std::to_string(r.xi_true) +
                               ", n=" + std::to_string(r.n) + ", " + r.estimator_id);
        }
        out.push_back({r.xi_true, r.n, r.estimator_id, r.estimator_id, r.rmse / it->second->rmse});
    }
    return out;
}

/// RMSE of every estimator relative to `reference_id` within one sweep.
inline std::vector<EfficiencyRow> relative_efficiency(const SweepResult& result, const std::string& reference_id) {
    std::map<std::pair<double, int>, double> reference;
    for (const auto& r : result.rows) {
        if (r.estimator_id == reference_id) reference[{r.xi_true, r.n}] = r.rmse;
    }
    if (reference.empty()) throw config_error("relative_efficiency: reference '" + reference_id + "' not in result");
    std::vector<EfficiencyRow> out;
    for (const auto& r : result.rows) {
        const auto it = reference.find({r.xi_true, r.n});
        if (it == reference.end()) throw config_error("relative_efficiency: reference missing for a cell");
        out.push_back({r.xi_true, r.n, r.estimator_id, reference_id, r.rmse / it->second});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Consistency

struct ConsistencyRow {
    int n = 0;
    double xi_true = 0.0;
    /// Plotting abscissa 1 - sqrt(2/N).
    double abscissa = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double std = 0.0;
    double rmse = 0.0;
    std::uint64_t replicates = 0;
    std::uint64_t rejected_count = 0;
};

inline double consistency_abscissa(int n) { return 1.0 - std::sqrt(2.0 / n); }

inline std::vector<ConsistencyRow> run_consistency(const std::vector<int>& n_list, const std::vector<double>& xi_list,
                                                   std::uint64_t replicates, const WeightScheme& scheme,
                                                   RngSpec seed, int threads = 0, Family family = Family::gev) {
    if (n_list.empty()) throw config_error("consistency: empty n list");
    std::vector<ConsistencyRow> out;
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        if (n_list[k] < 3) throw config_error("consistency: every n must be >= 3");
        SweepConfig cfg;
        cfg.n = n_list[k];
        cfg.xi_grid = xi_list;
        cfg.replicates = replicates;
        cfg.schemes = {scheme};
        cfg.family = family;
        cfg.seed = seed;
        cfg.threads = threads;
        cfg.cell_offset = k * xi_list.size();
        for (const auto& r : run_sweep(cfg).rows) {
            out.push_back({r.n, r.xi_true, consistency_abscissa(r.n), r.mean, r.bias, r.std, r.rmse,
                           r.replicates, r.rejected_count});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic studies

struct StudyRow {
    double x = 0.0; ///< x_mid, or the nominal xi
    int n = 3;
    double estimate = 0.0;
    bool has_mle = false;
    double mle_xi = std::numeric_limits<double>::quiet_NaN();
    MleStatus mle_status = MleStatus::failed;
};

/// Sample [1, x_mid, -1]: elemental estimate (and optional MLE) per x_mid.
inline std::vector<StudyRow> run_midpoint_study(const std::vector<double>& grid, bool with_mle = false,
                                                const MleOptions& mle_opts = {}) {
    std::vector<StudyRow> out;
    const ElementalIndex only(1, 3, 3);
    for (double x_mid : grid) {
        if (!(std::abs(x_mid) <= 1.0)) throw domain_error("midpoint study: x_mid must lie in (-1, 1)");
        const auto s = OrderedSample::from_descending({1.0, x_mid, -1.0});
        StudyRow row;
        row.x = x_mid;
        row.estimate = elemental_estimate(s, only, Family::gev);
        if (with_mle) {
            const auto fit = fit_mle(s, mle_opts);
            row.has_mle = true;
            row.mle_xi = fit.params.xi;
            row.mle_status = fit.status;
        }
        out.push_back(row);
    }
    return out;
}

/// Equal-weight estimate on idealized samples (mu, sigma) = (0, 1) per (n, xi).
/// The elemental estimate is taken on the endpoint-anchored copy; the MLE sees
/// the sample at the nominal location.
inline std::vector<StudyRow> run_idealized_study(const std::vector<int>& n_list, const std::vector<double>& xi_grid,
                                                 bool with_mle = false, const MleOptions& mle_opts = {}) {
    std::vector<StudyRow> out;
    for (int n : n_list) {
        if (n < 3) throw domain_error("idealized study: n must be >= 3");
        CombinedEstimator estimator(make_scheme(WeightKind::equal), Family::gev, n);
        for (double xi : xi_grid) {
            const GevParams nominal{0.0, 1.0, xi};
            StudyRow row;
            row.x = xi;
            row.n = n;
            row.estimate = estimator(idealized_sample(nominal.endpoint_anchored(), n));
            if (with_mle) {
                const auto fit = fit_mle(idealized_sample(nominal, n), mle_opts);
                row.has_mle = true;
                row.mle_xi = fit.params.xi;
                row.mle_status = fit.status;
            }
            out.push_back(row);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elemental vs maximum likelihood

struct CompareConfig {
    int n = 7;
    std::uint64_t replicates = 10000;
    double xi_low = -10.0;
    double xi_high = 10.0;
    RngSpec seed{};
    MleOptions mle{};
    int threads = 0;
};

struct CompareRow {
    std::uint64_t replicate = 0;
    double xi_true = 0.0;
    /// Equal-weight combination; NaN when the sample had a zero spacing.
    double elemental = 0.0;
    double mle_xi = 0.0;
    MleStatus mle_status = MleStatus::failed;
};

/// One row per replicate with xi drawn uniformly from [xi_low, xi_high].
inline std::vector<CompareRow> compare_mle(const CompareConfig& cfg) {
    if (cfg.n < 3) throw config_error("mle-compare: n must be >= 3");
    if (cfg.replicates < 1) throw config_error("mle-compare: replicates must be >= 1");
    if (!(cfg.xi_low <= cfg.xi_high)) throw config_error("mle-compare: empty xi range");

    std::vector<CompareRow> rows(cfg.replicates);
    const CombinedEstimator prototype(make_scheme(WeightKind::equal), Family::gev, cfg.n);
    const std::uint64_t chunks = (cfg.replicates + replicate_chunk - 1) / replicate_chunk;
    parallel_for(chunks, cfg.threads, [&](std::size_t chunk) {
        CombinedEstimator estimator(prototype);
        const std::uint64_t first = chunk * replicate_chunk;
        const std::uint64_t last = std::min(first + replicate_chunk, cfg.replicates);
        for (std::uint64_t r = first; r < last; ++r) {
            CounterRng rng(replicate_stream(cfg.seed, 0, r));
            const double xi = rng.next_uniform(cfg.xi_low, cfg.xi_high);
            const GevParams nominal{0.0, 1.0, xi};
            const GevParams anchored = nominal.endpoint_anchored();
            std::vector<double> raw(static_cast<std::size_t>(cfg.n));
            std::vector<double> shifted(raw.size());
            for (std::size_t k = 0; k < raw.size(); ++k) {
                const double u = rng.next_uniform();
                raw[k] = gev_quantile(u, nominal);
                shifted[k] = gev_quantile(u, anchored);
            }
            CompareRow row;
            row.replicate = r;
            row.xi_true = xi;
            try {
                row.elemental = estimator(order_sample(shifted));
            } catch (const input_error&) {
                row.elemental = std::numeric_limits<double>::quiet_NaN();
            }
            // Extreme shapes can overflow at the nominal location; the fit is
            // then reported as failed rather than aborting the run.
            if (std::all_of(raw.begin(), raw.end(), [](double x) { return std::isfinite(x); })) {
                const auto fit = fit_mle(order_sample(raw), cfg.mle);
                row.mle_xi = fit.params.xi;
                row.mle_status = fit.status;
            } else {
                row.mle_xi = std::numeric_limits<double>::quiet_NaN();
                row.mle_status = MleStatus::failed;
            }
            rows[r] = row;
        }
    });
    return rows;
}

} // namespace gevtail
