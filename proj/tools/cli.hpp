#pragma once

// The gevtail command line: argument parsing, config files, dispatch and
// serialization. run() is separate from main() so tests can drive it.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gevtail/gevtail.hpp"

namespace gevtail::cli {

enum exit_code : int { ok = 0, usage = 1, input = 2, numeric = 3 };

/// What a subcommand produces before serialization.
struct Report {
    io::Metadata meta;
    io::Table table;
    /// Plain mode: one value per line after the metadata block (csv only).
    std::optional<std::vector<double>> values;
    /// Extra top-level JSON members.
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
    /// Replaces the table in JSON output when set.
    std::optional<nlohmann::ordered_json> json_body;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.emplace_back(io::trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!io::trim(cur).empty() || !out.empty()) out.emplace_back(io::trim(cur));
    return out;
}

inline std::vector<double> parse_real_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& tok : split_list(s)) {
        double v = 0.0;
        if (!io::try_parse_double(tok, v)) throw config_error("cannot parse " + what + " entry '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw config_error(what + " is empty");
    return out;
}

inline std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> out;
    for (const auto& tok : split_list(s)) {
        try {
            out.push_back(static_cast<int>(io::parse_int(tok, what)));
        } catch (const input_error& e) {
            throw config_error(e.what());
        }
    }
    if (out.empty()) throw config_error(what + " is empty");
    return out;
}

inline std::vector<double> real_range(double lo, double hi, double step) {
    if (!(step > 0.0)) throw config_error("grid step must be > 0");
    if (!(lo <= hi)) throw config_error("grid minimum exceeds maximum");
    std::vector<double> out;
    const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    for (long long k = 0; k <= count; ++k) out.push_back(lo + static_cast<double>(k) * step);
    return out;
}

inline std::vector<double> read_values_file(const std::string& path, std::istream& stdin_stream) {
    if (path == "-") return io::read_values(stdin_stream);
    std::ifstream f(path);
    if (!f) throw input_error("cannot open input file '" + path + "'");
    return io::read_values(f);
}

inline WeightScheme parse_weights(const std::string& spec) {
    constexpr std::string_view prefix = "custom:";
    if (spec.rfind(prefix, 0) == 0) {
        const std::string path = spec.substr(prefix.size());
        std::ifstream f(path);
        if (!f) throw input_error("cannot open weights file '" + path + "'");
        return WeightScheme::custom(io::read_custom_weights(f));
    }
    return WeightScheme::parse(spec);
}

inline std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? sep : "") + v[k];
    return out;
}

inline std::string csv_list(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(io::format_double(x));
    return join(s, ",");
}

/// Flat "key = value" lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto body = io::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key(io::trim(body.substr(0, eq)));
        while (!key.empty() && key.front() == '-') key.erase(key.begin());
        if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(key, std::string(io::trim(body.substr(eq + 1))));
    }
    return out;
}

/// Appends "--key=value" for config entries the command line does not set.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::optional<std::string> path;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
        if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
    }
    if (!path) return args;
    auto given = [&](const std::string& key) {
        const std::string flag = "--" + key;
        return std::any_of(args.begin(), args.end(),
                           [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    std::vector<std::string> extra;
    for (const auto& [key, value] : read_config_file(*path)) {
        if (key == "config") throw config_error("config files cannot include other config files");
        if (!given(key)) extra.push_back("--" + key + "=" + value);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

inline nlohmann::ordered_json cell_json(const io::Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    return std::get<std::string>(c);
}

inline std::string render(const Report& r, const std::string& format) {
    std::ostringstream os;
    if (format == "csv") {
        if (r.values) {
            for (const auto& [k, v] : r.meta) os << "# " << k << ": " << v << '\n';
            for (double x : *r.values) os << io::format_double(x) << '\n';
        } else {
            r.table.write_csv(os, r.meta);
        }
        return os.str();
    }
    nlohmann::ordered_json j;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.meta) meta[k] = v;
    j["metadata"] = meta;
    if (r.json_body) {
        for (const auto& [k, v] : r.json_body->items()) j[k] = v;
    } else if (r.values) {
        nlohmann::ordered_json vals = nlohmann::ordered_json::array();
        for (double x : *r.values) vals.push_back(x);
        j["values"] = vals;
    } else {
        j["columns"] = r.table.columns();
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& row : r.table.rows()) {
            nlohmann::ordered_json obj;
            for (std::size_t c = 0; c < row.size(); ++c) obj[r.table.columns()[c]] = cell_json(row[c]);
            rows.push_back(obj);
        }
        j["rows"] = rows;
    }
    for (const auto& [k, v] : r.extra.items()) j[k] = v;
    return j.dump(2) + "\n";
}

/// Effective value of every option of `sub`, defaults included.
inline void echo_options(const CLI::App& sub, io::Metadata& meta) {
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "config" || name == "out") continue;
        std::string value;
        if (opt->get_expected_max() == 0) {
            value = opt->count() > 0 ? "true" : "false";
        } else if (opt->count() > 0) {
            value = join(opt->results(), ",");
        } else {
            value = opt->get_default_str();
        }
        meta.emplace_back(name, value);
    }
}

} // namespace detail

/// Parses `args` (without the program name), runs the subcommand and writes
/// the result to `out` or --out. Nothing is written on failure.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
               std::istream& in = std::cin) {
    CLI::App app{"Elemental estimators for the GEV tail parameter", "gevtail"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version));
    app.failure_message(CLI::FailureMessage::help);
    app.option_defaults()->always_capture_default();

    std::string format = "csv";
    std::string out_path;
    std::string config_path;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    int threads = 0;

    auto add_common = [&](CLI::App* sub, bool random, bool parallel, const std::string& default_format = "csv") {
        sub->option_defaults()->always_capture_default();
        sub->add_option("--format", format, "Output format")
            ->check(CLI::IsMember({"csv", "json"}))
            ->default_val(default_format);
        sub->add_option("--out", out_path, "Write output to this file instead of stdout");
        sub->add_option("--config", config_path, "Flat key = value file; command-line flags take precedence");
        if (random) {
            sub->add_option("--seed", seed, "Generator seed")->default_val(0);
            sub->add_option("--stream", stream, "Base stream id")->default_val(0);
        }
        if (parallel) sub->add_option("--threads", threads, "Worker threads (0 = all cores)")->default_val(0);
    };

    std::function<Report()> action;

    // coeffs ---------------------------------------------------------------
    auto* coeffs = app.add_subcommand("coeffs", "Coefficient table b_N(I), I = 1..N-1");
    int c_n = 0;
    std::string c_method = "auto";
    int c_threshold = default_method_threshold;
    coeffs->add_option("--n", c_n, "Sample size N")->required()->check(CLI::Range(2, 1 << 24));
    coeffs->add_option("--method", c_method, "auto|direct|recursion|approx")
        ->check(CLI::IsMember({"auto", "direct", "recursion", "approx"}));
    coeffs->add_option("--threshold", c_threshold, "Largest N for which auto uses the recursion");
    add_common(coeffs, false, false);
    coeffs->callback([&] {
        action = [&] {
            Report r;
            const CoefficientTable table(c_n, parse_coefficient_method(c_method), c_threshold);
            r.table = io::Table({"n", "i", "beta", "b", "a_index", "method"});
            nlohmann::ordered_json b = nlohmann::ordered_json::object();
            for (const auto& e : table.entries()) {
                r.table.add_row({static_cast<long long>(c_n), static_cast<long long>(e.i), e.beta, e.b,
                                 static_cast<long long>(e.i + 1), std::string(to_string(e.method))});
                b[std::to_string(e.i)] = e.b;
            }
            r.extra["b"] = b;
            return r;
        };
    });

    // estimate -------------------------------------------------------------
    auto* estimate = app.add_subcommand("estimate", "Estimate the tail parameter of a sample");
    std::string e_input;
    std::string e_family = "gev";
    std::string e_weights = "equal";
    bool e_per = false;
    bool e_skip = false;
    std::string e_method = "auto";
    estimate->add_option("--input", e_input, "File with one value per line ('-' for stdin)")->required();
    estimate->add_option("--family", e_family, "gev|gpd|weibull")->check(CLI::IsMember({"gev", "gpd", "weibull"}));
    estimate->add_option("--weights", e_weights, "equal|nj1|jmi|i|nj1+jmi|jmi+i|nj1+i|custom:<file>");
    estimate->add_flag("--per-elemental", e_per, "List every elemental instead of the combination");
    estimate->add_flag("--skip-degenerate", e_skip, "Renormalize over elementals with nonzero spacings");
    estimate->add_option("--method", e_method, "Coefficient route")
        ->check(CLI::IsMember({"auto", "direct", "recursion", "approx"}));
    add_common(estimate, false, false);
    estimate->callback([&] {
        action = [&] {
            Report r;
            const auto sample = order_sample(detail::read_values_file(e_input, in));
            require_estimable(sample);
            const Family family = parse_family(e_family);
            const auto method = parse_coefficient_method(e_method);
            r.meta.emplace_back("sample_size", std::to_string(sample.n()));
            if (e_per) {
                r.table = io::Table({"i", "j", "tau", "t", "estimate"});
                for (const auto& row : per_elemental(sample, family, method)) {
                    r.table.add_row({static_cast<long long>(row.index.i), static_cast<long long>(row.index.j), row.tau,
                                     row.t, row.estimate});
                }
                return r;
            }
            const auto scheme = detail::parse_weights(e_weights);
            CombineOptions opts;
            opts.skip_degenerate = e_skip;
            opts.method = method;
            const double xi = combined_estimate(sample, scheme, family, opts);
            r.table = io::Table({"family", "weights", "n", "estimate"});
            r.table.add_row({e_family, scheme.name(), static_cast<long long>(sample.n()), xi});
            r.extra["estimate"] = xi;
            return r;
        };
    });

    // sample ---------------------------------------------------------------
    auto* sample = app.add_subcommand("sample", "Draw a seeded sample, one value per line");
    double s_mu = 0.0;
    double s_sigma = 1.0;
    double s_xi = 0.0;
    std::size_t s_count = 0;
    std::string s_family = "gev";
    sample->add_option("--mu", s_mu, "Location");
    sample->add_option("--sigma", s_sigma, "Scale");
    sample->add_option("--xi", s_xi, "Shape");
    sample->add_option("--count", s_count, "Number of draws")->required();
    sample->add_option("--family", s_family, "gev|weibull|gpd")->check(CLI::IsMember({"gev", "weibull", "gpd"}));
    add_common(sample, true, false);
    sample->callback([&] {
        action = [&] {
            Report r;
            if (s_count < 1) throw config_error("--count must be >= 1");
            const RngSpec spec{seed, stream};
            std::vector<double> v;
            if (s_family == "weibull") {
                v = sample_weibullrel({s_mu, s_sigma, s_xi}, s_count, spec);
            } else if (s_family == "gpd") {
                const GevParams p{s_mu, s_sigma, s_xi};
                p.validate();
                CounterRng rng(spec);
                for (std::size_t k = 0; k < s_count; ++k) v.push_back(gpd_quantile(rng.next_uniform(), p));
            } else {
                v = sample_gev({s_mu, s_sigma, s_xi}, s_count, spec);
            }
            r.values = std::move(v);
            return r;
        };
    });

    // idealized ------------------------------------------------------------
    auto* idealized = app.add_subcommand("idealized", "Midpoint-quantile sample, or the idealized-sample study");
    int i_n = 0;
    double i_mu = 0.0;
    double i_sigma = 1.0;
    double i_xi = 0.0;
    bool i_study = false;
    std::string i_n_list = "3,7,15,31";
    double i_xi_min = -10.0;
    double i_xi_max = 10.0;
    double i_xi_step = 0.5;
    bool i_mle = false;
    idealized->add_option("--n", i_n, "Sample size (sample mode)");
    idealized->add_option("--mu", i_mu, "Location (sample mode)");
    idealized->add_option("--sigma", i_sigma, "Scale (sample mode)");
    idealized->add_option("--xi", i_xi, "Shape (sample mode)");
    idealized->add_flag("--study", i_study, "Estimate on idealized samples across a grid of n and xi");
    idealized->add_option("--n-list", i_n_list, "Study: comma-separated sample sizes");
    idealized->add_option("--xi-min", i_xi_min, "Study: smallest nominal xi");
    idealized->add_option("--xi-max", i_xi_max, "Study: largest nominal xi");
    idealized->add_option("--xi-step", i_xi_step, "Study: grid step");
    idealized->add_flag("--mle", i_mle, "Study: add a maximum-likelihood column");
    add_common(idealized, false, false);
    idealized->callback([&] {
        action = [&] {
            Report r;
            if (!i_study) {
                if (i_n < 3) throw config_error("idealized: --n must be >= 3");
                const auto s = idealized_sample({i_mu, i_sigma, i_xi}, i_n);
                r.values = std::vector<double>(s.values().begin(), s.values().end());
                return r;
            }
            const auto rows = run_idealized_study(detail::parse_int_list(i_n_list, "--n-list"),
                                                  detail::real_range(i_xi_min, i_xi_max, i_xi_step), i_mle);
            std::vector<std::string> cols{"n", "xi_nominal", "estimate"};
            if (i_mle) {
                cols.emplace_back("mle_xi");
                cols.emplace_back("mle_status");
            }
            r.table = io::Table(cols);
            for (const auto& row : rows) {
                std::vector<io::Cell> cells{static_cast<long long>(row.n), row.x, row.estimate};
                if (i_mle) {
                    cells.emplace_back(row.mle_xi);
                    cells.emplace_back(std::string(to_string(row.mle_status)));
                }
                r.table.add_row(std::move(cells));
            }
            return r;
        };
    });

    // mle ------------------------------------------------------------------
    auto* mle = app.add_subcommand("mle", "Maximum-likelihood GEV fit");
    std::string m_input;
    std::string m_init = "elemental";
    MleOptions m_opts;
    mle->add_option("--input", m_input, "File with one value per line ('-' for stdin)")->required();
    mle->add_option("--init", m_init, "elemental|moments")->check(CLI::IsMember({"elemental", "moments"}));
    mle->add_option("--max-iter", m_opts.max_iter, "Simplex iteration limit")->check(CLI::PositiveNumber);
    mle->add_option("--tol", m_opts.tol, "Relative objective tolerance")->check(CLI::PositiveNumber);
    add_common(mle, false, false, "json");
    mle->callback([&] {
        action = [&] {
            Report r;
            const auto s = order_sample(detail::read_values_file(m_input, in));
            require_estimable(s);
            m_opts.init = parse_mle_init(m_init);
            const auto fit = fit_mle(s, m_opts);
            r.table = io::Table({"mu", "sigma", "xi", "negloglik", "status", "iterations", "init_mu", "init_sigma",
                                 "init_xi", "initial_negloglik", "note"});
            r.table.add_row({fit.params.mu, fit.params.sigma, fit.params.xi, fit.negloglik,
                             std::string(to_string(fit.status)), static_cast<long long>(fit.iterations),
                             fit.initial.mu, fit.initial.sigma, fit.initial.xi, fit.initial_negloglik, fit.note});
            auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
            nlohmann::ordered_json body;
            body["params"] = {{"mu", num(fit.params.mu)}, {"sigma", num(fit.params.sigma)}, {"xi", num(fit.params.xi)}};
            body["negloglik"] = num(fit.negloglik);
            body["status"] = std::string(to_string(fit.status));
            body["iterations"] = fit.iterations;
            body["initial"] = {{"mu", num(fit.initial.mu)}, {"sigma", num(fit.initial.sigma)}, {"xi", num(fit.initial.xi)}};
            body["initial_negloglik"] = num(fit.initial_negloglik);
            body["note"] = fit.note;
            r.json_body = body;
            return r;
        };
    });

    // sweep ----------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo bias/std/RMSE over a grid of xi");
    SweepConfig w_cfg;
    std::string w_xi;
    double w_xi_min = -12.0;
    double w_xi_max = 12.0;
    double w_xi_step = 1.0;
    std::uint64_t w_reps = 10000;
    std::string w_weights = "equal,nj1,jmi,i,nj1+jmi,jmi+i,nj1+i";
    std::string w_family = "gev";
    std::string w_reference;
    bool w_full = false;
    std::string w_method = "auto";
    sweep->add_option("--n", w_cfg.n, "Sample size")->default_val(7);
    sweep->add_option("--xi", w_xi, "Comma-separated xi values (overrides the range)");
    sweep->add_option("--xi-min", w_xi_min, "Smallest xi of the grid");
    sweep->add_option("--xi-max", w_xi_max, "Largest xi of the grid");
    sweep->add_option("--xi-step", w_xi_step, "Grid step");
    auto* w_reps_opt = sweep->add_option("--replicates", w_reps, "Replicates per xi");
    sweep->add_option("--weights", w_weights, "Comma-separated weight schemes; empty for none");
    sweep->add_flag("--per-elemental", w_cfg.per_elemental, "Also report every elemental");
    sweep->add_option("--family", w_family, "gev|gpd|weibull")->check(CLI::IsMember({"gev", "gpd", "weibull"}));
    sweep->add_option("--reference", w_reference, "Add an RMSE ratio column relative to this estimator");
    sweep->add_option("--method", w_method, "Coefficient route")
        ->check(CLI::IsMember({"auto", "direct", "recursion", "approx"}));
    sweep->add_flag("--full", w_full, "Paper-scale replicate count (500000) unless --replicates is given");
    add_common(sweep, true, true);
    sweep->callback([&] {
        action = [&] {
            Report r;
            w_cfg.xi_grid = w_xi.empty() ? detail::real_range(w_xi_min, w_xi_max, w_xi_step)
                                         : detail::parse_real_list(w_xi, "--xi");
            w_cfg.replicates = (w_full && w_reps_opt->count() == 0) ? 500000 : w_reps;
            w_cfg.schemes.clear();
            for (const auto& name : detail::split_list(w_weights)) w_cfg.schemes.push_back(detail::parse_weights(name));
            w_cfg.family = parse_family(w_family);
            w_cfg.method = parse_coefficient_method(w_method);
            w_cfg.seed = {seed, stream};
            w_cfg.threads = threads;
            const auto result = run_sweep(w_cfg);
            r.meta.emplace_back("effective_replicates", std::to_string(w_cfg.replicates));
            r.meta.emplace_back("xi_grid", detail::csv_list(w_cfg.xi_grid));
            r.meta.emplace_back("total_rejected", std::to_string(result.total_rejected()));
            std::vector<std::string> cols{"xi_true", "n", "estimator_id", "mean", "bias", "std", "rmse",
                                          "replicates", "rejected_count", "seed"};
            std::vector<EfficiencyRow> eff;
            if (!w_reference.empty()) {
                eff = relative_efficiency(result, w_reference);
                cols.emplace_back("rmse_ratio");
            }
            r.table = io::Table(cols);
            for (std::size_t k = 0; k < result.rows.size(); ++k) {
                const auto& row = result.rows[k];
                std::vector<io::Cell> cells{row.xi_true, static_cast<long long>(row.n), row.estimator_id, row.mean,
                                            row.bias, row.std, row.rmse, static_cast<long long>(row.replicates),
                                            static_cast<long long>(row.rejected_count),
                                            static_cast<long long>(row.seed)};
                if (!eff.empty()) cells.emplace_back(eff[k].ratio);
                r.table.add_row(std::move(cells));
            }
            return r;
        };
    });

    // consistency ----------------------------------------------------------
    auto* consistency = app.add_subcommand("consistency", "RMSE against sample size");
    std::string k_n_list = "10,20,40,100,200,400";
    std::string k_xi = "-5,-2,-1,0,1,2,5";
    std::uint64_t k_reps = 10000;
    std::string k_weights = "nj1";
    std::string k_family = "gev";
    bool k_full = false;
    consistency->add_option("--n-list", k_n_list, "Comma-separated sample sizes");
    consistency->add_option("--xi", k_xi, "Comma-separated xi values");
    auto* k_reps_opt = consistency->add_option("--replicates", k_reps, "Replicates per (n, xi)");
    consistency->add_option("--weights", k_weights, "Weight scheme");
    consistency->add_option("--family", k_family, "gev|gpd|weibull")->check(CLI::IsMember({"gev", "gpd", "weibull"}));
    consistency->add_flag("--full", k_full, "Paper-scale replicate count (500000) unless --replicates is given");
    add_common(consistency, true, true);
    consistency->callback([&] {
        action = [&] {
            Report r;
            const std::uint64_t reps = (k_full && k_reps_opt->count() == 0) ? 500000 : k_reps;
            const auto rows = run_consistency(detail::parse_int_list(k_n_list, "--n-list"),
                                              detail::parse_real_list(k_xi, "--xi"), reps,
                                              detail::parse_weights(k_weights), {seed, stream}, threads,
                                              parse_family(k_family));
            std::uint64_t rejected = 0;
            r.table = io::Table({"n", "xi_true", "abscissa", "mean", "bias", "std", "rmse", "replicates",
                                 "rejected_count"});
            for (const auto& row : rows) {
                rejected += row.rejected_count;
                r.table.add_row({static_cast<long long>(row.n), row.xi_true, row.abscissa, row.mean, row.bias,
                                 row.std, row.rmse, static_cast<long long>(row.replicates),
                                 static_cast<long long>(row.rejected_count)});
            }
            r.meta.emplace_back("effective_replicates", std::to_string(reps));
            r.meta.emplace_back("total_rejected", std::to_string(rejected));
            return r;
        };
    });

    // midpoint -------------------------------------------------------------
    auto* midpoint = app.add_subcommand("midpoint", "Estimates on the sample [1, x_mid, -1]");
    int p_points = 101;
    std::string p_grid;
    bool p_mle = false;
    midpoint->add_option("--points", p_points, "Number of evenly spaced x_mid values inside (-1, 1)")
        ->check(CLI::PositiveNumber);
    midpoint->add_option("--grid", p_grid, "Comma-separated x_mid values (overrides --points)");
    midpoint->add_flag("--mle", p_mle, "Add a maximum-likelihood column");
    add_common(midpoint, false, false);
    midpoint->callback([&] {
        action = [&] {
            Report r;
            std::vector<double> grid;
            if (!p_grid.empty()) {
                grid = detail::parse_real_list(p_grid, "--grid");
            } else {
                for (int k = 1; k <= p_points; ++k) grid.push_back(-1.0 + 2.0 * k / (p_points + 1));
            }
            const auto rows = run_midpoint_study(grid, p_mle);
            std::vector<std::string> cols{"x_mid", "estimate"};
            if (p_mle) {
                cols.emplace_back("mle_xi");
                cols.emplace_back("mle_status");
            }
            r.table = io::Table(cols);
            for (const auto& row : rows) {
                std::vector<io::Cell> cells{row.x, row.estimate};
                if (p_mle) {
                    cells.emplace_back(row.mle_xi);
                    cells.emplace_back(std::string(to_string(row.mle_status)));
                }
                r.table.add_row(std::move(cells));
            }
            return r;
        };
    });

    // mle-compare ----------------------------------------------------------
    auto* compare = app.add_subcommand("mle-compare", "Elemental vs maximum likelihood, xi uniform per replicate");
    CompareConfig q_cfg;
    std::string q_init = "elemental";
    compare->add_option("--n", q_cfg.n, "Sample size")->default_val(7);
    compare->add_option("--replicates", q_cfg.replicates, "Replicates")->default_val(10000);
    compare->add_option("--xi-low", q_cfg.xi_low, "Lower end of the xi range")->default_val(-10.0);
    compare->add_option("--xi-high", q_cfg.xi_high, "Upper end of the xi range")->default_val(10.0);
    compare->add_option("--init", q_init, "elemental|moments")->check(CLI::IsMember({"elemental", "moments"}));
    compare->add_option("--max-iter", q_cfg.mle.max_iter, "Simplex iteration limit")->check(CLI::PositiveNumber);
    compare->add_option("--tol", q_cfg.mle.tol, "Relative objective tolerance")->check(CLI::PositiveNumber);
    add_common(compare, true, true);
    compare->callback([&] {
        action = [&] {
            Report r;
            q_cfg.seed = {seed, stream};
            q_cfg.threads = threads;
            q_cfg.mle.init = parse_mle_init(q_init);
            const auto rows = compare_mle(q_cfg);
            std::map<std::string, std::uint64_t> status_count;
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            std::uint64_t used = 0;
            r.table = io::Table({"replicate", "xi_true", "elemental", "mle_xi", "mle_status"});
            for (const auto& row : rows) {
                ++status_count[std::string(to_string(row.mle_status))];
                if (std::isfinite(row.elemental)) {
                    sx += row.xi_true;
                    sy += row.elemental;
                    sxx += row.xi_true * row.xi_true;
                    sxy += row.xi_true * row.elemental;
                    ++used;
                }
                r.table.add_row({static_cast<long long>(row.replicate), row.xi_true, row.elemental, row.mle_xi,
                                 std::string(to_string(row.mle_status))});
            }
            for (const auto& [name, c] : status_count) r.meta.emplace_back("mle_" + name, std::to_string(c));
            if (used > 1) {
                const double m = static_cast<double>(used);
                const double slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
                r.meta.emplace_back("elemental_slope", io::format_double(slope));
            }
            r.meta.emplace_back("elemental_skipped", std::to_string(rows.size() - used));
            return r;
        };
    });

    std::vector<std::string> reversed;
    try {
        const auto merged = detail::merge_config(args);
        reversed.assign(merged.rbegin(), merged.rend());
    } catch (const config_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::usage;
    }

    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::ok : exit_code::usage;
    }

    try {
        const CLI::App* sub = app.get_subcommands().front();
        // Subcommands share `format`; restore the chosen one's default.
        if (const CLI::Option* f = sub->get_option_no_throw("--format"); f && f->count() == 0) {
            format = f->get_default_str();
        }
        Report report = action();
        io::Metadata meta{{"command", sub->get_name()},
                          {"generator", std::string(generator_name)},
                          {"version", std::string(version)}};
        detail::echo_options(*sub, meta);
        meta.insert(meta.end(), report.meta.begin(), report.meta.end());
        report.meta = std::move(meta);
        const std::string text = detail::render(report, format);
        if (out_path.empty()) {
            out << text;
        } else {
            std::ofstream f(out_path, std::ios::binary);
            if (!f) throw input_error("cannot open output file '" + out_path + "'");
            f << text;
            if (!f) throw input_error("failed writing output file '" + out_path + "'");
        }
        return exit_code::ok;
    } catch (const config_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const input_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::input;
    } catch (const domain_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::input;
    } catch (const numeric_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::numeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::numeric;
    }
}

} // namespace gevtail::cli
