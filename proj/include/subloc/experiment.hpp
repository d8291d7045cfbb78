#pragma once

// Monte Carlo harness: single trials, lambda sweeps, (alpha, beta) phase
// grids and clique-reduction batches. Every trial seed is derived from the
// master seed and the trial's grid coordinates, and records are written in
// (cell, trial) order, so output does not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "subloc/convex.hpp"
#include "subloc/io.hpp"
#include "subloc/localize.hpp"
#include "subloc/model.hpp"
#include "subloc/reduction.hpp"
#include "subloc/search.hpp"

namespace subloc {

enum class Algorithm { Spectral, Denoised, Multi, Search, Convex };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Spectral: return "spectral";
        case Algorithm::Denoised: return "denoised";
        case Algorithm::Multi: return "multi";
        case Algorithm::Search: return "search";
        case Algorithm::Convex: return "convex";
    }
    return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "spectral") return Algorithm::Spectral;
    if (s == "denoised") return Algorithm::Denoised;
    if (s == "multi") return Algorithm::Multi;
    if (s == "search") return Algorithm::Search;
    if (s == "convex") return Algorithm::Convex;
    throw validation_error("unknown algorithm '" + s + "' (spectral, denoised, multi, search, convex)");
}

struct ExperimentConfig {
    std::string mode = "sweep";  // gen, localize, sweep, phase, reduce
    index_t m = 100, n = 100, k_m = 10, k_n = 10, r = 1;
    std::vector<double> lambdas{1.0};
    bool lambda_in_snrc = false;  // lambda grid in units of sigma * snr_c_dense
    std::vector<double> alphas;
    std::vector<double> betas;
    double sigma = 1.0;
    NoiseFamily noise = NoiseFamily::Gaussian;
    Algorithm algo = Algorithm::Spectral;
    index_t trials = 1;
    std::uint64_t master_seed = 0;
    std::string output;
    std::string input;
    unsigned workers = 1;
    bool timing = false;

    bool sigma_known = true;   // denoised: true sigma, else MAD estimate
    bool sizes_known = true;   // denoised: threshold uses (k_m, k_n)
    double t_mult = 1.0;
    std::uint64_t search_budget = SearchBudget{}.max_enumerations;
    RelaxationOptions convex;
    double zero_tol = 0.1;

    index_t reduce_N = 1000;
    double reduce_kappa = 158.0;
    index_t reduce_l = 2;
    std::string reduce_localizer = "multi";

    void validate() const {
        static const std::vector<std::string> modes{"gen", "localize", "sweep", "phase", "reduce"};
        if (std::find(modes.begin(), modes.end(), mode) == modes.end()) throw validation_error("unknown mode '" + mode + "'");
        if (trials < 1) throw validation_error("trials must be >= 1");
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw validation_error("sigma must be finite and >= 0");
        if (workers < 1) throw validation_error("workers must be >= 1");
        if (mode == "reduce") {
            if (reduce_N < 2 || reduce_l < 1 || !(reduce_kappa >= 1.0) || reduce_kappa > double(reduce_N))
                throw validation_error("reduce needs N >= 2, l >= 1 and 1 <= kappa <= N");
            reduction_localizer_from_string(reduce_localizer);
            return;
        }
        if (mode == "phase") {
            if (alphas.empty() || betas.empty()) throw validation_error("phase mode needs non-empty alpha and beta grids");
            if (n < 2) throw validation_error("phase mode needs n >= 2");
            for (double a : alphas)
                if (!(a > 0.0 && a <= 1.0)) throw validation_error("alpha must lie in (0, 1]");
            for (double b : betas)
                if (!std::isfinite(b)) throw validation_error("beta must be finite");
            if (r != 1) throw validation_error("phase mode uses a single block (r = 1)");
            if (!(sigma > 0.0)) throw validation_error("phase mode needs sigma > 0");
        } else {
            if (m < 2 || n < 2) throw validation_error("m and n must be >= 2");
            if (k_m < 1 || k_n < 1 || r < 1 || r * k_m > m || r * k_n > n)
                throw validation_error("need 1 <= k and r*k <= dimension");
            if (mode == "sweep" && lambdas.empty()) throw validation_error("lambda grid must be non-empty");
            for (double l : lambdas)
                if (!(l >= 0.0) || !std::isfinite(l)) throw validation_error("lambda grid values must be finite and >= 0");
        }
        if (r > 1 && (algo == Algorithm::Spectral || algo == Algorithm::Denoised || algo == Algorithm::Convex))
            throw validation_error(to_string(algo) + " localizes a single block; use multi or search for r > 1");
        if (algo == Algorithm::Denoised && sigma_known && !(sigma > 0.0))
            throw validation_error("denoised with known sigma needs sigma > 0");
    }
};

// ---------------------------------------------------------------- config JSON

inline ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw validation_error("config must be a JSON object");
    static const std::vector<std::string> known{
        "mode", "m", "n", "k_m", "k_n", "r", "lambdas", "units", "alphas", "betas", "sigma", "noise", "algo", "trials",
        "master_seed", "output", "input", "workers", "timing", "sigma_known", "sizes_known", "t_mult", "search_budget",
        "convex", "zero_tol", "reduce"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) throw validation_error("unknown config field '" + key + "'");
    ExperimentConfig c;
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) field = detail::require<std::decay_t<decltype(field)>>(j, key);
    };
    opt("mode", c.mode);
    opt("m", c.m);
    opt("n", c.n);
    opt("k_m", c.k_m);
    opt("k_n", c.k_n);
    opt("r", c.r);
    opt("lambdas", c.lambdas);
    opt("alphas", c.alphas);
    opt("betas", c.betas);
    opt("sigma", c.sigma);
    opt("trials", c.trials);
    opt("master_seed", c.master_seed);
    opt("output", c.output);
    opt("input", c.input);
    opt("workers", c.workers);
    opt("timing", c.timing);
    opt("sigma_known", c.sigma_known);
    opt("sizes_known", c.sizes_known);
    opt("t_mult", c.t_mult);
    opt("search_budget", c.search_budget);
    opt("zero_tol", c.zero_tol);
    if (j.contains("units")) {
        const auto u = detail::require<std::string>(j, "units");
        if (u != "snrc" && u != "absolute") throw validation_error("units must be 'snrc' or 'absolute'");
        c.lambda_in_snrc = u == "snrc";
    }
    if (j.contains("noise")) c.noise = noise_family_from_string(detail::require<std::string>(j, "noise"));
    if (j.contains("algo")) c.algo = algorithm_from_string(detail::require<std::string>(j, "algo"));
    if (j.contains("convex")) {
        const json& cv = j.at("convex");
        if (cv.contains("rho")) c.convex.rho = detail::require<double>(cv, "rho");
        if (cv.contains("max_iter")) c.convex.max_iter = detail::require<int>(cv, "max_iter");
        if (cv.contains("feas_tol")) c.convex.feas_tol = detail::require<double>(cv, "feas_tol");
    }
    if (j.contains("reduce")) {
        const json& rd = j.at("reduce");
        if (rd.contains("N")) c.reduce_N = detail::require<index_t>(rd, "N");
        if (rd.contains("kappa")) c.reduce_kappa = detail::require<double>(rd, "kappa");
        if (rd.contains("l")) c.reduce_l = detail::require<index_t>(rd, "l");
        if (rd.contains("localizer")) c.reduce_localizer = detail::require<std::string>(rd, "localizer");
    }
    return c;
}

inline json to_json(const ExperimentConfig& c) {
    return {{"mode", c.mode},
            {"m", c.m},
            {"n", c.n},
            {"k_m", c.k_m},
            {"k_n", c.k_n},
            {"r", c.r},
            {"lambdas", c.lambdas},
            {"units", c.lambda_in_snrc ? "snrc" : "absolute"},
            {"alphas", c.alphas},
            {"betas", c.betas},
            {"sigma", c.sigma},
            {"noise", to_string(c.noise)},
            {"algo", to_string(c.algo)},
            {"trials", c.trials},
            {"master_seed", c.master_seed},
            {"output", c.output},
            {"input", c.input},
            {"workers", c.workers},
            {"timing", c.timing},
            {"sigma_known", c.sigma_known},
            {"sizes_known", c.sizes_known},
            {"t_mult", c.t_mult},
            {"search_budget", c.search_budget},
            {"convex", {{"rho", c.convex.rho}, {"max_iter", c.convex.max_iter}, {"feas_tol", c.convex.feas_tol}}},
            {"zero_tol", c.zero_tol},
            {"reduce", {{"N", c.reduce_N}, {"kappa", c.reduce_kappa}, {"l", c.reduce_l}, {"localizer", c.reduce_localizer}}}};
}

// ---------------------------------------------------------------- workers

/// Runs fn(0..count-1) on `workers` threads; fn must only touch its own slot.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- trials

struct CellParams {
    index_t m, n, k_m, k_n, r;
    double lambda, sigma;
};

struct TrialRecord {
    index_t trial = 0;
    std::uint64_t seed = 0;
    Algorithm algo = Algorithm::Spectral;
    CellParams params{};
    bool success = false;
    double jaccard = 0.0;
    double wall_time_ms = 0.0;
    std::map<std::string, double> diagnostics;
};

/// Empty when the algorithm can run on this cell, else the refusal reason.
inline std::string cell_refusal(const ExperimentConfig& cfg, const CellParams& p) {
    if (cfg.algo != Algorithm::Search) return {};
    const double need = search_enumerations(p.m, p.n, p.k_m, p.k_n);
    if (need > double(cfg.search_budget))
        return "search needs " + format_double(need) + " subset evaluations, budget " + std::to_string(cfg.search_budget);
    return {};
}

/// Runs the configured algorithm on an observation.
inline LocalizationResult run_algorithm(const ExperimentConfig& cfg, const Observation& obs, index_t k_m, index_t k_n,
                                        index_t r, double sigma, std::uint64_t algo_seed) {
    switch (cfg.algo) {
        case Algorithm::Spectral: return localize_spectral(obs);
        case Algorithm::Denoised: {
            DenoiseOptions opt;
            opt.t_mult = cfg.t_mult;
            if (cfg.sizes_known) opt.sizes = std::pair{k_m, k_n};
            const double s = cfg.sigma_known && sigma > 0.0 ? sigma : mad_sigma(obs.data);
            if (!(s > 0.0)) {
                LocalizationResult out;
                out.diagnostics["degenerate"] = 1.0;
                return out;
            }
            auto res = localize_denoised(obs, s, opt);
            res.diagnostics["sigma_used"] = s;
            return res;
        }
        case Algorithm::Multi: {
            MultiOptions opt;
            opt.seed = algo_seed;
            return localize_multi(obs, r, opt);
        }
        case Algorithm::Search: {
            SearchOptions opt;
            opt.budget.max_enumerations = cfg.search_budget;
            return r == 1 ? combinatorial_search(obs, k_m, k_n, opt) : greedy_multi_search(obs, k_m, k_n, r, opt);
        }
        case Algorithm::Convex: return localize_convex(obs, k_m, k_n, cfg.convex, cfg.zero_tol);
    }
    throw validation_error("unknown algorithm");
}

/// One seeded instance: sub-seed 0 draws the supports, 1 the noise, 2 the
/// algorithm's own randomness. lambda = 0 gives pure noise with the drawn
/// supports as the (unrecoverable) truth.
inline TrialRecord run_trial(const ExperimentConfig& cfg, const CellParams& p, index_t trial, std::uint64_t seed) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = seed;
    rec.algo = cfg.algo;
    rec.params = p;
    PlantedSignal truth = random_signal(p.m, p.n, p.k_m, p.k_n, p.r, p.lambda > 0.0 ? p.lambda : 1.0, derive_seed(seed, {0}));
    Matrix x = sample_noise(p.m, p.n, {cfg.noise, p.sigma}, derive_seed(seed, {1}));
    if (p.lambda > 0.0) x += truth.mean_matrix();
    const Observation obs{std::move(x)};
    const auto t0 = std::chrono::steady_clock::now();
    const LocalizationResult res = run_algorithm(cfg, obs, p.k_m, p.k_n, p.r, p.sigma, derive_seed(seed, {2}));
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rec.success = !res.flagged("degenerate") && supports_match(res, truth);
    rec.jaccard = support_jaccard(res, truth);
    rec.diagnostics = res.diagnostics;
    return rec;
}

inline std::vector<TrialRecord> run_cell(const ExperimentConfig& cfg, const CellParams& p,
                                         const std::function<std::uint64_t(index_t)>& seed_of) {
    std::vector<TrialRecord> recs(static_cast<std::size_t>(cfg.trials));
    parallel_for(recs.size(), cfg.workers, [&](std::size_t t) { recs[t] = run_trial(cfg, p, index_t(t), seed_of(index_t(t))); });
    return recs;
}

// ---------------------------------------------------------------- sweep

inline std::string diagnostics_field(const std::map<std::string, double>& d) {
    std::string out;
    for (const auto& [k, v] : d) {
        if (!out.empty()) out += ';';
        out += k + '=' + format_double(v);
    }
    return out;
}

struct CellSummary {
    std::size_t index = 0;
    double lambda = 0.0;
    index_t trials = 0;
    index_t successes = 0;
    std::string refusal;  // non-empty when skipped
    double rate() const { return trials > 0 ? double(successes) / double(trials) : 0.0; }
};

struct SweepOutput {
    std::string trials_csv;
    std::string summary_csv;
    std::vector<CellSummary> cells;
    bool skipped = false;
};

inline std::string sweep_trials_header(bool timing) {
    return std::string("cell,lambda_grid,lambda,trial,seed,algo,m,n,k_m,k_n,r,sigma,noise,success,jaccard,diagnostics") +
           (timing ? ",wall_time_ms" : "") + "\n";
}

inline const char* sweep_summary_header() { return "cell,lambda_grid,lambda,algo,trials,successes,rate,status,reason\n"; }

/// Actual lambda for a grid value.
inline double sweep_lambda(const ExperimentConfig& cfg, double grid_value) {
    if (!cfg.lambda_in_snrc) return grid_value;
    return grid_value * cfg.sigma * snr_thresholds(double(cfg.m), double(cfg.n), double(cfg.k_m), double(cfg.k_n)).snr_c_dense;
}

inline SweepOutput run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    SweepOutput out;
    std::ostringstream trials, summary;
    trials << sweep_trials_header(cfg.timing);
    summary << sweep_summary_header();
    for (std::size_t a = 0; a < cfg.lambdas.size(); ++a) {
        const double lambda = sweep_lambda(cfg, cfg.lambdas[a]);
        const CellParams p{cfg.m, cfg.n, cfg.k_m, cfg.k_n, cfg.r, lambda, cfg.sigma};
        CellSummary cell;
        cell.index = a;
        cell.lambda = lambda;
        cell.refusal = cell_refusal(cfg, p);
        if (!cell.refusal.empty()) {
            out.skipped = true;
            summary << a << ',' << format_double(cfg.lambdas[a]) << ',' << format_double(lambda) << ',' << to_string(cfg.algo)
                    << ",0,0,,skipped,\"" << cell.refusal << "\"\n";
            out.cells.push_back(cell);
            continue;
        }
        const auto recs = run_cell(cfg, p, [&](index_t t) { return derive_seed(cfg.master_seed, {a, std::uint64_t(t)}); });
        for (const auto& r : recs) {
            trials << a << ',' << format_double(cfg.lambdas[a]) << ',' << format_double(lambda) << ',' << r.trial << ','
                   << r.seed << ',' << to_string(cfg.algo) << ',' << p.m << ',' << p.n << ',' << p.k_m << ',' << p.k_n
                   << ',' << p.r << ',' << format_double(p.sigma) << ',' << to_string(cfg.noise) << ',' << (r.success ? 1 : 0)
                   << ',' << format_double(r.jaccard) << ',' << diagnostics_field(r.diagnostics);
            if (cfg.timing) trials << ',' << format_double(r.wall_time_ms);
            trials << '\n';
            cell.successes += r.success;
        }
        cell.trials = cfg.trials;
        summary << a << ',' << format_double(cfg.lambdas[a]) << ',' << format_double(lambda) << ',' << to_string(cfg.algo)
                << ',' << cell.trials << ',' << cell.successes << ',' << format_double(cell.rate()) << ",ok,\n";
        out.cells.push_back(cell);
    }
    out.trials_csv = trials.str();
    out.summary_csv = summary.str();
    return out;
}

/// Recomputes per-cell (trials, successes) from a per-trial sweep CSV.
inline std::map<std::size_t, std::pair<index_t, index_t>> reaggregate_sweep(const std::string& trials_csv) {
    std::istringstream in(trials_csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string f;
        while (std::getline(h, f, ',')) header.push_back(f);
    }
    const auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw validation_error("trials CSV lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t cell_col = col("cell"), success_col = col("success");
    std::map<std::size_t, std::pair<index_t, index_t>> agg;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) f.push_back(tok);
        auto& a = agg[static_cast<std::size_t>(std::stoull(f.at(cell_col)))];
        ++a.first;
        a.second += f.at(success_col) == "1";
    }
    return agg;
}

// ---------------------------------------------------------------- phase

/// A: at or above the computational boundary; B: between the statistical and
/// computational boundaries; C: below the statistical boundary. The
/// computational boundary is the dense rate when k^2 >= n, else the sparse
/// upper rate (never below the statistical one).
inline char region_label(index_t n, index_t k, double snr) {
    const auto th = snr_thresholds(double(n), double(n), double(k), double(k));
    if (snr < th.snr_s) return 'C';
    const bool dense = double(k) * double(k) >= double(n);
    const double snr_c = dense ? th.snr_c_dense : std::max(th.snr_s, th.snr_c_sparse);
    return snr >= snr_c ? 'A' : 'B';
}

struct PhaseCell {
    double alpha, beta;
    index_t k;
    double lambda;
    index_t trials = 0, successes = 0;
    char region = '?';
    std::string refusal;
};

struct PhaseOutput {
    std::string csv;
    std::vector<PhaseCell> cells;
    bool skipped = false;
};

inline const char* phase_header() { return "alpha,beta,n,k,lambda,sigma,algo,trials,successes,rate,region_label\n"; }

inline PhaseOutput run_phase_diagram(const ExperimentConfig& cfg) {
    cfg.validate();
    PhaseOutput out;
    std::ostringstream csv;
    csv << phase_header();
    const index_t n = cfg.n;
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
        for (std::size_t b = 0; b < cfg.betas.size(); ++b) {
            PhaseCell cell;
            cell.alpha = cfg.alphas[a];
            cell.beta = cfg.betas[b];
            cell.k = std::clamp<index_t>(static_cast<index_t>(std::llround(std::pow(double(n), cell.alpha))), 1, n);
            cell.lambda = cfg.sigma * std::pow(double(n), -cell.beta);
            cell.region = region_label(n, cell.k, cell.lambda / cfg.sigma);
            const CellParams p{n, n, cell.k, cell.k, 1, cell.lambda, cfg.sigma};
            cell.refusal = cell_refusal(cfg, p);
            csv << format_double(cell.alpha) << ',' << format_double(cell.beta) << ',' << n << ',' << cell.k << ','
                << format_double(cell.lambda) << ',' << format_double(cfg.sigma) << ',' << to_string(cfg.algo) << ',';
            if (!cell.refusal.empty()) {
                out.skipped = true;
                csv << cfg.trials << ",NA,NA," << cell.region << '\n';
                out.cells.push_back(cell);
                continue;
            }
            const auto recs = run_cell(cfg, p, [&](index_t t) {
                return derive_seed(cfg.master_seed, {std::uint64_t(a), std::uint64_t(b), std::uint64_t(t)});
            });
            cell.trials = cfg.trials;
            for (const auto& r : recs) cell.successes += r.success;
            csv << cell.trials << ',' << cell.successes << ',' << format_double(double(cell.successes) / double(cell.trials))
                << ',' << cell.region << '\n';
            out.cells.push_back(cell);
        }
    }
    out.csv = csv.str();
    return out;
}

// ---------------------------------------------------------------- reduce

struct ReduceOutput {
    std::string csv;
    index_t trials = 0, successes = 0;
};

inline ReduceOutput run_reduction(const ExperimentConfig& cfg) {
    cfg.validate();
    const ReductionLocalizer loc = reduction_localizer_from_string(cfg.reduce_localizer);
    std::vector<ReductionOutcome> outs(static_cast<std::size_t>(cfg.trials));
    std::vector<double> ms(outs.size());
    parallel_for(outs.size(), cfg.workers, [&](std::size_t t) {
        const auto t0 = std::chrono::steady_clock::now();
        outs[t] = end_to_end_reduction(cfg.reduce_N, cfg.reduce_kappa, cfg.reduce_l, loc, derive_seed(cfg.master_seed, {t}));
        ms[t] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    });
    ReduceOutput out;
    std::ostringstream csv;
    csv << "trial,seed,N,kappa,l,localizer,clique_size,candidate_size,recovered_size,success,failure"
        << (cfg.timing ? ",wall_time_ms" : "") << '\n';
    for (std::size_t t = 0; t < outs.size(); ++t) {
        const auto& o = outs[t];
        const auto cand = o.diagnostics.find("candidate_size");
        csv << t << ',' << derive_seed(cfg.master_seed, {t}) << ',' << cfg.reduce_N << ',' << format_double(cfg.reduce_kappa)
            << ',' << cfg.reduce_l << ',' << cfg.reduce_localizer << ',' << o.clique.size() << ','
            << (cand == o.diagnostics.end() ? std::string("NA") : format_double(cand->second)) << ',' << o.recovered.size()
            << ',' << (o.success ? 1 : 0) << ",\"" << o.failure << '"';
        if (cfg.timing) csv << ',' << format_double(ms[t]);
        csv << '\n';
        out.successes += o.success;
    }
    out.trials = cfg.trials;
    out.csv = csv.str();
    return out;
}

// ---------------------------------------------------------------- threshold fit

struct ThresholdFit {
    double lambda_star = 0.0;
    std::vector<std::pair<double, double>> evaluations;  // (lambda, rate) in evaluation order
    bool bracketed = false;
};

/// Geometric bisection for the lambda where rate(lambda) crosses `target`.
/// The bracket [lo, hi] is widened by factors of 2 (at most 10 times) until
/// rate(lo) < target <= rate(hi).
inline ThresholdFit fit_success_threshold(const std::function<double(double)>& rate, double lo, double hi, int steps,
                                          double target = 0.5) {
    if (!(lo > 0.0 && hi > lo)) throw std::domain_error("fit_success_threshold: need 0 < lo < hi");
    ThresholdFit fit;
    auto eval = [&](double l) {
        const double r = rate(l);
        fit.evaluations.emplace_back(l, r);
        return r;
    };
    double r_lo = eval(lo);
    for (int w = 0; r_lo >= target && w < 10; ++w) r_lo = eval(lo /= 2.0);
    double r_hi = eval(hi);
    for (int w = 0; r_hi < target && w < 10; ++w) r_hi = eval(hi *= 2.0);
    fit.bracketed = r_lo < target && r_hi >= target;
    for (int s = 0; s < steps; ++s) {
        const double mid = std::sqrt(lo * hi);
        (eval(mid) >= target ? hi : lo) = mid;
    }
    fit.lambda_star = std::sqrt(lo * hi);
    return fit;
}

/// Success rate of `cfg.algo` at one lambda with common random numbers:
/// trial t always uses derive_seed(master, {t}).
inline double success_rate_at(const ExperimentConfig& cfg, double lambda) {
    const CellParams p{cfg.m, cfg.n, cfg.k_m, cfg.k_n, cfg.r, lambda, cfg.sigma};
    const auto recs = run_cell(cfg, p, [&](index_t t) { return derive_seed(cfg.master_seed, {std::uint64_t(t)}); });
    index_t ok = 0;
    for (const auto& r : recs) ok += r.success;
    return double(ok) / double(cfg.trials);
}

}  // namespace subloc
