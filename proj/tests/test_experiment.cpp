#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "subloc/experiment.hpp"

using namespace subloc;

namespace {

ExperimentConfig sweep_config(Algorithm algo, std::vector<double> grid, index_t trials) {
    ExperimentConfig c;
    c.mode = "sweep";
    c.m = c.n = 100;
    c.k_m = c.k_n = 20;
    c.algo = algo;
    c.lambdas = std::move(grid);
    c.trials = trials;
    c.master_seed = 2024;
    return c;
}

}  // namespace

TEST(Config, JsonRoundTrip) {
    ExperimentConfig c = sweep_config(Algorithm::Multi, {0.5, 1.0}, 7);
    c.r = 2;
    c.lambda_in_snrc = true;
    c.noise = NoiseFamily::Rademacher;
    c.master_seed = 0xFFFFFFFFFFFFFFFFull;
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
    EXPECT_EQ(back.master_seed, 0xFFFFFFFFFFFFFFFFull);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(config_from_json(json::parse(R"({"mode":"sweep","lamdas":[1]})")), validation_error);
    EXPECT_THROW(config_from_json(json::parse(R"({"algo":"magic"})")), validation_error);
    EXPECT_THROW(config_from_json(json::parse(R"({"trials":"many"})")), validation_error);
    EXPECT_THROW(config_from_json(json::parse(R"({"units":"db"})")), validation_error);
    auto c = sweep_config(Algorithm::Spectral, {}, 1);
    EXPECT_THROW(c.validate(), validation_error);
    c.lambdas = {1.0};
    c.trials = 0;
    EXPECT_THROW(c.validate(), validation_error);
    c.trials = 1;
    c.r = 2;
    EXPECT_THROW(c.validate(), validation_error);
    c.algo = Algorithm::Multi;
    EXPECT_NO_THROW(c.validate());
    c.mode = "phase";
    EXPECT_THROW(c.validate(), validation_error);
    c.mode = "dance";
    EXPECT_THROW(c.validate(), validation_error);
}

TEST(ParallelFor, CoversAllAndPropagatesErrors) {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 5) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}

TEST(Sweep, ByteIdenticalAcrossRunsAndWorkers) {
    auto c = sweep_config(Algorithm::Spectral, {0.0, 1.0, 3.0}, 12);
    const auto a = run_sweep(c);
    const auto b = run_sweep(c);
    c.workers = 3;
    const auto d = run_sweep(c);
    EXPECT_EQ(a.trials_csv, b.trials_csv);
    EXPECT_EQ(a.summary_csv, b.summary_csv);
    EXPECT_EQ(a.trials_csv, d.trials_csv);
    EXPECT_EQ(a.summary_csv, d.summary_csv);
    c.master_seed += 1;
    EXPECT_NE(run_sweep(c).trials_csv, a.trials_csv);
}

TEST(Sweep, ReaggregationMatchesSummary) {
    auto c = sweep_config(Algorithm::Spectral, {0.5, 1.5, 2.5, 4.0}, 15);
    c.lambda_in_snrc = true;
    const auto out = run_sweep(c);
    const auto agg = reaggregate_sweep(out.trials_csv);
    ASSERT_EQ(agg.size(), out.cells.size());
    for (const auto& cell : out.cells) {
        EXPECT_EQ(agg.at(cell.index).first, cell.trials);
        EXPECT_EQ(agg.at(cell.index).second, cell.successes);
    }
    EXPECT_EQ(out.summary_csv.substr(0, out.summary_csv.find('\n')),
              "cell,lambda_grid,lambda,algo,trials,successes,rate,status,reason");
}

TEST(Sweep, TimingColumnIsOptIn) {
    auto c = sweep_config(Algorithm::Spectral, {1.0}, 2);
    EXPECT_EQ(run_sweep(c).trials_csv.find("wall_time_ms"), std::string::npos);
    c.timing = true;
    EXPECT_NE(run_sweep(c).trials_csv.find("wall_time_ms"), std::string::npos);
}

TEST(Sweep, SnrcUnits) {
    auto c = sweep_config(Algorithm::Spectral, {2.0}, 1);
    c.lambda_in_snrc = true;
    c.sigma = 1.5;
    EXPECT_DOUBLE_EQ(sweep_lambda(c, 2.0), 2.0 * 1.5 * snr_thresholds(100, 100, 20, 20).snr_c_dense);
}

TEST(Sweep, NoSignalIsChanceLevel) {
    const auto out = run_sweep(sweep_config(Algorithm::Spectral, {0.0}, 100));
    EXPECT_LE(out.cells[0].rate(), 0.05);
}

TEST(Sweep, DeepEasyRegimeEveryAlgorithm) {
    for (auto algo : {Algorithm::Spectral, Algorithm::Denoised, Algorithm::Multi, Algorithm::Convex}) {
        auto c = sweep_config(algo, {100.0}, algo == Algorithm::Convex ? 20 : 100);
        c.lambda_in_snrc = true;
        const auto out = run_sweep(c);
        EXPECT_GE(out.cells[0].rate(), 0.99) << to_string(algo);
    }
}

TEST(Sweep, SearchBudgetSkipsCell) {
    auto c = sweep_config(Algorithm::Search, {1.0}, 3);
    const auto out = run_sweep(c);
    EXPECT_TRUE(out.skipped);
    EXPECT_FALSE(out.cells[0].refusal.empty());
    EXPECT_NE(out.summary_csv.find("skipped"), std::string::npos);
    c.m = c.n = 10;
    c.k_m = c.k_n = 3;
    c.lambdas = {6.0};
    const auto ok = run_sweep(c);
    EXPECT_FALSE(ok.skipped);
    EXPECT_EQ(ok.cells[0].successes, 3);
}

TEST(Phase, RegionLabels) {
    EXPECT_EQ(region_label(200, 69, 0.77), 'A');
    EXPECT_EQ(region_label(200, 69, 0.1), 'C');
    const auto th = snr_thresholds(200, 200, 69, 69);
    EXPECT_EQ(region_label(200, 69, 0.5 * (th.snr_s + th.snr_c_dense)), 'B');
    const auto sparse = snr_thresholds(10000, 10000, 10, 10);
    EXPECT_EQ(region_label(10000, 10, std::max(sparse.snr_s, sparse.snr_c_sparse) * 1.01), 'A');
}

TEST(Phase, CornerCells) {
    ExperimentConfig c;
    c.mode = "phase";
    c.n = 100;
    c.alphas = {1.0};
    c.betas = {3.0};
    c.trials = 20;
    const auto low = run_phase_diagram(c);
    EXPECT_EQ(low.cells[0].k, 100);
    EXPECT_LE(double(low.cells[0].successes) / 20.0, 0.05);

    c.n = 200;
    c.alphas = {0.8};
    c.betas = {0.05};
    c.trials = 50;
    const auto high = run_phase_diagram(c);
    EXPECT_EQ(high.cells[0].k, 69);
    EXPECT_EQ(high.cells[0].region, 'A');
    EXPECT_GE(double(high.cells[0].successes) / 50.0, 0.4);

    c.betas = {0.0};
    const auto unit = run_phase_diagram(c);
    EXPECT_EQ(unit.cells[0].region, 'A');
    EXPECT_GE(double(unit.cells[0].successes) / 50.0, 0.9);
}

TEST(Phase, CsvSchemaAndDeterminism) {
    ExperimentConfig c;
    c.mode = "phase";
    c.n = 64;
    c.alphas = {0.5, 0.8};
    c.betas = {0.0, 0.2};
    c.trials = 4;
    c.master_seed = 5;
    const auto a = run_phase_diagram(c);
    c.workers = 2;
    const auto b = run_phase_diagram(c);
    EXPECT_EQ(a.csv, b.csv);
    EXPECT_EQ(a.csv.substr(0, a.csv.find('\n')), "alpha,beta,n,k,lambda,sigma,algo,trials,successes,rate,region_label");
    EXPECT_EQ(std::count(a.csv.begin(), a.csv.end(), '\n'), 5);
}

TEST(Reduce, DeterministicCsv) {
    ExperimentConfig c;
    c.mode = "reduce";
    c.reduce_N = 200;
    c.reduce_kappa = 100;
    c.reduce_l = 1;
    c.reduce_localizer = "spectral";
    c.trials = 3;
    const auto a = run_reduction(c);
    c.workers = 2;
    EXPECT_EQ(run_reduction(c).csv, a.csv);
    EXPECT_EQ(a.successes, 3);
    c.reduce_localizer = "convex";
    EXPECT_THROW(run_reduction(c), validation_error);
}

TEST(ThresholdFit, RecoversLogisticMidpoint) {
    const auto rate = [](double l) { return 1.0 / (1.0 + std::exp(-8.0 * std::log(l / 3.0))); };
    const auto fit = fit_success_threshold(rate, 1.0, 2.0, 30);
    EXPECT_TRUE(fit.bracketed);
    EXPECT_NEAR(fit.lambda_star, 3.0, 1e-6);
    EXPECT_THROW(fit_success_threshold(rate, 0.0, 1.0, 3), std::domain_error);
}

TEST(ThresholdFit, SpectralSuccessMonotoneWithCommonSeeds) {
    auto c = sweep_config(Algorithm::Spectral, {1.0}, 40);
    double prev = -1.0;
    for (double mult : {0.5, 1.0, 2.0, 4.0}) {
        const double r = success_rate_at(c, mult * snr_thresholds(100, 100, 20, 20).snr_c_dense);
        EXPECT_GE(r, prev - 0.1);
        prev = r;
    }
    EXPECT_GE(prev, 0.95);
}
