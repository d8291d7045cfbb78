#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subloc/subloc.hpp"

using namespace subloc;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;

struct Overrides {
    std::string config;
    std::uint64_t seed = 0;
    index_t trials = 0;
    std::string algo;
    std::string out;
    std::string input;
    std::string units;
    std::string noise;
    unsigned workers = 0;
    bool timing = false;
    index_t m = 0, n = 0, k_m = 0, k_n = 0, r = 0;
    double sigma = -1.0;
    std::vector<double> lambdas, alphas, betas;
    std::string kind = "submatrix";
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON experiment config");
    app->add_option("--seed", o.seed, "master seed");
    app->add_option("--trials", o.trials, "trials per cell")->check(CLI::PositiveNumber);
    app->add_option("--algo", o.algo, "spectral | denoised | multi | search | convex");
    app->add_option("--out", o.out, "output path");
    app->add_option("--input", o.input, "input matrix (.csv or .bin)");
    app->add_option("--units", o.units, "lambda units: absolute | snrc");
    app->add_option("--noise", o.noise, "gaussian | rademacher | uniform");
    app->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    app->add_flag("--timing", o.timing, "add wall-clock column");
    app->add_option("-m,--rows", o.m, "rows");
    app->add_option("-n,--cols", o.n, "columns");
    app->add_option("--km", o.k_m, "block rows");
    app->add_option("--kn", o.k_n, "block columns");
    app->add_option("-r,--blocks", o.r, "number of blocks");
    app->add_option("--sigma", o.sigma, "noise level");
    app->add_option("--lambda", o.lambdas, "signal strength grid")->delimiter(',');
    app->add_option("--alpha", o.alphas, "alpha grid")->delimiter(',');
    app->add_option("--beta", o.betas, "beta grid")->delimiter(',');
}

ExperimentConfig build_config(const std::string& mode, const CLI::App* app, const Overrides& o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : config_from_json(read_json_file(o.config));
    c.mode = mode;
    auto given = [&](const char* name) { return app->count(name) > 0; };
    if (given("--seed")) c.master_seed = o.seed;
    if (given("--trials")) c.trials = o.trials;
    if (given("--algo")) c.algo = algorithm_from_string(o.algo);
    if (given("--out")) c.output = o.out;
    if (given("--input")) c.input = o.input;
    if (given("--units")) {
        if (o.units != "snrc" && o.units != "absolute") throw validation_error("--units must be 'snrc' or 'absolute'");
        c.lambda_in_snrc = o.units == "snrc";
    }
    if (given("--noise")) c.noise = noise_family_from_string(o.noise);
    if (given("--workers")) c.workers = o.workers;
    if (o.timing) c.timing = true;
    if (given("--rows")) c.m = o.m;
    if (given("--cols")) c.n = o.n;
    if (given("--km")) c.k_m = o.k_m;
    if (given("--kn")) c.k_n = o.k_n;
    if (given("--blocks")) c.r = o.r;
    if (given("--sigma")) c.sigma = o.sigma;
    if (given("--lambda")) c.lambdas = o.lambdas;
    if (given("--alpha")) c.alphas = o.alphas;
    if (given("--beta")) c.betas = o.betas;
    c.validate();
    return c;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) std::cout << text;
    else write_text_file(path, text);
}

std::string summary_path(const std::string& out) {
    const auto dot = out.rfind('.');
    const auto slash = out.find_last_of("/\\");
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return has_ext ? out.substr(0, dot) + "_summary" + out.substr(dot) : out + "_summary.csv";
}

int cmd_gen(const ExperimentConfig& c, const std::string& kind) {
    if (c.output.empty()) throw validation_error("gen needs --out");
    if (kind == "clique") {
        const CliqueInstance g = generate_clique(c.reduce_N, c.reduce_kappa, CliqueMode::Bernoulli, c.master_seed);
        write_matrix_file(c.output, g.adjacency.cast<double>());
        json side = clique_sidecar(g);
        side["seed"] = c.master_seed;
        write_text_file(c.output + ".json", side.dump(2) + "\n");
        return 0;
    }
    if (kind != "submatrix") throw validation_error("--kind must be 'submatrix' or 'clique'");
    const double lambda = sweep_lambda(c, c.lambdas.front());
    const PlantedSignal sig = random_signal(c.m, c.n, c.k_m, c.k_n, c.r, lambda, derive_seed(c.master_seed, {0}));
    const NoiseSpec noise{c.noise, c.sigma};
    Matrix x = sample_noise(c.m, c.n, noise, derive_seed(c.master_seed, {1})) + sig.mean_matrix();
    write_matrix_file(c.output, x);
    const json side{{"signal", to_json(sig)}, {"noise", to_json(noise)}, {"seed", c.master_seed}};
    write_text_file(c.output + ".json", side.dump(2) + "\n");
    return 0;
}

int cmd_localize(const ExperimentConfig& c) {
    if (c.input.empty()) throw validation_error("localize needs --input");
    const Observation obs{read_matrix_file(c.input)};
    if (obs.data.rows() != c.m || obs.data.cols() != c.n) {
        ExperimentConfig fixed = c;
        fixed.m = obs.data.rows();
        fixed.n = obs.data.cols();
        fixed.validate();
    }
    const LocalizationResult res =
        run_algorithm(c, obs, c.k_m, c.k_n, c.r, c.sigma, derive_seed(c.master_seed, {2}));
    emit(c.output, to_json(res).dump() + "\n");
    return 0;
}

int cmd_sweep(const ExperimentConfig& c) {
    const SweepOutput out = run_sweep(c);
    if (c.output.empty()) {
        std::cout << out.summary_csv;
    } else {
        write_text_file(c.output, out.trials_csv);
        write_text_file(summary_path(c.output), out.summary_csv);
    }
    for (const auto& cell : out.cells)
        if (!cell.refusal.empty()) std::cerr << "cell " << cell.index << " skipped: " << cell.refusal << '\n';
    return out.skipped ? kExitBudget : 0;
}

int cmd_phase(const ExperimentConfig& c) {
    const PhaseOutput out = run_phase_diagram(c);
    emit(c.output, out.csv);
    return out.skipped ? kExitBudget : 0;
}

int cmd_reduce(const ExperimentConfig& c) {
    emit(c.output, run_reduction(c).csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planted submatrix localization toolkit"};
    app.require_subcommand(1);
    Overrides o;
    std::vector<CLI::App*> subs;
    for (const char* name : {"gen", "localize", "sweep", "phase", "reduce"}) {
        auto* sub = app.add_subcommand(name);
        add_common(sub, o);
        subs.push_back(sub);
    }
    subs[0]->description("draw one instance and write it with a JSON sidecar");
    subs[0]->add_option("--kind", o.kind, "submatrix | clique");
    subs[1]->description("localize the planted block(s) in a matrix");
    subs[2]->description("success rate over a lambda grid");
    subs[3]->description("success rate over an (alpha, beta) grid");
    subs[4]->description("planted-clique reduction pipeline");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        for (auto* sub : subs) {
            if (!sub->parsed()) continue;
            const std::string mode = sub->get_name();
            const ExperimentConfig c = build_config(mode, sub, o);
            if (mode == "gen") return cmd_gen(c, o.kind);
            if (mode == "localize") return cmd_localize(c);
            if (mode == "sweep") return cmd_sweep(c);
            if (mode == "phase") return cmd_phase(c);
            return cmd_reduce(c);
        }
    } catch (const budget_exceeded& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBudget;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
