#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gwlab/experiments.hpp"

namespace {

void print_report(const gwlab::Report& rep) {
    std::printf("experiment %s  config_hash=%s\n", rep.id.c_str(), rep.config_hash.c_str());
    std::printf("%-58s %14s %14s %9s %6s\n", "row", "predicted", "observed", "ratio", "pass");
    for (const auto& r : rep.rows) {
        std::printf("%-58s %14.6g %14.6g %9.4f %6s\n", r.name.c_str(), r.predicted, r.observed, r.ratio,
                    r.checked ? (r.pass ? "ok" : "FAIL") : "-");
    }
    std::printf("=> %s\n", rep.pass ? "PASS" : "FAIL");
}

int run_one(gwlab::ExperimentConfig cfg) {
    const gwlab::Report rep = gwlab::run_experiment(cfg);
    print_report(rep);
    return rep.pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gwlab - exact and Monte Carlo laboratory for critical Galton-Watson small deviations"};
    app.require_subcommand(1);

    std::string config_path, out_dir, experiment_id;
    std::int64_t seed = -1;
    int jobs = 0;

    auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("--config", config_path, "path to config JSON")->required();
    run->add_option("--out", out_dir, "output directory for CSV/JSON artifacts");
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--jobs", jobs, "worker threads for Monte Carlo experiments");

    auto* verify = app.add_subcommand("verify", "run the built-in configuration for an experiment id");
    verify
        ->add_option("experiment", experiment_id,
                     "thm1|thm2|corollary|stationarity|tauberian|bell_bound|integral_lemmas|"
                     "derivative_lemmas|zubkov|finite_variance")
        ->required();
    verify->add_option("--out", out_dir, "output directory for CSV/JSON artifacts");
    verify->add_option("--seed", seed, "override the default seed");
    verify->add_option("--jobs", jobs, "worker threads for Monte Carlo experiments");

    CLI11_PARSE(app, argc, argv);

    try {
        nlohmann::json j;
        if (run->parsed()) {
            std::ifstream is(config_path);
            if (!is) {
                std::cerr << "error: cannot open config " << config_path << "\n";
                return 1;
            }
            is >> j;
        } else {
            j = gwlab::default_config(experiment_id);
        }
        gwlab::ExperimentConfig cfg = gwlab::parse_config(j);
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (jobs > 0) cfg.jobs = jobs;
        cfg.out_dir = out_dir;
        return run_one(std::move(cfg));
    } catch (const gwlab::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
