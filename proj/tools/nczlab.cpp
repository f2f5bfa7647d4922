// Batch driver: load a configuration, run one experiment from the catalog,
// emit a machine-readable report. Exit status 0 iff every asserted check
// passed (measured-only records never fail a run).

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ncz/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nczlab - numerical laboratory for dyadic operators with noncommuting kernels"};

    std::string config_path;
    std::string experiment;
    std::string out_path;
    std::string format;
    long long seed = -1;
    int jobs = 0;
    bool list = false;

    app.add_option("--config", config_path, "configuration file (key=value lines)");
    app.add_option("--experiment", experiment, "experiment name (overrides config)");
    app.add_option("--seed", seed, "ensemble seed (overrides config)");
    app.add_option("--out", out_path, "output path (default stdout)");
    app.add_option("--format", format, "json|csv|summary (overrides config)");
    app.add_option("--jobs", jobs, "ensemble parallelism (overrides config)");
    app.add_flag("--list", list, "list experiment names and exit");

    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& name : ncz::experiment_names()) std::cout << name << "\n";
        return 0;
    }

    try {
        ncz::Config cfg;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) {
                std::cerr << "nczlab: cannot read config " << config_path << "\n";
                return 2;
            }
            std::stringstream ss;
            ss << is.rdbuf();
            cfg = ncz::parse_config(ss.str());
        }
        // Flags win over config, config wins over defaults.
        if (!experiment.empty()) cfg.experiment = experiment;
        if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
        if (!out_path.empty()) cfg.out = out_path;
        if (!format.empty()) cfg.format = format;
        if (jobs > 0) cfg.jobs = jobs;
        ncz::validate_config(cfg);

        const ncz::ExperimentResult result = ncz::run_experiment(cfg);
        ncz::emit_report(result, cfg.format, cfg.out);
        return result.failures() == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "nczlab: " << e.what() << "\n";
        return 2;
    }
}
