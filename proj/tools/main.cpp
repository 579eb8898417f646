#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace rtgp::cli;

    CLI::App app{"Relaxed-thresholded GP classifier for P300 speller data"};
    app.require_subcommand(1);

    SimulateArgs sim;
    std::uint64_t sim_seed = 0;
    auto* simulate = app.add_subcommand("simulate", "Generate calibration and test sessions");
    simulate->add_option("--config", sim.config, "INI config with a [sim] section")->required();
    simulate->add_option("--out", sim.out_dir, "Output directory")->required();
    auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "Override sim.seed");

    FitArgs fit;
    std::uint64_t fit_seed = 0;
    auto* fitc = app.add_subcommand("fit", "Fit the model to a labeled session");
    fitc->add_option("--config", fit.config, "INI config ([kernel], [rtgp])");
    fitc->add_option("--session", fit.session, "Calibration session (.eegs)")->required();
    fitc->add_option("--out", fit.out_dir, "Output directory")->required();
    auto* fit_seed_opt = fitc->add_option("--seed", fit_seed, "Override rtgp.seed");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Decode a session and write evaluation reports");
    evaluate->add_option("--config", ev.config, "INI config ([evaluate])");
    evaluate->add_option("--draws", ev.draws, "Posterior draws (.rtgp)")->required();
    evaluate->add_option("--session", ev.session, "Test session (.eegs)")->required();
    evaluate->add_option("--truth", ev.truth, "Support mask CSV (channel,time_index,active)");
    evaluate->add_option("--text", ev.text, "Target text when the session is unlabeled");
    evaluate->add_option("--subject-draws", ev.subject_draws, "Further subjects' draws for pair percentiles");
    evaluate->add_option("--out", ev.out_dir, "Output directory")->required();

    GridArgs grid;
    std::uint64_t grid_seed = 0;
    auto* gridc = app.add_subcommand("grid", "Run the simulation grid");
    gridc->add_option("--config", grid.config, "INI config with a [grid] section")->required();
    gridc->add_option("--out", grid.out_dir, "Output directory")->required();
    auto* grid_seed_opt = gridc->add_option("--seed", grid_seed, "Override grid.seed");

    app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (simulate->parsed()) {
        if (*sim_seed_opt) {
            sim.seed = sim_seed;
        }
        return guarded("simulate", [&] { cmd_simulate(sim); });
    }
    if (fitc->parsed()) {
        if (*fit_seed_opt) {
            fit.seed = fit_seed;
        }
        return guarded("fit", [&] { cmd_fit(fit); });
    }
    if (evaluate->parsed()) {
        return guarded("evaluate", [&] { cmd_evaluate(ev); });
    }
    if (gridc->parsed()) {
        if (*grid_seed_opt) {
            grid.seed = grid_seed;
        }
        return guarded("grid", [&] { cmd_grid(grid); });
    }
    std::cout << "rtgp " << kVersion << '\n';
    return kOk;
}
