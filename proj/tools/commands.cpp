#include "commands.hpp"

#include "config.hpp"

#include "rtgp/csv.hpp"
#include "rtgp/decode.hpp"
#include "rtgp/draws_io.hpp"
#include "rtgp/error.hpp"
#include "rtgp/grid.hpp"
#include "rtgp/pipeline.hpp"
#include "rtgp/session_io.hpp"
#include "rtgp/simulate.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace rtgp::cli {

namespace {

RunConfig load_config(const std::string& path)
{
    return path.empty() ? RunConfig::from_string("") : RunConfig::load(path);
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw FormatError(FormatError::Code::io, "cannot create output directory " + dir);
    }
}

std::string in_dir(const std::string& dir, const std::string& name)
{
    return (fs::path(dir) / name).string();
}

void write_timing(const std::string& dir, std::chrono::steady_clock::time_point start)
{
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "wall_seconds = %.3f\n", secs);
    write_file_atomic(in_dir(dir, "timing.txt"), buf);
}

void write_truth_csv(const SupportMask& mask, const std::string& path)
{
    CsvWriter csv({"channel", "time_index", "active"});
    for (Eigen::Index k = 0; k < mask.rows(); ++k) {
        for (Eigen::Index t = 0; t < mask.cols(); ++t) {
            csv.add(static_cast<long>(k + 1)).add(static_cast<long>(t + 1)).add(static_cast<long>(mask(k, t)));
            csv.end_row();
        }
    }
    csv.save(path);
}

SupportMask read_truth_csv(const std::string& path, int K, int T)
{
    const CsvTable table = read_csv(path);
    const int ck = table.column("channel");
    const int ct = table.column("time_index");
    const int ca = table.column("active");
    if (ck < 0 || ct < 0 || ca < 0) {
        throw FormatError(FormatError::Code::dimension_mismatch, path + ": need channel,time_index,active columns");
    }
    SupportMask mask = SupportMask::Zero(K, T);
    for (const auto& row : table.rows) {
        const int k = std::stoi(row[static_cast<std::size_t>(ck)]);
        const int t = std::stoi(row[static_cast<std::size_t>(ct)]);
        if (k < 1 || k > K || t < 1 || t > T) {
            throw StructuralError(path + ": truth mask index outside the session's K x T");
        }
        mask(k - 1, t - 1) = std::stoi(row[static_cast<std::size_t>(ca)]) != 0;
    }
    return mask;
}

}  // namespace

void cmd_simulate(const SimulateArgs& args)
{
    const RunConfig cfg = RunConfig::load(args.config);
    SimConfig sim = cfg.sim({"alpha", "tau2", "sigma2", "seed"});
    if (args.seed) {
        sim.seed = *args.seed;
    }
    ensure_dir(args.out_dir);
    const SessionData calibration = generate_session(sim, 0);
    const SessionData test = generate_session(sim, 1);
    save_session(calibration, in_dir(args.out_dir, "calibration.eegs"));
    save_session(test, in_dir(args.out_dir, "test.eegs"));
    write_truth_csv(truth_support(sim), in_dir(args.out_dir, "truth.csv"));

    Echo echo;
    echo_sim(echo, sim);
    write_file_atomic(in_dir(args.out_dir, "config.ini"), render_ini(echo));
    Echo manifest{{"manifest",
                   {{"command", "simulate"},
                    {"version", kVersion},
                    {"seed", std::to_string(sim.seed)},
                    {"calibration", "calibration.eegs"},
                    {"test", "test.eegs"},
                    {"truth", "truth.csv"},
                    {"flashes_per_session", std::to_string(calibration.n())},
                    {"target_text", sim.text}}}};
    write_file_atomic(in_dir(args.out_dir, "manifest.ini"), render_ini(manifest));
}

void cmd_fit(const FitArgs& args)
{
    const auto start = std::chrono::steady_clock::now();
    const RunConfig cfg = load_config(args.config);
    const KernelConfig kernel = cfg.kernel();
    RtgpConfig rtgp = cfg.rtgp();
    if (args.seed) {
        rtgp.seed = *args.seed;
    }
    const SessionData session = load_session(args.session);
    if (!session.labeled()) {
        throw InvalidInput("fit: session " + args.session + " is not labeled");
    }
    ensure_dir(args.out_dir);
    const FitResult fit = fit_rtgp(session, kernel, rtgp);
    save_draws(fit.draws, in_dir(args.out_dir, "draws.rtgp"));

    const bool kl_ok = fit.report.variance_fraction >= kernel.variance_threshold;
    const bool cache_ok = fit.report.max_mu_cache_error <= 1e-8;
    Echo report{{"fit",
                 {{"rho", format_double(fit.report.rho)},
                  {"L", std::to_string(fit.report.L)},
                  {"variance_fraction", format_double(fit.report.variance_fraction)},
                  {"reconstruction_error", format_double(fit.report.reconstruction_error)},
                  {"max_mu_cache_error", format_double(fit.report.max_mu_cache_error)},
                  {"draws", std::to_string(fit.draws.D())},
                  {"standardization_degenerate", fit.report.standardization_degenerate ? "true" : "false"},
                  {"interaction_degenerate", fit.report.interaction_degenerate ? "true" : "false"},
                  {"kl_bound_check", kl_ok ? "pass" : "fail"},
                  {"cache_coherence_check", cache_ok ? "pass" : "fail"}}}};
    write_file_atomic(in_dir(args.out_dir, "fit_report.ini"), render_ini(report));

    Echo echo;
    echo_kernel(echo, kernel);
    echo_rtgp(echo, rtgp);
    write_file_atomic(in_dir(args.out_dir, "config.ini"), render_ini(echo));
    write_timing(args.out_dir, start);
}

void cmd_evaluate(const EvaluateArgs& args)
{
    const RunConfig cfg = load_config(args.config);
    const auto settings = cfg.evaluate();
    const PosteriorDraws draws = load_draws(args.draws);
    const SessionData session = load_session(args.session);

    std::string truth_text = args.text;
    if (truth_text.empty()) {
        if (!session.labeled()) {
            throw InvalidInput("evaluate: unlabeled session needs --text");
        }
        truth_text = session.target_text();
    }
    if (static_cast<int>(truth_text.size()) != session.R) {
        throw InvalidInput("evaluate: target text length differs from the session's character count");
    }

    const Eigen::VectorXd scores = score_flashes(draws, session);
    const ScoreTable table = ScoreTable::from_flashes(session, scores);
    const DecodeResult decoded = decode_session(table, truth_text, session.layout);
    const std::vector<double> utility = utility_curve(decoded.accuracy, session.timing, session.J);

    std::optional<SupportMask> truth;
    if (!args.truth.empty()) {
        truth = read_truth_csv(args.truth, draws.K, draws.T);
    }
    std::vector<Eigen::VectorXd> pair_maps;
    const InclusionMaps inclusion = posterior_inclusion(draws);
    if (draws.q > 0) {
        pair_maps.push_back(inclusion.zeta);
    }
    for (const auto& path : args.subject_draws) {
        const PosteriorDraws other = load_draws(path);
        if (other.q != draws.q) {
            throw StructuralError("evaluate: subject draws " + path + " differ in pair count");
        }
        if (other.q > 0) {
            pair_maps.push_back(posterior_inclusion(other).zeta);
        }
    }

    ensure_dir(args.out_dir);
    CsvWriter score_csv({"r", "s", "j", "score"});
    for (int i = 0; i < session.n(); ++i) {
        const auto& f = session.flashes[static_cast<std::size_t>(i)];
        score_csv.add(f.r).add(f.s).add(f.j).add(scores(i)).end_row();
    }
    score_csv.save(in_dir(args.out_dir, "scores.csv"));

    CsvWriter decoded_csv({"r", "budget", "row", "col", "symbol", "target", "correct"});
    for (int r = 0; r < session.R; ++r) {
        for (int s = 0; s < session.S; ++s) {
            const auto& cell = decoded.predicted[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)];
            decoded_csv.add(r + 1).add(s + 1).add(cell.row).add(cell.col).add(std::string(1, cell.symbol));
            decoded_csv.add(std::string(1, truth_text[static_cast<std::size_t>(r)]));
            decoded_csv.add(decoded.correct[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] ? 1 : 0);
            decoded_csv.end_row();
        }
    }
    decoded_csv.save(in_dir(args.out_dir, "decoded.csv"));

    write_accuracy_csv(decoded.accuracy, in_dir(args.out_dir, "accuracy.csv"));
    write_utility_csv(utility, in_dir(args.out_dir, "utility.csv"));
    write_selection_csv(inclusion.beta, in_dir(args.out_dir, "selection.csv"));

    if (!pair_maps.empty()) {
        CsvWriter pair_prob({"k1", "k2", "prob"});
        for (Eigen::Index m = 0; m < inclusion.zeta.size(); ++m) {
            const auto [a, b] = pair_channels(static_cast<int>(m), draws.K);
            pair_prob.add(a + 1).add(b + 1).add(inclusion.zeta(m)).end_row();
        }
        pair_prob.save(in_dir(args.out_dir, "pair_selection.csv"));
        const Eigen::VectorXd pct = pair_percentiles(pair_maps);
        write_pair_csv(pct, draws.K, in_dir(args.out_dir, "pairs.csv"));
        write_pair_csv(pct, draws.K, in_dir(args.out_dir, "pairs_display.csv"), settings.pair_display_percentile);
    }

    if (truth) {
        const SupportMask est = support_from_draws(draws, settings.support_rule);
        CsvWriter support({"channel", "eswr", "eewr"});
        for (int k = 0; k < draws.K; ++k) {
            const auto a = eswr(est, *truth, k);
            const auto b = eewr(est, *truth, k);
            support.add(k + 1).add(a ? format_double(*a) : "NA").add(b ? format_double(*b) : "NA").end_row();
        }
        support.save(in_dir(args.out_dir, "support.csv"));
    }

    Echo echo;
    echo_evaluate(echo, settings);
    write_file_atomic(in_dir(args.out_dir, "config.ini"), render_ini(echo));
}

void cmd_grid(const GridArgs& args)
{
    const auto start = std::chrono::steady_clock::now();
    const RunConfig cfg = RunConfig::load(args.config);
    GridConfig grid = cfg.grid({"alphas", "tau2s", "sigma2s", "replicates", "methods"});
    if (args.seed) {
        grid.seed = *args.seed;
    }
    ensure_dir(args.out_dir);
    const std::vector<GridRow> rows = run_grid(grid);
    write_grid_csv(rows, grid.sim, in_dir(args.out_dir, "results.csv"));
    write_grid_summary_csv(summarize_grid(rows), grid.sim, in_dir(args.out_dir, "summary.csv"));

    Echo echo;
    echo_sim(echo, grid.sim);
    echo_kernel(echo, grid.settings.kernel);
    echo_rtgp(echo, grid.settings.rtgp);
    echo_swlda(echo, grid.settings.swlda);
    echo_evaluate(echo, RunConfig::EvaluateSettings{grid.settings.support_rule, cfg.evaluate().pair_display_percentile});
    echo_grid(echo, grid);
    write_file_atomic(in_dir(args.out_dir, "config.ini"), render_ini(echo));

    long chains = 0;
    for (Method m : grid.methods) {
        chains += m == Method::swlda ? 0 : 1;
    }
    chains *= static_cast<long>(grid.cell_count()) * grid.replicates;
    long failed = 0;
    for (const auto& r : rows) {
        failed += r.error.empty() ? 0 : 1;
    }
    Echo manifest{{"manifest",
                   {{"command", "grid"},
                    {"version", kVersion},
                    {"seed", std::to_string(grid.seed)},
                    {"configs", std::to_string(grid.cell_count())},
                    {"replicates", std::to_string(grid.replicates)},
                    {"rows", std::to_string(rows.size())},
                    {"failed_rows", std::to_string(failed)},
                    {"mcmc_chains", std::to_string(chains)},
                    {"long_running", chains > 50 ? "true" : "false"},
                    {"results", "results.csv"},
                    {"summary", "summary.csv"}}}};
    write_file_atomic(in_dir(args.out_dir, "manifest.ini"), render_ini(manifest));
    write_timing(args.out_dir, start);
}

int guarded(const std::string& command, const std::function<void()>& fn)
{
    try {
        fn();
        return kOk;
    } catch (const NumericalFailure& e) {
        std::cerr << "rtgp " << command << ": numerical failure: " << e.what() << '\n';
        return kNumericError;
    } catch (const FormatError& e) {
        std::cerr << "rtgp " << command << ": I/O error: " << e.what() << '\n';
        return kIoError;
    } catch (const Error& e) {
        std::cerr << "rtgp " << command << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "rtgp " << command << ": unexpected error: " << e.what() << '\n';
        return kNumericError;
    }
}

}  // namespace rtgp::cli
