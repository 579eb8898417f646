#include "support.hpp"

#include "rtgp/error.hpp"
#include "rtgp/grid.hpp"
#include "rtgp/simulate.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>

using namespace rtgp;

namespace {

std::string repeated_text(int R)
{
    const std::string base = "THE_QUICK_BROWN_FOX";
    std::string out;
    for (int r = 0; r < R; ++r) {
        out += base[static_cast<std::size_t>(r) % base.size()];
    }
    return out;
}

// Sample covariance of signal minus template over every flash of one label.
Eigen::MatrixXd residual_covariance(const SessionData& s, const EvokedTemplates& tpl, Label label, long* count)
{
    const int K = s.K;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(K);
    long n = 0;
    for (const auto& f : s.flashes) {
        if (f.y != label) {
            continue;
        }
        const Eigen::MatrixXd res = f.signal.cast<double>() - (label == Label::target ? tpl.target : tpl.nontarget);
        for (int t = 0; t < s.T; ++t) {
            acc += res.col(t) * res.col(t).transpose();
            mean += res.col(t);
            ++n;
        }
    }
    mean /= double(n);
    *count = n;
    return acc / double(n) - mean * mean.transpose();
}

Eigen::MatrixXd to_correlation(const Eigen::MatrixXd& cov)
{
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    return cov.cwiseQuotient(sd * sd.transpose());
}

}  // namespace

TEST_CASE("reference correlation matrices are valid")
{
    for (const Eigen::MatrixXd& m : {reference_target_correlation(), reference_nontarget_correlation()}) {
        CHECK_NOTHROW(validate_correlation(m, "m"));
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff() > 0.0);
    }
    CHECK(reference_target_correlation()(0, 1) == 0.7);
    CHECK(reference_nontarget_correlation()(0, 1) == 0.1);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
    bad(0, 1) = bad(1, 0) = 0.9;
    bad(0, 2) = bad(2, 0) = 0.9;
    bad(1, 2) = bad(2, 1) = -0.9;
    CHECK_THROWS_AS(validate_correlation(bad, "bad"), InvalidInput);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
    asym(0, 1) = 0.2;
    CHECK_THROWS_AS(validate_correlation(asym, "asym"), InvalidInput);
    CHECK_THROWS_AS(validate_correlation(2.0 * Eigen::MatrixXd::Identity(2, 2), "diag"), InvalidInput);
}

TEST_CASE("config validation")
{
    SimConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SimConfig bad = cfg;
    bad.text = "SHORT";
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.T = 10;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.text[0] = '#';
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.sigma_target(0, 1) = bad.sigma_target(1, 0) = 1.5;
    CHECK_THROWS_AS(generate_session(bad), InvalidInput);
}

TEST_CASE("template examples")
{
    SimConfig cfg;
    cfg.T = 100;
    cfg.alpha = 2.5;
    const EvokedTemplates tpl = make_templates(cfg);
    CHECK(tpl.target.row(0).maxCoeff() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(tpl.nontarget.row(0).maxCoeff() == doctest::Approx(2.0).epsilon(1e-12));
    for (int k = 0; k < 4; ++k) {
        CHECK(tpl.target.row(k).maxCoeff() / tpl.nontarget.row(k).maxCoeff() == doctest::Approx(2.5));
    }
    CHECK(tpl.target.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tpl.nontarget.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);

    cfg.alpha = 1.0;
    const EvokedTemplates same = make_templates(cfg);
    CHECK(same.target == same.nontarget);

    // Default grid: peaks land between samples, within 1%.
    const EvokedTemplates coarse = make_templates(SimConfig{});
    CHECK(std::abs(coarse.nontarget.row(0).maxCoeff() - 2.0) < 0.02);
    CHECK_THROWS_AS(make_templates([] {
                        SimConfig c;
                        c.T = 19;
                        return c;
                    }()),
                    InvalidInput);
}

TEST_CASE("truth support")
{
    SimConfig cfg;
    const SupportMask truth = truth_support(cfg);
    CHECK(truth.rows() == 6);
    CHECK(truth.cols() == 50);
    for (int k = 0; k < 4; ++k) {
        const int active = truth.row(k).cast<int>().sum();
        CHECK(active > 0);
        CHECK(active < 50);
    }
    CHECK(truth.bottomRows(2).cast<int>().sum() == 0);
    cfg.alpha = 1.0;
    CHECK(truth_support(cfg).cast<int>().sum() == 0);
    CHECK(eswr_channels(SimConfig{}) == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("noiseless limit")
{
    SimConfig cfg;
    cfg.tau2 = 0.0;
    cfg.sigma2 = 0.0;
    cfg.R = 3;
    cfg.text = "A7_";
    const SessionData s = generate_session(cfg);
    const EvokedTemplates tpl = make_templates(cfg);
    const Eigen::MatrixXf target = tpl.target.cast<float>();
    const Eigen::MatrixXf nontarget = tpl.nontarget.cast<float>();
    Eigen::VectorXd first_target_z;
    for (const auto& f : s.flashes) {
        if (f.y == Label::target) {
            CHECK(f.signal == target);
            if (first_target_z.size() == 0) {
                first_target_z = f.interaction;
            }
            CHECK(f.interaction == first_target_z);
        } else {
            CHECK(f.signal == nontarget);
        }
    }
}

TEST_CASE("label structure and stimulus permutations")
{
    SimConfig cfg;
    const SessionData s = generate_session(cfg, 3);
    CHECK(s.n() == 19 * 5 * 12);
    CHECK_NOTHROW(s.validate());
    CHECK(s.target_text() == cfg.text);
    for (int r = 1; r <= s.R; ++r) {
        const auto cell = *s.layout.locate(cfg.text[static_cast<std::size_t>(r - 1)]);
        for (int sq = 1; sq <= s.S; ++sq) {
            std::set<int> stimuli;
            int targets = 0;
            for (const auto& f : s.flashes) {
                if (f.r != r || f.s != sq) {
                    continue;
                }
                stimuli.insert(f.j);
                if (f.y == Label::target) {
                    ++targets;
                    CHECK((f.j == cell.first || f.j == cell.second + 6));
                }
            }
            CHECK(stimuli.size() == 12);
            CHECK(targets == 2);
        }
    }
}

TEST_CASE("sequences are shuffled")
{
    const SessionData s = generate_session(SimConfig{});
    int in_order = 0;
    for (std::size_t base = 0; base < s.flashes.size(); base += 12) {
        bool sorted = true;
        for (std::size_t i = 1; i < 12; ++i) {
            sorted = sorted && s.flashes[base + i].j > s.flashes[base + i - 1].j;
        }
        in_order += sorted;
    }
    CHECK(in_order < 2);
}

TEST_CASE("generation is deterministic per seed and stream")
{
    SimConfig cfg;
    cfg.R = 2;
    cfg.text = "HI";
    const SessionData a = generate_session(cfg, 0);
    const SessionData b = generate_session(cfg, 0);
    const SessionData c = generate_session(cfg, 1);
    bool all_same = true;
    bool any_diff = false;
    for (std::size_t i = 0; i < a.flashes.size(); ++i) {
        all_same = all_same && a.flashes[i].signal == b.flashes[i].signal && a.flashes[i].j == b.flashes[i].j;
        any_diff = any_diff || a.flashes[i].signal != c.flashes[i].signal;
    }
    CHECK(all_same);
    CHECK(any_diff);
}

TEST_CASE("target residual correlation reproduces the target matrix")
{
    SimConfig cfg;
    cfg.tau2 = 1.0;
    cfg.sigma2 = 0.0;
    cfg.R = 100;
    cfg.S = 10;
    cfg.text = repeated_text(100);
    const SessionData s = generate_session(cfg);
    long n = 0;
    const Eigen::MatrixXd corr = to_correlation(residual_covariance(s, make_templates(cfg), Label::target, &n));
    CHECK(n >= 100000);
    CHECK((corr - reference_target_correlation()).cwiseAbs().maxCoeff() < 0.02);
    CHECK(std::abs(corr(0, 1) - 0.7) < 0.02);
}

TEST_CASE("residual covariances separate by label")
{
    SimConfig cfg;
    cfg.R = 40;
    cfg.text = repeated_text(40);
    const SessionData s = generate_session(cfg);
    const EvokedTemplates tpl = make_templates(cfg);
    const Eigen::MatrixXd c1 = 9.0 * reference_target_correlation();
    const Eigen::MatrixXd c0 = 9.0 * reference_nontarget_correlation();
    long n1 = 0, n0 = 0;
    const Eigen::MatrixXd t = residual_covariance(s, tpl, Label::target, &n1);
    const Eigen::MatrixXd u = residual_covariance(s, tpl, Label::nontarget, &n0);
    CHECK(n1 >= 10000);
    CHECK((t - c1).norm() < (t - c0).norm());
    CHECK((u - c0).norm() < (u - c1).norm());
    // Total variance per channel is tau2 + sigma2.
    CHECK(std::abs(t(0, 0) - 29.0) < 1.5);
}

TEST_CASE("interaction feature shifts with the target correlation")
{
    SimConfig cfg;
    cfg.R = 20;
    cfg.text = repeated_text(20);
    const SessionData s = generate_session(cfg);
    double z1 = 0.0, z0 = 0.0;
    int n1 = 0, n0 = 0;
    for (const auto& f : s.flashes) {
        if (f.y == Label::target) {
            z1 += f.interaction(pair_index(0, 1, 6));
            ++n1;
        } else {
            z0 += f.interaction(pair_index(0, 1, 6));
            ++n0;
        }
    }
    CHECK(n1 + n0 >= 1000);
    CHECK(z1 / n1 > z0 / n0);
}

TEST_CASE("grid bookkeeping and determinism")
{
    GridConfig g;
    g.replicates = 2;
    g.methods = {Method::swlda};
    g.sim.R = 3;
    g.sim.S = 2;
    g.sim.text = "THE";
    g.seed = 9;
    const auto rows = run_grid(g);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].replicate == 1);
    CHECK(rows[1].replicate == 2);
    for (const auto& r : rows) {
        CHECK(r.error.empty());
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
        CHECK(r.eswr.size() == 6);
        CHECK_FALSE(r.eswr[4].has_value());
        CHECK(r.eewr[4].has_value());
    }
    const auto summary = summarize_grid(rows);
    REQUIRE(summary.size() == 1);
    CHECK(summary[0].completed == 2);
    CHECK(summary[0].accuracy_mean == doctest::Approx(0.5 * (rows[0].accuracy + rows[1].accuracy)));

    const auto again = run_grid(g);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(again[i].accuracy == rows[i].accuracy);
        CHECK(again[i].eewr == rows[i].eewr);
    }

    GridConfig wide = g;
    wide.alphas = {1.5, 2.5};
    wide.tau2s = {1.0, 9.0};
    wide.replicates = 1;
    wide.methods = {Method::swlda, Method::rtgp_probit};
    wide.settings.kernel.rho = 10.0;
    wide.settings.rtgp.iterations = 60;
    wide.settings.rtgp.burn_in = 30;
    wide.settings.rtgp.thin = 3;
    wide.settings.rtgp.xi2.warm_iters = 10;
    wide.workers = 1;
    const auto serial = run_grid(wide);
    wide.workers = 4;
    const auto parallel = run_grid(wide);
    REQUIRE(serial.size() == 8);
    REQUIRE(parallel.size() == 8);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].alpha == parallel[i].alpha);
        CHECK(serial[i].method == parallel[i].method);
        CHECK(serial[i].accuracy == parallel[i].accuracy);
        CHECK(serial[i].eswr == parallel[i].eswr);
        CHECK(serial[i].error.empty());
    }
    CHECK(serial[0].alpha == 1.5);
    CHECK(serial[0].tau2 == 1.0);
    CHECK(serial[7].alpha == 2.5);
    CHECK(serial[7].tau2 == 9.0);
    CHECK(summarize_grid(serial).size() == 8);
}

TEST_CASE("grid records a failing cell without aborting")
{
    GridConfig g;
    g.methods = {Method::swlda};
    g.sim.R = 2;
    g.sim.S = 1;
    g.sim.text = "AB";
    g.alphas = {-1.0, 2.0};
    const auto rows = run_grid(g);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].error.empty());
    CHECK(std::isnan(rows[0].accuracy));
    CHECK(rows[1].error.empty());
    const auto summary = summarize_grid(rows);
    CHECK(summary[0].completed == 0);
    CHECK(summary[1].completed == 1);

    const auto dir = test::scratch("grid_csv");
    write_grid_csv(rows, g.sim, (dir / "g.csv").string());
    CHECK(std::filesystem::file_size(dir / "g.csv") > 0);
    CHECK_THROWS_AS(run_grid([] {
                        GridConfig c;
                        c.replicates = 0;
                        return c;
                    }()),
                    ConfigError);
}

TEST_CASE("cell seeds ignore scheduling and separate cells")
{
    CHECK(cell_seed(1, 2.5, 9.0, 20.0, 1) == cell_seed(1, 2.5, 9.0, 20.0, 1));
    CHECK(cell_seed(1, 2.5, 9.0, 20.0, 1) != cell_seed(1, 2.5, 9.0, 20.0, 2));
    CHECK(cell_seed(1, 2.5, 9.0, 20.0, 1) != cell_seed(1, 2.5, 1.0, 20.0, 1));
    CHECK(cell_seed(1, 2.5, 9.0, 20.0, 1) != cell_seed(2, 2.5, 9.0, 20.0, 1));
}
