#include "support.hpp"

#include "rtgp/error.hpp"
#include "rtgp/gp_kernel.hpp"
#include "rtgp/sampler.hpp"

#include <doctest.h>

#include <cmath>

using namespace rtgp;

namespace {

ModelData random_model(test::Gen& gen, int K, int T, int n, bool interactions)
{
    ModelData d;
    d.K = K;
    d.T = T;
    d.X = gen.normal_matrix(n, K * T);
    d.Z = interactions ? gen.normal_matrix(n, K * (K - 1) / 2) : Eigen::MatrixXd(n, 0);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        d.y(i) = gen.coin() ? 1 : 0;
    }
    return d;
}

RtgpConfig short_config(int iterations, int burn_in, int thin)
{
    RtgpConfig cfg;
    cfg.iterations = iterations;
    cfg.burn_in = burn_in;
    cfg.thin = thin;
    cfg.xi2.warm_iters = std::min(burn_in, 20);
    return cfg;
}

// Full-rank basis so that any K x T field is reachable through e = E psi.
KLBasis full_basis(int T)
{
    const KLBasis b = build_kl_basis(unit_time_grid(T), {0.01, 2.0}, 1.0);
    REQUIRE(b.L() == T);
    return b;
}

void set_field(RtgpSampler& s, const KLBasis& basis, const Eigen::MatrixXd& E)
{
    s.state().e = E * basis.psi;
    s.rebuild_cache();
}

// mu from scratch using thresholded fields.
Eigen::VectorXd direct_mu(const ModelData& d, const RtgpState& st)
{
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d.n());
    for (int i = 0; i < d.n(); ++i) {
        for (int k = 0; k < d.K; ++k) {
            for (int t = 0; t < d.T; ++t) {
                if (std::abs(st.Etilde(k, t)) > st.omega1) {
                    mu(i) += st.E(k, t) * d.X(i, k * d.T + t) / d.p();
                }
            }
        }
        for (int m = 0; m < d.q(); ++m) {
            if (std::abs(st.etatilde(m)) > st.omega2) {
                mu(i) += st.eta(m) * d.Z(i, m) / d.q();
            }
        }
    }
    return mu;
}

}  // namespace

TEST_CASE("relaxation schedule")
{
    const Xi2Schedule s;
    CHECK(s.at(1, 1000) == 1.0);
    CHECK(s.at(200, 1000) == 1.0);
    CHECK(s.at(1000, 1000) == 1e-4);
    CHECK(s.at(2500, 1000) == 1e-4);
    CHECK(s.at(600, 1000) == doctest::Approx(0.01).epsilon(1e-12));
    for (int it = 201; it <= 1000; ++it) {
        CHECK(s.at(it, 1000) < s.at(it - 1, 1000));
    }
    // Burn-in no longer than the warm phase jumps straight to the end value.
    CHECK(s.at(250, 200) == 1e-4);
}

TEST_CASE("sampler config validation")
{
    RtgpConfig cfg = short_config(1000, 500, 5);
    CHECK(cfg.draw_count() == 100);
    CHECK_NOTHROW(cfg.validate());
    RtgpConfig bad = cfg;
    bad.burn_in = 1000;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.thin = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.thin = 600;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.xi2.warm_iters = 501;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.omega_grid.lower_quantile = 0.95;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.sigma_e2 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("model data validation")
{
    test::Gen gen(1);
    ModelData d = random_model(gen, 2, 3, 10, true);
    CHECK_NOTHROW(d.validate());
    CHECK(d.q() == 1);
    CHECK(d.x_scale() == 1.0 / 6.0);
    d.y(0) = 2;
    CHECK_THROWS_AS(d.validate(), InvalidInput);
    ModelData e = random_model(gen, 2, 3, 10, false);
    CHECK(e.z_scale() == 0.0);
    e.X.conservativeResize(Eigen::NoChange, 5);
    CHECK_THROWS_AS(e.validate(), StructuralError);

    const SessionData s = test::toy_session(3, 4, 2, 1, 3);
    const DesignMatrices design = assemble_design(s);
    CHECK(ModelData::from_design(design, 3, 4, true).q() == 3);
    CHECK(ModelData::from_design(design, 3, 4, false).q() == 0);
}

TEST_CASE("linear predictor example")
{
    ModelData d;
    d.K = 1;
    d.T = 2;
    d.X = (Eigen::MatrixXd(1, 2) << 3.0, 0.0).finished();
    d.Z = Eigen::MatrixXd(1, 0);
    d.y = Eigen::VectorXi::Ones(1);
    const KLBasis basis = full_basis(2);
    RtgpSampler s(d, basis, short_config(10, 5, 1));
    s.state().Etilde.setConstant(5.0);
    s.state().omega1 = 0.0;
    set_field(s, basis, (Eigen::MatrixXd(1, 2) << 2.0, 0.0).finished());
    CHECK(s.linear_predictor(0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.state().mu(0) == doctest::Approx(3.0).epsilon(1e-12));
    // Thresholding the first coefficient out removes it.
    s.state().omega1 = 6.0;
    CHECK(s.linear_predictor(0) == 0.0);
}

TEST_CASE("KL coefficient conditional matches the normal-normal oracle")
{
    test::Gen gen(2);
    for (int trial = 0; trial < 10; ++trial) {
        const int K = gen.integer(1, 3);
        const int T = gen.integer(2, 8);
        const int n = gen.integer(5, 40);
        const ModelData d = random_model(gen, K, T, n, K > 1);
        const KLBasis basis = build_kl_basis(unit_time_grid(T), {0.01, gen.uniform(1.0, 30.0)}, 0.99);
        RtgpConfig cfg = short_config(10, 5, 1);
        cfg.seed = 40 + trial;
        RtgpSampler s(d, basis, cfg);
        s.state().xi2 = gen.uniform(0.05, 2.0);
        s.state().e = gen.normal_matrix(K, basis.L());
        s.state().eta = gen.normal_matrix(d.q(), 1);
        s.state().latent = gen.normal_matrix(n, 1);
        // No thresholding: every coefficient is active.
        s.state().omega1 = 0.0;
        s.state().omega2 = 0.0;
        s.rebuild_cache();

        const RtgpState& st = s.state();
        for (int k = 0; k < K; ++k) {
            const Eigen::MatrixXd W = d.X.middleCols(k * T, T) * basis.psi / d.p();
            const Eigen::VectorXd own = W * st.e.row(k).transpose();
            const Eigen::VectorXd target = st.latent - (direct_mu(d, st) - own);
            Eigen::MatrixXd P = W.transpose() * W + basis.psi.transpose() * basis.psi / st.xi2;
            for (int l = 0; l < basis.L(); ++l) {
                P(l, l) += 1.0 / (cfg.sigma_e2 * basis.lambdas(l));
            }
            const Eigen::VectorXd b = W.transpose() * target + basis.psi.transpose() * st.Etilde.row(k).transpose() / st.xi2;
            const Eigen::VectorXd mean = P.ldlt().solve(b);
            const GaussianConditional c = s.kl_conditional(k);
            CHECK((c.precision - P).cwiseAbs().maxCoeff() < 1e-8);
            CHECK((c.mean - mean).cwiseAbs().maxCoeff() < 1e-8);
        }
        CHECK_THROWS_AS(s.kl_conditional(K), InvalidInput);
    }
}

TEST_CASE("KL coefficient draws without data recover the prior-relaxation conditional")
{
    const int T = 6;
    ModelData d;
    d.K = 1;
    d.T = T;
    d.X = Eigen::MatrixXd(0, T);
    d.Z = Eigen::MatrixXd(0, 0);
    d.y = Eigen::VectorXi(0);
    const KLBasis basis = build_kl_basis(unit_time_grid(T), {0.01, 5.0}, 0.999);
    RtgpConfig cfg = short_config(10, 5, 1);
    RtgpSampler s(d, basis, cfg);
    s.state().xi2 = 0.5;
    test::Gen gen(3);
    for (int t = 0; t < T; ++t) {
        s.state().Etilde(0, t) = gen.normal();
    }
    const int L = basis.L();
    // Diagonal oracle since psi' psi = I.
    Eigen::VectorXd prec(L), mean(L);
    const Eigen::VectorXd proj = basis.psi.transpose() * s.state().Etilde.row(0).transpose();
    for (int l = 0; l < L; ++l) {
        prec(l) = 1.0 / 0.5 + 1.0 / (cfg.sigma_e2 * basis.lambdas(l));
        mean(l) = proj(l) / 0.5 / prec(l);
    }
    const int draws = 20000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(L), sq = Eigen::VectorXd::Zero(L);
    for (int i = 0; i < draws; ++i) {
        s.update_kl_coeffs();
        const Eigen::VectorXd e = s.state().e.row(0).transpose();
        sum += e;
        sq += e.cwiseProduct(e);
    }
    const Eigen::VectorXd m = sum / draws;
    const Eigen::VectorXd v = sq / draws - m.cwiseProduct(m);
    for (int l = 0; l < L; ++l) {
        const double sd = 1.0 / std::sqrt(prec(l));
        CHECK(std::abs(m(l) - mean(l)) < 4.0 * sd / std::sqrt(draws));
        CHECK(v(l) == doctest::Approx(1.0 / prec(l)).epsilon(0.05));
    }
    CHECK(s.field_cache_error() < 1e-10);
}

TEST_CASE("interaction conditional and variance conditional")
{
    test::Gen gen(4);
    const ModelData d = random_model(gen, 3, 4, 30, true);
    const KLBasis basis = build_kl_basis(unit_time_grid(4), {0.01, 5.0}, 0.99);
    RtgpConfig cfg = short_config(10, 5, 1);
    RtgpSampler s(d, basis, cfg);
    s.state().eta = (Eigen::VectorXd(3) << 1.0, 2.0, 2.0).finished();
    s.state().latent = gen.normal_matrix(30, 1);
    s.state().xi2 = 0.3;
    s.state().sigma_eta2 = 2.5;
    s.state().omega2 = 0.0;
    s.rebuild_cache();

    const InverseGammaParams ig = s.sigma_eta2_conditional();
    CHECK(ig.shape == doctest::Approx(1.501).epsilon(1e-12));
    CHECK(ig.rate == doctest::Approx(4.501).epsilon(1e-12));

    const RtgpState& st = s.state();
    const Eigen::MatrixXd W = d.Z / 3.0;
    const Eigen::VectorXd target = st.latent - (direct_mu(d, st) - W * st.eta);
    Eigen::MatrixXd P = W.transpose() * W;
    P.diagonal().array() += 1.0 / 0.3 + 1.0 / 2.5;
    const Eigen::VectorXd b = W.transpose() * target + st.etatilde / 0.3;
    const GaussianConditional c = s.interaction_conditional();
    CHECK((c.precision - P).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((c.mean - P.ldlt().solve(b)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("threshold conditional matches a brute-force likelihood sweep")
{
    test::Gen gen(5);
    for (Link link : {Link::probit, Link::logit}) {
        for (int trial = 0; trial < 5; ++trial) {
            const int K = 3;
            const int T = 5;
            const ModelData d = random_model(gen, K, T, 40, true);
            const KLBasis basis = full_basis(T);
            RtgpConfig cfg = short_config(10, 5, 1);
            cfg.link = link;
            RtgpSampler s(d, basis, cfg);
            s.state().Etilde = gen.normal_matrix(K, T);
            s.state().etatilde = gen.normal_matrix(3, 1);
            s.state().eta = 5.0 * gen.normal_matrix(3, 1);
            s.state().omega1 = 0.4;
            s.state().omega2 = 0.2;
            set_field(s, basis, 20.0 * gen.normal_matrix(K, T));

            for (bool for_beta : {true, false}) {
                const ThresholdConditional c = s.threshold_conditional(for_beta);
                REQUIRE(c.grid.size() == 10);
                for (std::size_t z = 0; z < c.grid.size(); ++z) {
                    RtgpState probe = s.state();
                    (for_beta ? probe.omega1 : probe.omega2) = c.grid[z];
                    const Eigen::VectorXd mu = direct_mu(d, probe);
                    double ll = 0.0;
                    for (int i = 0; i < d.n(); ++i) {
                        ll += bernoulli_loglik(link, d.y(i), mu(i));
                    }
                    CHECK(c.log_weights[z] == doctest::Approx(ll).epsilon(1e-8));
                }
            }
        }
    }
}

TEST_CASE("threshold conditional is flat when the field has no effect")
{
    test::Gen gen(6);
    const ModelData d = random_model(gen, 2, 6, 30, false);
    const KLBasis basis = full_basis(6);
    RtgpSampler s(d, basis, short_config(10, 5, 1));
    s.state().Etilde = gen.normal_matrix(2, 6);
    set_field(s, basis, Eigen::MatrixXd::Zero(2, 6));
    const ThresholdConditional c = s.threshold_conditional(true);
    REQUIRE(!c.grid.empty());
    for (double w : c.log_weights) {
        CHECK(w == doctest::Approx(c.log_weights.front()).epsilon(1e-12));
    }
    // No interactions: nothing to threshold.
    CHECK(s.threshold_conditional(false).grid.empty());
}

TEST_CASE("threshold conditional rules out a wrong-sign separator")
{
    // Four observations; feature 0 separates the labels but its coefficient has the wrong sign.
    const int T = 10;
    ModelData d;
    d.K = 1;
    d.T = T;
    d.X = Eigen::MatrixXd::Zero(4, T);
    d.X.col(0) << 1.0, 1.0, -1.0, -1.0;
    d.Z = Eigen::MatrixXd(4, 0);
    d.y = (Eigen::VectorXi(4) << 1, 1, 0, 0).finished();
    const KLBasis basis = full_basis(T);
    RtgpSampler s(d, basis, short_config(10, 5, 1));
    for (int t = 0; t < T; ++t) {
        s.state().Etilde(0, t) = 1.0 + t;
    }
    s.state().Etilde(0, 0) = 5.5;
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(1, T);
    E(0, 0) = -200.0;
    set_field(s, basis, E);

    const ThresholdConditional c = s.threshold_conditional(true);
    REQUIRE(c.grid.size() == 10);
    double top = -INFINITY;
    for (double w : c.log_weights) {
        top = std::max(top, w);
    }
    double total = 0.0;
    for (double w : c.log_weights) {
        total += std::exp(w - top);
    }
    int with_feature = 0;
    for (std::size_t z = 0; z < c.grid.size(); ++z) {
        if (c.grid[z] < 5.5) {
            ++with_feature;
            CHECK(std::exp(c.log_weights[z] - top) / total < 1e-10);
        }
    }
    CHECK(with_feature > 0);
    CHECK(with_feature < 10);

    // The sampled thresholds therefore exclude it.
    for (int i = 0; i < 200; ++i) {
        s.update_thresholds();
        CHECK(s.state().omega1 >= 5.5);
        s.state().omega1 = 0.0;
        s.rebuild_cache();
    }
}

TEST_CASE("thresholds stay at zero through the warm phase")
{
    test::Gen gen(7);
    const ModelData d = random_model(gen, 2, 5, 36, true);
    const KLBasis basis = build_kl_basis(unit_time_grid(5), {0.01, 5.0}, 0.99);
    RtgpConfig cfg = short_config(100, 60, 2);
    cfg.xi2.warm_iters = 30;
    RtgpSampler s(d, basis, cfg);
    for (int it = 1; it <= 30; ++it) {
        s.sweep(it);
        CHECK(s.state().omega1 == 0.0);
        CHECK(s.state().omega2 == 0.0);
        CHECK(s.state().xi2 == 1.0);
    }
    bool moved = false;
    for (int it = 31; it <= 60; ++it) {
        s.sweep(it);
        moved = moved || s.state().omega1 > 0.0;
    }
    CHECK(moved);
    CHECK(s.state().xi2 == cfg.xi2.end);
}

TEST_CASE("run_chain bookkeeping, determinism and exact sparsity")
{
    const SessionData session = test::toy_session(2, 6, 3, 2, 8);
    const DesignMatrices design = assemble_design(session);
    const ModelData d = ModelData::from_design(design, 2, 6, true);
    const KLBasis basis = build_kl_basis(unit_time_grid(6), {0.01, 10.0}, 0.99);
    RtgpConfig cfg = short_config(1000, 500, 5);
    cfg.xi2.warm_iters = 200;
    cfg.seed = 11;

    const PosteriorDraws a = run_chain(d, basis, cfg);
    CHECK(a.D() == 100);
    CHECK(a.beta.rows() == 12);
    CHECK(a.zeta.rows() == 1);
    CHECK(a.omega1_trace.size() == 1000);
    CHECK(a.max_cache_error < 1e-8);
    for (int it = 0; it < 200; ++it) {
        CHECK(a.omega1_trace[static_cast<std::size_t>(it)] == 0.0);
    }
    for (int dd = 0; dd < a.D(); ++dd) {
        for (int c = 0; c < 12; ++c) {
            CHECK((a.gamma_beta(c, dd) == 0) == (a.beta(c, dd) == 0.0f));
        }
        CHECK((a.gamma_zeta(0, dd) == 0) == (a.zeta(0, dd) == 0.0f));
    }
    const bool some_zero = (a.gamma_beta.array() == 0).any();
    CHECK(some_zero);

    const PosteriorDraws b = run_chain(d, basis, cfg);
    CHECK(a.beta == b.beta);
    CHECK(a.zeta == b.zeta);
    CHECK(a.gamma_beta == b.gamma_beta);

    cfg.seed = 12;
    const PosteriorDraws c = run_chain(d, basis, cfg);
    CHECK(a.beta != c.beta);
}

TEST_CASE("cache stays coherent through sweeps for both links")
{
    test::Gen gen(9);
    for (Link link : {Link::probit, Link::logit}) {
        const ModelData d = random_model(gen, 3, 6, 48, true);
        const KLBasis basis = build_kl_basis(unit_time_grid(6), {0.01, 8.0}, 0.99);
        RtgpConfig cfg = short_config(120, 60, 2);
        cfg.link = link;
        RtgpSampler s(d, basis, cfg);
        for (int it = 1; it <= 120; ++it) {
            s.sweep(it);
            CHECK(s.mu_cache_error() < 1e-8);
            CHECK(s.field_cache_error() < 1e-8);
        }
        if (link == Link::logit) {
            CHECK(s.state().weight.minCoeff() > 0.0);
        } else {
            CHECK(s.state().weight == Eigen::VectorXd::Ones(d.n()));
            for (int i = 0; i < d.n(); ++i) {
                CHECK((s.state().latent(i) > 0.0) == (d.y(i) == 1));
            }
        }
    }
}

TEST_CASE("sampler rejects a basis of the wrong length")
{
    test::Gen gen(10);
    const ModelData d = random_model(gen, 2, 5, 20, false);
    const KLBasis basis = build_kl_basis(unit_time_grid(6), {0.01, 8.0}, 0.99);
    CHECK_THROWS_AS(RtgpSampler(d, basis, short_config(10, 5, 1)), StructuralError);
}

TEST_CASE("posterior inclusion")
{
    PosteriorDraws d;
    d.K = 2;
    d.T = 3;
    d.q = 1;
    d.beta = Eigen::MatrixXf::Zero(6, 4);
    d.zeta = Eigen::MatrixXf::Zero(1, 4);
    d.gamma_beta.setOnes(6, 4);
    d.gamma_zeta.setZero(1, 4);
    InclusionMaps m = posterior_inclusion(d);
    CHECK(m.beta == Eigen::MatrixXd::Ones(2, 3));
    CHECK(m.zeta(0) == 0.0);
    d.gamma_beta(4, 0) = 0;
    d.gamma_beta(4, 1) = 0;
    m = posterior_inclusion(d);
    CHECK(m.beta(1, 1) == 0.5);
    d.beta.resize(6, 0);
    d.gamma_beta.resize(6, 0);
    CHECK_THROWS_AS(posterior_inclusion(d), InvalidInput);
}

TEST_CASE("beta_mean unflattens channel-major")
{
    PosteriorDraws d;
    d.K = 2;
    d.T = 2;
    d.beta = (Eigen::MatrixXf(4, 2) << 1, 3, 2, 2, 5, 5, 0, 4).finished();
    const Eigen::MatrixXd m = d.beta_mean();
    CHECK(m(0, 0) == 2.0);
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 0) == 5.0);
    CHECK(m(1, 1) == 2.0);
}
