#include "support.hpp"

#include "rtgp/error.hpp"
#include "rtgp/gp_kernel.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace rtgp;

namespace {

double min_eigenvalue(const Eigen::MatrixXd& m)
{
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Path of a zero-mean GP on the grid, drawn through a jittered Cholesky factor.
Eigen::VectorXd gp_path(test::Gen& gen, const Eigen::VectorXd& grid, const KernelParams& params, double noise)
{
    Eigen::MatrixXd C = gram_matrix(grid, params);
    C.diagonal().array() += 1e-8;
    const Eigen::MatrixXd L = C.llt().matrixL();
    Eigen::VectorXd z(grid.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = gen.normal();
    }
    Eigen::VectorXd path = L * z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        path(i) += std::sqrt(noise) * gen.normal();
    }
    return path;
}

}  // namespace

TEST_CASE("mse_kernel values")
{
    test::Gen gen(1);
    for (int i = 0; i < 20; ++i) {
        const KernelParams p{gen.uniform(0.0, 2.0), gen.uniform(0.01, 100.0)};
        CHECK(mse_kernel(0.0, 0.0, p) == 1.0);
    }
    CHECK(mse_kernel(0.0, 1.0, {0.01, 0.5}) == doctest::Approx(std::exp(-0.51)).epsilon(1e-14));
    CHECK(std::abs(mse_kernel(0.0, 1.0, {0.01, 0.5}) - 0.600496) < 1e-6);
    CHECK_THROWS_AS(mse_kernel(std::nan(""), 0.0, {}), InvalidInput);
}

TEST_CASE("mse_kernel with zero decay is the squared exponential")
{
    test::Gen gen(2);
    for (int i = 0; i < 500; ++i) {
        const double x = gen.uniform(-2.0, 2.0);
        const double y = gen.uniform(-2.0, 2.0);
        const double rho = gen.uniform(0.01, 50.0);
        const double se = std::exp(-rho * (x - y) * (x - y));
        CHECK(mse_kernel(x, y, {0.0, rho}) == doctest::Approx(se).epsilon(1e-14));
        CHECK(mse_kernel(x, y, {0.3, rho}) == mse_kernel(y, x, {0.3, rho}));
        const double v = mse_kernel(x, y, {gen.uniform(0.0, 1.0), rho});
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("kernel parameter validation")
{
    CHECK_THROWS_AS(gram_matrix(unit_time_grid(5), {-0.1, 1.0}), InvalidInput);
    CHECK_THROWS_AS(gram_matrix(unit_time_grid(5), {0.01, 0.0}), InvalidInput);
    CHECK_THROWS_AS(unit_time_grid(0), InvalidInput);
}

TEST_CASE("gram matrix basics")
{
    const Eigen::MatrixXd one = gram_matrix(unit_time_grid(1), {0.01, 3.0});
    REQUIRE(one.rows() == 1);
    CHECK(one(0, 0) == 1.0);

    const Eigen::VectorXd grid = unit_time_grid(50);
    CHECK(grid(0) == 0.0);
    CHECK(grid(49) == 1.0);
    CHECK(grid(1) == doctest::Approx(1.0 / 49.0));
    const Eigen::MatrixXd G = gram_matrix(grid, {0.01, 10.0});
    CHECK(G == G.transpose());
    CHECK(min_eigenvalue(G) >= -1e-8);
}

TEST_CASE("gram matrices of random grids are positive semidefinite")
{
    test::Gen gen(4);
    for (int trial = 0; trial < 100; ++trial) {
        const int T = gen.integer(1, 64);
        const KernelParams p{gen.uniform(0.0, 1.0), std::exp(gen.uniform(std::log(0.1), std::log(1000.0)))};
        const Eigen::MatrixXd G = gram_matrix(gen.grid(T), p);
        CHECK(G == G.transpose());
        CHECK(min_eigenvalue(G) >= -1e-8);
    }
}

TEST_CASE("diagonal decays with distance from the origin")
{
    const Eigen::VectorXd grid = unit_time_grid(30);
    const Eigen::MatrixXd G = gram_matrix(grid, {0.5, 4.0});
    for (int i = 1; i < 30; ++i) {
        CHECK(G(i, i) <= G(i - 1, i - 1));
    }
    CHECK(G(29, 29) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("full-rank basis reconstructs exactly")
{
    const Eigen::VectorXd grid = unit_time_grid(12);
    const KLBasis b = build_kl_basis(grid, {0.01, 2.0}, 1.0);
    const Eigen::MatrixXd G = gram_matrix(grid, b.params);
    const Eigen::MatrixXd approx = b.psi * b.lambdas.asDiagonal() * b.psi.transpose();
    CHECK((G - approx).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(b.reconstruction_error() < 1e-8);
}

TEST_CASE("two-point basis trace identity")
{
    const Eigen::VectorXd grid = (Eigen::VectorXd(2) << 0.2, 0.7).finished();
    const KernelParams p{0.01, 3.0};
    for (double thr : {0.5, 0.9, 1.0}) {
        const KLBasis b = build_kl_basis(grid, p, thr);
        CHECK(b.L() >= 1);
        CHECK(b.L() <= 2);
        if (b.L() == 2) {
            const double trace = mse_kernel(0.2, 0.2, p) + mse_kernel(0.7, 0.7, p);
            CHECK(b.lambdas.sum() == doctest::Approx(trace + 2 * kGramJitter).epsilon(1e-12));
        }
    }
}

TEST_CASE("basis postconditions on random grids")
{
    test::Gen gen(6);
    for (int trial = 0; trial < 100; ++trial) {
        const int T = gen.integer(2, 64);
        const KernelParams p{gen.uniform(0.0, 0.5), std::exp(gen.uniform(std::log(0.5), std::log(500.0)))};
        const double thr = gen.uniform(0.5, 1.0);
        const KLBasis b = build_kl_basis(gen.grid(T), p, thr);
        const Eigen::MatrixXd I = b.psi.transpose() * b.psi;
        CHECK((I - Eigen::MatrixXd::Identity(b.L(), b.L())).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(b.variance_fraction >= thr);
        // Dropped share of the trace.
        const double trace = gram_matrix(b.grid, p).trace() + T * kGramJitter;
        CHECK((trace - b.lambdas.sum()) / trace <= 1.0 - thr + 1e-6);
        for (int l = 0; l < b.L(); ++l) {
            CHECK(b.lambdas(l) > 0.0);
            if (l > 0) {
                CHECK(b.lambdas(l) <= b.lambdas(l - 1));
            }
        }
    }
}

TEST_CASE("basis rank is minimal for the threshold")
{
    test::Gen gen(8);
    for (int trial = 0; trial < 40; ++trial) {
        const int T = gen.integer(3, 40);
        const Eigen::VectorXd grid = gen.grid(T);
        const KernelParams p{0.01, gen.uniform(1.0, 200.0)};
        const double thr = gen.uniform(0.6, 0.999);
        const KLBasis b = build_kl_basis(grid, p, thr);
        // Independent eigenvalue share computation.
        Eigen::MatrixXd G = gram_matrix(grid, p);
        G.diagonal().array() += kGramJitter;
        Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().reverse();
        ev = ev.cwiseMax(0.0);
        double cum = 0.0;
        int L = 0;
        while (cum < thr * ev.sum()) {
            cum += ev(L++);
        }
        CHECK(b.L() == L);
    }
}

TEST_CASE("rank is monotone in the variance threshold")
{
    test::Gen gen(9);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::VectorXd grid = gen.grid(gen.integer(5, 60));
        const KernelParams p{0.01, gen.uniform(1.0, 300.0)};
        int prev = 0;
        for (double thr = 0.5; thr <= 1.0; thr += 0.05) {
            const int L = build_kl_basis(grid, p, std::min(thr, 1.0)).L();
            CHECK(L >= prev);
            prev = L;
        }
    }
}

TEST_CASE("basis threshold validation")
{
    CHECK_THROWS_AS(build_kl_basis(unit_time_grid(5), {}, 0.0), InvalidInput);
    CHECK_THROWS_AS(build_kl_basis(unit_time_grid(5), {}, 1.5), InvalidInput);
}

TEST_CASE("long grid truncates strongly")
{
    const Eigen::VectorXd grid = unit_time_grid(307);
    test::Gen gen(10);
    std::vector<Eigen::VectorXd> waves;
    for (int c = 0; c < 3; ++c) {
        waves.push_back(gp_path(gen, grid, {0.01, 40.0}, 0.01));
    }
    const double rho = estimate_rho(waves, RhoSearch::defaults());
    const KLBasis b = build_kl_basis(grid, {0.01, rho}, 0.99);
    CHECK(b.L() < 60);
    CHECK(b.reconstruction_error() <= 0.01 + 1e-6);
}

TEST_CASE("gp_log_marginal matches the direct Gaussian density")
{
    test::Gen gen(12);
    for (int trial = 0; trial < 20; ++trial) {
        const int T = gen.integer(2, 25);
        const Eigen::VectorXd grid = gen.grid(T);
        const KernelParams p{0.01, gen.uniform(0.5, 50.0)};
        const double noise = gen.uniform(0.01, 1.0);
        Eigen::VectorXd y(T);
        for (int i = 0; i < T; ++i) {
            y(i) = gen.normal();
        }
        Eigen::MatrixXd C = gram_matrix(grid, p);
        C.diagonal().array() += noise;
        const double direct = -0.5 * y.dot(C.inverse() * y) - 0.5 * std::log(C.determinant()) -
                              0.5 * T * std::log(2.0 * std::numbers::pi);
        CHECK(gp_log_marginal(y, grid, p, noise) == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("estimate_rho agrees with an exhaustive marginal-likelihood search")
{
    test::Gen gen(13);
    const Eigen::VectorXd grid = unit_time_grid(40);
    RhoSearch search;
    search.rho_grid = log_spaced(1.0, 200.0, 12);
    search.noise_grid = log_spaced(1e-3, 1.0, 6);
    for (int trial = 0; trial < 6; ++trial) {
        const Eigen::VectorXd w = gp_path(gen, grid, {0.01, gen.uniform(2.0, 100.0)}, 0.01);
        Eigen::VectorXd norm = w.array() - w.mean();
        norm /= std::sqrt(norm.squaredNorm() / double(norm.size()));
        double best = -INFINITY;
        double arg = 0.0;
        for (double rho : search.rho_grid) {
            for (double noise : search.noise_grid) {
                const double ll = gp_log_marginal(norm, grid, {0.01, rho}, noise);
                if (ll > best) {
                    best = ll;
                    arg = rho;
                }
            }
        }
        const auto per = estimate_rho_per_channel({w}, search);
        CHECK(per[0] == arg);
        CHECK(estimate_rho({w}, search) == arg);
    }
}

TEST_CASE("estimate_rho recovers the generating smoothness")
{
    const Eigen::VectorXd grid = unit_time_grid(50);
    RhoSearch search;
    search.rho_grid = {1.0, 5.0, 25.0};
    search.noise_grid = log_spaced(1e-3, 1.0, 10);
    int hits = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        test::Gen gen(100 + seed);
        std::vector<Eigen::VectorXd> waves;
        for (int c = 0; c < 4; ++c) {
            waves.push_back(gp_path(gen, grid, {0.01, 5.0}, 1e-6));
        }
        const auto per = estimate_rho_per_channel(waves, search);
        int fives = 0;
        for (double r : per) {
            fives += r == 5.0;
        }
        hits += fives * 2 > int(per.size());
    }
    CHECK(hits * 2 > seeds);
}

TEST_CASE("estimate_rho averages channel estimates and skips flat channels")
{
    test::Gen gen(14);
    const Eigen::VectorXd grid = unit_time_grid(60);
    RhoSearch search;
    search.rho_grid = {2.0, 8.0};
    search.noise_grid = {1e-3};
    Eigen::VectorXd a, b;
    // Draw until each path prefers its own generating value.
    for (int i = 0; i < 50; ++i) {
        a = gp_path(gen, grid, {0.01, 2.0}, 1e-6);
        if (estimate_rho({a}, search) == 2.0) {
            break;
        }
    }
    for (int i = 0; i < 50; ++i) {
        b = gp_path(gen, grid, {0.01, 8.0}, 1e-6);
        if (estimate_rho({b}, search) == 8.0) {
            break;
        }
    }
    REQUIRE(estimate_rho({a}, search) == 2.0);
    REQUIRE(estimate_rho({b}, search) == 8.0);
    CHECK(estimate_rho({a, b}, search) == 5.0);

    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(60, 3.0);
    CHECK(estimate_rho({a, flat}, search) == 2.0);
    CHECK(std::isnan(estimate_rho_per_channel({flat, a}, search)[0]));
    CHECK_THROWS_AS(estimate_rho({flat}, search), NumericalFailure);
    CHECK_THROWS_AS(estimate_rho(std::vector<Eigen::VectorXd>{}, search), InvalidInput);
    RhoSearch bad = search;
    bad.rho_grid = {-1.0};
    CHECK_THROWS_AS(estimate_rho({a}, bad), InvalidInput);
}

TEST_CASE("log_spaced")
{
    const auto v = log_spaced(0.5, 500.0, 30);
    REQUIRE(v.size() == 30);
    CHECK(v.front() == 0.5);
    CHECK(v.back() == 500.0);
    for (std::size_t i = 1; i < v.size(); ++i) {
        CHECK(v[i] / v[i - 1] == doctest::Approx(std::pow(1000.0, 1.0 / 29.0)));
    }
    CHECK_THROWS_AS(log_spaced(0.0, 1.0, 3), InvalidInput);
}
