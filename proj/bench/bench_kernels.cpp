// Serial vs OpenMP kernels at calibration-session sizes (n = 19*15*12, K = 16, T = 25).

#include "rtgp/kernels.hpp"
#include "rtgp/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace rtgp;

namespace {

constexpr int kFlashes = 19 * 15 * 12;
constexpr int kChannels = 16;
constexpr int kSamples = 25;
constexpr int kDraws = 400;

std::vector<FlashRecord> make_flashes()
{
    std::vector<FlashRecord> flashes(kFlashes);
    Random rng(7);
    for (auto& f : flashes) {
        f.signal.resize(kChannels, kSamples);
        for (int k = 0; k < kChannels; ++k) {
            for (int t = 0; t < kSamples; ++t) {
                f.signal(k, t) = float(rng.normal());
            }
        }
    }
    return flashes;
}

struct Fixture {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(kFlashes, kChannels * kSamples);
    Eigen::MatrixXd Z = Eigen::MatrixXd::Random(kFlashes, kChannels * (kChannels - 1) / 2);
    Eigen::VectorXd beta = Eigen::VectorXd::Random(X.cols());
    Eigen::VectorXd zeta = Eigen::VectorXd::Random(Z.cols());
    Eigen::MatrixXf beta_draws = Eigen::MatrixXf::Random(X.cols(), kDraws);
    Eigen::MatrixXf zeta_draws = Eigen::MatrixXf::Random(Z.cols(), kDraws);
};

const Fixture& fixture()
{
    static const Fixture f;
    return f;
}

template <auto Fn>
void interaction(benchmark::State& state)
{
    const auto flashes = make_flashes();
    bool degenerate = false;
    for (auto _ : state) {
        benchmark::DoNotOptimize(Fn(flashes, &degenerate));
    }
}

template <auto Fn>
void predictors(benchmark::State& state)
{
    const Fixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(Fn(f.X, f.beta, 1.0 / double(f.X.cols()), f.Z, f.zeta, 1.0 / double(f.Z.cols())));
    }
}

template <auto Fn>
void scoring(benchmark::State& state)
{
    const Fixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(Fn(f.X, f.beta_draws, 1.0 / double(f.X.cols()), f.Z, f.zeta_draws,
                                    1.0 / double(f.Z.cols()), Link::probit));
    }
}

}  // namespace

BENCHMARK(interaction<kernels::serial::interaction_matrix>)->Name("interaction_matrix/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(interaction<kernels::omp::interaction_matrix>)->Name("interaction_matrix/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(predictors<kernels::serial::linear_predictors>)->Name("linear_predictors/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(predictors<kernels::omp::linear_predictors>)->Name("linear_predictors/omp")->Unit(benchmark::kMicrosecond);
BENCHMARK(scoring<kernels::serial::mean_link_inverse>)->Name("mean_link_inverse/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(scoring<kernels::omp::mean_link_inverse>)->Name("mean_link_inverse/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
