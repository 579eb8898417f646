#pragma once

#include "rtgp/eeg_data.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

namespace test {

// Seeded value generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    bool coin() { return integer(0, 1) == 1; }

    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols)
    {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) {
                m(i, j) = normal();
            }
        }
        return m;
    }

    // Strictly increasing grid in [0, 1] with T points.
    Eigen::VectorXd grid(int T)
    {
        Eigen::VectorXd g(T);
        if (T == 1) {
            g(0) = uniform(0.0, 1.0);
            return g;
        }
        double acc = 0.0;
        Eigen::VectorXd steps(T - 1);
        for (int i = 0; i < T - 1; ++i) {
            steps(i) = uniform(0.05, 1.0);
        }
        steps /= steps.sum();
        g(0) = 0.0;
        for (int i = 1; i < T; ++i) {
            acc += steps(i - 1);
            g(i) = acc;
        }
        g(T - 1) = 1.0;
        return g;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// Fresh scratch directory for one test case.
inline std::filesystem::path scratch(const std::string& name)
{
    const char* root = std::getenv("RTGP_TEST_TMP");
    std::filesystem::path base = root ? root : std::filesystem::temp_directory_path() / "rtgp_tests";
    const auto dir = base / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Labeled session with random signals; sequences visit stimuli in order.
inline rtgp::SessionData toy_session(int K, int T, int R, int S, std::uint64_t seed, const std::string& text = "")
{
    Gen gen(seed);
    rtgp::SessionData s;
    s.K = K;
    s.T = T;
    s.R = R;
    s.S = S;
    s.J = 12;
    for (int k = 0; k < K; ++k) {
        s.channel_names.push_back("ch" + std::to_string(k + 1));
    }
    for (int r = 1; r <= R; ++r) {
        const char symbol = text.empty() ? s.layout.chars[static_cast<std::size_t>((r - 1) % 36)]
                                         : text[static_cast<std::size_t>(r - 1)];
        const auto cell = *s.layout.locate(symbol);
        for (int sq = 1; sq <= S; ++sq) {
            for (int j = 1; j <= 12; ++j) {
                rtgp::FlashRecord f;
                f.r = r;
                f.s = sq;
                f.j = j;
                const bool target = j == cell.first || j == cell.second + 6;
                f.y = target ? rtgp::Label::target : rtgp::Label::nontarget;
                f.signal = gen.normal_matrix(K, T).cast<float>();
                if (target) {
                    f.signal.array() += 0.5f;
                }
                s.flashes.push_back(std::move(f));
            }
        }
    }
    s.refresh_interactions();
    return s;
}

}  // namespace test
