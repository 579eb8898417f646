#include "rtgp/simulate.hpp"

#include "rtgp/error.hpp"
#include "rtgp/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

namespace rtgp {

Eigen::MatrixXd reference_target_correlation()
{
    Eigen::MatrixXd m(6, 6);
    m << 1.0, 0.7, 0.1, 0.1, 0.1, 0.2,
         0.7, 1.0, 0.1, 0.1, 0.6, 0.1,
         0.1, 0.1, 1.0, 0.7, 0.1, 0.1,
         0.1, 0.1, 0.7, 1.0, 0.1, 0.1,
         0.1, 0.6, 0.1, 0.1, 1.0, 0.4,
         0.2, 0.1, 0.1, 0.1, 0.4, 1.0;
    return m;
}

Eigen::MatrixXd reference_nontarget_correlation()
{
    Eigen::MatrixXd m(6, 6);
    m << 1.0, 0.1, 0.1, 0.5, 0.1, 0.8,
         0.1, 1.0, 0.1, 0.1, 0.3, 0.1,
         0.1, 0.1, 1.0, 0.1, 0.1, 0.1,
         0.5, 0.1, 0.1, 1.0, 0.1, 0.1,
         0.1, 0.3, 0.1, 0.1, 1.0, 0.3,
         0.8, 0.1, 0.1, 0.1, 0.3, 1.0;
    return m;
}

void validate_correlation(const Eigen::MatrixXd& m, const std::string& name)
{
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidInput(name + " must be square");
    }
    if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 0.0) {
        throw InvalidInput(name + " must be finite and symmetric");
    }
    if ((m.diagonal().array() - 1.0).abs().maxCoeff() > 0.0) {
        throw InvalidInput(name + " must have a unit diagonal");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw InvalidInput(name + " is not positive definite");
    }
}

void SimConfig::validate() const
{
    if (K < 2 || T < 20 || R < 1 || S < 1) {
        throw InvalidInput("sim: need K >= 2, T >= 20, R >= 1, S >= 1");
    }
    const SpellerLayout layout;
    if (J != layout.stimulus_count()) {
        throw InvalidInput("sim: J must be 12 for the 6x6 speller");
    }
    if (static_cast<int>(text.size()) != R) {
        throw InvalidInput("sim: text length must equal R");
    }
    for (char c : text) {
        if (!layout.locate(c)) {
            throw InvalidInput(std::string("sim: character '") + c + "' is not on the speller");
        }
    }
    if (!(alpha > 0.0) || !(tau2 >= 0.0) || !(sigma2 >= 0.0) || !std::isfinite(alpha) || !std::isfinite(tau2) ||
        !std::isfinite(sigma2)) {
        throw InvalidInput("sim: alpha must be positive, tau2 and sigma2 non-negative");
    }
    if (!(width > 0.0) || !(support_halfwidth > 0.0) || !std::isfinite(amplitude)) {
        throw InvalidInput("sim: template width and support must be positive");
    }
    if (static_cast<int>(centers.size()) > K) {
        throw InvalidInput("sim: more template centers than channels");
    }
    if (sigma_target.rows() != K || sigma_nontarget.rows() != K) {
        throw InvalidInput("sim: noise correlation matrices must be K x K");
    }
    validate_correlation(sigma_target, "target noise correlation");
    validate_correlation(sigma_nontarget, "nontarget noise correlation");
    if (sample_rate < 0.0 || timing.display_ms + timing.pause_ms <= 0.0) {
        throw InvalidInput("sim: invalid timing");
    }
}

EvokedTemplates make_templates(const SimConfig& config)
{
    if (config.T < 20) {
        throw InvalidInput("make_templates: need T >= 20");
    }
    EvokedTemplates tpl;
    tpl.nontarget = Eigen::MatrixXd::Zero(config.K, config.T);
    for (std::size_t k = 0; k < config.centers.size() && static_cast<int>(k) < config.K; ++k) {
        const double c = config.centers[k];
        for (int t = 1; t <= config.T; ++t) {
            const double d = double(t) / double(config.T) - c;
            if (std::abs(d) > config.support_halfwidth * config.width) {
                continue;
            }
            tpl.nontarget(static_cast<Eigen::Index>(k), t - 1) =
                config.amplitude * std::exp(-d * d / (2.0 * config.width * config.width));
        }
    }
    tpl.target = config.alpha * tpl.nontarget;
    return tpl;
}

SupportMask truth_support(const SimConfig& config)
{
    const EvokedTemplates tpl = make_templates(config);
    return ((tpl.target - tpl.nontarget).array().abs() > 0.0).matrix().cast<std::uint8_t>();
}

SessionData generate_session(const SimConfig& config, std::uint64_t stream)
{
    config.validate();
    const EvokedTemplates tpl = make_templates(config);
    const Eigen::MatrixXd chol1 =
        Eigen::LLT<Eigen::MatrixXd>(config.sigma_target).matrixL().toDenseMatrix() * std::sqrt(config.tau2);
    const Eigen::MatrixXd chol0 =
        Eigen::LLT<Eigen::MatrixXd>(config.sigma_nontarget).matrixL().toDenseMatrix() * std::sqrt(config.tau2);
    const double sigma = std::sqrt(config.sigma2);

    SessionData s;
    s.K = config.K;
    s.T = config.T;
    s.R = config.R;
    s.S = config.S;
    s.J = config.J;
    s.sample_rate = config.sample_rate > 0.0 ? config.sample_rate : double(config.T) / 0.6;
    s.timing = config.timing;
    for (int k = 1; k <= config.K; ++k) {
        s.channel_names.push_back("ch" + std::to_string(k));
    }

    Random rng(mix_seed({config.seed, stream}));
    const int K = config.K;
    const int T = config.T;
    Eigen::VectorXd z(K);
    s.flashes.reserve(static_cast<std::size_t>(config.R * config.S * config.J));
    for (int r = 1; r <= config.R; ++r) {
        const auto cell = *s.layout.locate(config.text[static_cast<std::size_t>(r - 1)]);
        const int target_row = cell.first;
        const int target_col = s.layout.rows + cell.second;
        for (int seq = 1; seq <= config.S; ++seq) {
            std::vector<int> order(static_cast<std::size_t>(config.J));
            std::iota(order.begin(), order.end(), 1);
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                const auto j = static_cast<std::size_t>(rng.uniform() * double(i + 1));
                std::swap(order[i], order[std::min(j, i)]);
            }
            for (int j : order) {
                FlashRecord f;
                f.r = r;
                f.s = seq;
                f.j = j;
                const bool target = j == target_row || j == target_col;
                f.y = target ? Label::target : Label::nontarget;
                const Eigen::MatrixXd& chol = target ? chol1 : chol0;
                Eigen::MatrixXd x = target ? tpl.target : tpl.nontarget;
                for (int t = 0; t < T; ++t) {
                    for (int k = 0; k < K; ++k) {
                        z(k) = rng.normal();
                    }
                    x.col(t) += chol * z;
                    for (int k = 0; k < K; ++k) {
                        x(k, t) += sigma * rng.normal();
                    }
                }
                f.signal = x.cast<float>();
                s.flashes.push_back(std::move(f));
            }
        }
    }
    s.refresh_interactions();
    return s;
}

}  // namespace rtgp
