#include "rtgp/gp_kernel.hpp"

#include "rtgp/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rtgp {

void KernelParams::validate() const
{
    if (!std::isfinite(alpha) || alpha < 0.0) {
        throw InvalidInput("kernel alpha must be finite and >= 0");
    }
    if (!std::isfinite(rho) || rho <= 0.0) {
        throw InvalidInput("kernel rho must be finite and > 0");
    }
}

double mse_kernel(double x, double xp, const KernelParams& params)
{
    if (!std::isfinite(x) || !std::isfinite(xp)) {
        throw InvalidInput("mse_kernel: non-finite input");
    }
    const double d = x - xp;
    return std::exp(-params.alpha * (x * x + xp * xp) - params.rho * d * d);
}

Eigen::VectorXd unit_time_grid(int T)
{
    if (T < 1) {
        throw InvalidInput("time grid needs T >= 1");
    }
    if (T == 1) {
        return Eigen::VectorXd::Zero(1);
    }
    return Eigen::VectorXd::LinSpaced(T, 0.0, 1.0);
}

Eigen::MatrixXd gram_matrix(const Eigen::VectorXd& grid, const KernelParams& params)
{
    params.validate();
    const auto T = grid.size();
    Eigen::MatrixXd G(T, T);
    for (Eigen::Index a = 0; a < T; ++a) {
        G(a, a) = mse_kernel(grid(a), grid(a), params);
        for (Eigen::Index b = a + 1; b < T; ++b) {
            const double v = mse_kernel(grid(a), grid(b), params);
            G(a, b) = v;
            G(b, a) = v;
        }
    }
    return G;
}

double KLBasis::reconstruction_error() const
{
    const Eigen::MatrixXd G = gram_matrix(grid, params);
    const Eigen::MatrixXd approx = psi * lambdas.asDiagonal() * psi.transpose();
    return (G - approx).norm() / G.norm();
}

KLBasis build_kl_basis(const Eigen::VectorXd& grid, const KernelParams& params, double variance_threshold)
{
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
        throw InvalidInput("variance_threshold must lie in (0, 1]");
    }
    if (grid.size() < 1) {
        throw InvalidInput("KL basis needs a non-empty grid");
    }
    Eigen::MatrixXd G = gram_matrix(grid, params);
    G.diagonal().array() += kGramJitter;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("KL basis: eigendecomposition failed");
    }
    const auto T = grid.size();
    // Ascending from Eigen; walk it backwards.
    const Eigen::VectorXd& vals = eig.eigenvalues();
    double total = 0.0;
    int positive = 0;
    for (Eigen::Index i = 0; i < T; ++i) {
        if (vals(i) > 0.0) {
            total += vals(i);
            ++positive;
        }
    }
    if (positive == 0) {
        throw NumericalFailure("KL basis: Gram matrix has no positive eigenvalues");
    }

    int L = 0;
    double retained = 0.0;
    while (L < positive) {
        retained += vals(T - 1 - L);
        ++L;
        if (retained >= variance_threshold * total) {
            break;
        }
    }

    KLBasis basis;
    basis.grid = grid;
    basis.params = params;
    basis.variance_threshold = variance_threshold;
    basis.lambdas.resize(L);
    basis.psi.resize(T, L);
    for (int l = 0; l < L; ++l) {
        basis.lambdas(l) = vals(T - 1 - l);
        Eigen::VectorXd v = eig.eigenvectors().col(T - 1 - l);
        // Sign convention: largest-magnitude entry positive.
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        basis.psi.col(l) = v;
    }
    basis.variance_fraction = retained / total;
    return basis;
}

RhoSearch RhoSearch::defaults()
{
    RhoSearch s;
    s.rho_grid = log_spaced(0.5, 500.0, 30);
    s.noise_grid = log_spaced(1e-3, 1.0, 10);
    s.alpha = 0.01;
    return s;
}

std::vector<double> log_spaced(double lo, double hi, int count)
{
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) {
        throw InvalidInput("log_spaced: need count >= 1 and 0 < lo <= hi");
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / double(count - 1));
    }
    out.back() = hi;
    return out;
}

double gp_log_marginal(const Eigen::VectorXd& y, const Eigen::VectorXd& grid, const KernelParams& params,
                       double noise_variance)
{
    Eigen::MatrixXd C = gram_matrix(grid, params);
    C.diagonal().array() += noise_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("gp_log_marginal: covariance not positive definite");
    }
    const Eigen::VectorXd alpha = llt.solve(y);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * double(y.size()) * std::log(2.0 * std::numbers::pi);
}

namespace {

// Centre and scale to unit variance; false when the waveform is flat.
bool normalise(const Eigen::VectorXd& w, Eigen::VectorXd& out)
{
    out = w.array() - w.mean();
    const double sd = std::sqrt(out.squaredNorm() / double(out.size()));
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if (!(sd > 1e-12 * scale)) {
        return false;
    }
    out /= sd;
    return true;
}

}  // namespace

std::vector<double> estimate_rho_per_channel(const std::vector<Eigen::VectorXd>& waveforms,
                                             const RhoSearch& search)
{
    if (waveforms.empty()) {
        throw InvalidInput("estimate_rho: no channels");
    }
    if (search.rho_grid.empty() || search.noise_grid.empty()) {
        throw InvalidInput("estimate_rho: empty search grid");
    }
    for (double r : search.rho_grid) {
        if (!std::isfinite(r) || r <= 0.0) {
            throw InvalidInput("estimate_rho: rho grid values must be finite and positive");
        }
    }
    for (double s : search.noise_grid) {
        if (!std::isfinite(s) || s <= 0.0) {
            throw InvalidInput("estimate_rho: noise grid values must be finite and positive");
        }
    }
    const auto T = waveforms.front().size();
    for (const auto& w : waveforms) {
        if (w.size() != T) {
            throw StructuralError("estimate_rho: waveforms differ in length");
        }
    }
    const Eigen::VectorXd grid = unit_time_grid(static_cast<int>(T));

    const auto C = waveforms.size();
    std::vector<Eigen::VectorXd> normalised(C);
    std::vector<bool> usable(C);
    for (std::size_t c = 0; c < C; ++c) {
        usable[c] = normalise(waveforms[c], normalised[c]);
    }

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> best_ll(C, kNegInf);
    std::vector<double> best_rho(C, std::numeric_limits<double>::quiet_NaN());
    const double log2pi = std::log(2.0 * std::numbers::pi);

    // One eigendecomposition per rho serves every channel and noise level.
    for (double rho : search.rho_grid) {
        const KernelParams params{search.alpha, rho};
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_matrix(grid, params));
        const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
        for (std::size_t c = 0; c < C; ++c) {
            if (!usable[c]) {
                continue;
            }
            const Eigen::VectorXd a = eig.eigenvectors().transpose() * normalised[c];
            for (double noise : search.noise_grid) {
                const Eigen::ArrayXd d = lam.array() + noise;
                const double ll = -0.5 * (a.array().square() / d).sum() - 0.5 * d.log().sum() -
                                  0.5 * double(T) * log2pi;
                if (ll > best_ll[c]) {
                    best_ll[c] = ll;
                    best_rho[c] = rho;
                }
            }
        }
    }
    return best_rho;
}

double estimate_rho(const std::vector<Eigen::VectorXd>& waveforms, const RhoSearch& search)
{
    const auto per_channel = estimate_rho_per_channel(waveforms, search);
    double sum = 0.0;
    int used = 0;
    for (double r : per_channel) {
        if (std::isfinite(r)) {
            sum += r;
            ++used;
        }
    }
    if (used == 0) {
        throw NumericalFailure("estimate_rho: every channel is flat");
    }
    return sum / used;
}

std::vector<Eigen::VectorXd> channel_grand_averages(const SessionData& session)
{
    if (session.flashes.empty()) {
        throw InvalidInput("estimate_rho: empty session");
    }
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(session.K, session.T);
    for (const auto& f : session.flashes) {
        acc += f.signal.cast<double>();
    }
    acc /= double(session.flashes.size());
    std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(session.K));
    for (int k = 0; k < session.K; ++k) {
        out[static_cast<std::size_t>(k)] = acc.row(k).transpose();
    }
    return out;
}

double estimate_rho(const SessionData& session, const RhoSearch& search)
{
    return estimate_rho(channel_grand_averages(session), search);
}

}  // namespace rtgp
