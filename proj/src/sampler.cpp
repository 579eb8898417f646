#include "rtgp/sampler.hpp"

#include "rtgp/error.hpp"
#include "rtgp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace rtgp {

double Xi2Schedule::at(int iter, int burn_in) const
{
    if (iter <= warm_iters) {
        return start;
    }
    if (iter >= burn_in || burn_in <= warm_iters) {
        return end;
    }
    const double frac = double(iter - warm_iters) / double(burn_in - warm_iters);
    return start * std::pow(end / start, frac);
}

void RtgpConfig::validate() const
{
    if (iterations < 1 || burn_in < 0 || burn_in >= iterations) {
        throw ConfigError("rtgp: need 0 <= burn_in < iterations");
    }
    if (thin < 1) {
        throw ConfigError("rtgp: thin must be >= 1");
    }
    if (draw_count() < 1) {
        throw ConfigError("rtgp: (iterations - burn_in) / thin must be >= 1");
    }
    if (xi2.warm_iters < 0 || xi2.warm_iters > burn_in) {
        throw ConfigError("rtgp: need 0 <= warm_iters <= burn_in");
    }
    if (!(xi2.start > 0.0) || !(xi2.end > 0.0) || !std::isfinite(xi2.start) || !std::isfinite(xi2.end)) {
        throw ConfigError("rtgp: xi2 schedule values must be finite and positive");
    }
    if (omega_grid.points < 2) {
        throw ConfigError("rtgp: omega grid needs at least 2 points");
    }
    if (!(omega_grid.lower_quantile >= 0.0 && omega_grid.lower_quantile < omega_grid.upper_quantile &&
          omega_grid.upper_quantile <= 1.0)) {
        throw ConfigError("rtgp: need 0 <= lower quantile < upper quantile <= 1");
    }
    if (!(sigma_e2 > 0.0) || !(a_eta > 0.0) || !(b_eta > 0.0)) {
        throw ConfigError("rtgp: sigma_e2, a_eta and b_eta must be positive");
    }
}

ModelData ModelData::from_design(const DesignMatrices& design, int K, int T, bool use_interactions)
{
    ModelData d;
    d.K = K;
    d.T = T;
    d.X = design.X;
    d.Z = use_interactions ? design.Z : Eigen::MatrixXd(design.X.rows(), 0);
    d.y = design.y;
    d.validate();
    return d;
}

void ModelData::validate() const
{
    if (K < 1 || T < 1 || X.cols() != p()) {
        throw StructuralError("model data: X must have K*T columns");
    }
    if (Z.rows() != X.rows() || y.size() != X.rows()) {
        throw StructuralError("model data: X, Z and y disagree on the flash count");
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) != 0 && y(i) != 1) {
            throw InvalidInput("model data: labels must be 0 or 1");
        }
    }
}

Eigen::MatrixXd RtgpState::beta() const
{
    return (Etilde.array().abs() > omega1).select(E, 0.0);
}

Eigen::VectorXd RtgpState::zeta() const
{
    return (etatilde.array().abs() > omega2).select(eta, 0.0);
}

Eigen::MatrixXd PosteriorDraws::beta_mean() const
{
    Eigen::MatrixXd out(K, T);
    const Eigen::VectorXd m = beta.cast<double>().rowwise().mean();
    for (int k = 0; k < K; ++k) {
        for (int t = 0; t < T; ++t) {
            out(k, t) = m(k * T + t);
        }
    }
    return out;
}

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& KT)
{
    Eigen::VectorXd out(KT.size());
    for (Eigen::Index k = 0; k < KT.rows(); ++k) {
        out.segment(k * KT.cols(), KT.cols()) = KT.row(k).transpose();
    }
    return out;
}

Eigen::VectorXd standard_normals(Random& rng, Eigen::Index size)
{
    Eigen::VectorXd z(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        z(i) = rng.normal();
    }
    return z;
}

// Type-7 empirical quantile of sorted values.
double quantile_sorted(const std::vector<double>& v, double prob)
{
    const double h = (double(v.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

// Draws mean + P^{-1/2} z where P = U'U.
Eigen::VectorXd draw_gaussian(Random& rng, const Eigen::MatrixXd& precision, const Eigen::VectorXd& b,
                              const char* step, long sweep)
{
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure(std::string(step) + ": conditional precision not positive definite", sweep);
    }
    const Eigen::VectorXd mean = llt.solve(b);
    const Eigen::VectorXd z = standard_normals(rng, b.size());
    return mean + llt.matrixU().solve(z);
}

}  // namespace

RtgpSampler::RtgpSampler(const ModelData& data, const KLBasis& basis, const RtgpConfig& config)
    : data_(data), basis_(basis), config_(config), rng_(config.seed)
{
    config_.validate();
    data_.validate();
    if (basis_.T() != data_.T) {
        throw StructuralError("sampler: KL basis grid length differs from T");
    }
    if (basis_.L() < 1) {
        throw StructuralError("sampler: empty KL basis");
    }
    const int K = data_.K;
    const int T = data_.T;
    const int q = data_.q();
    const int n = data_.n();
    const double sd0 = std::sqrt(config_.xi2.start);

    state_.e = Eigen::MatrixXd::Zero(K, basis_.L());
    state_.E = Eigen::MatrixXd::Zero(K, T);
    state_.Etilde.resize(K, T);
    for (int k = 0; k < K; ++k) {
        for (int t = 0; t < T; ++t) {
            state_.Etilde(k, t) = rng_.normal(0.0, sd0);
        }
    }
    state_.eta = Eigen::VectorXd::Zero(q);
    state_.etatilde = sd0 * standard_normals(rng_, q);
    state_.sigma_eta2 = 1.0;
    state_.xi2 = config_.xi2.start;
    state_.latent = Eigen::VectorXd::Zero(n);
    state_.weight = Eigen::VectorXd::Ones(n);
    rebuild_cache();
}

void RtgpSampler::rebuild_cache()
{
    state_.E = state_.e * basis_.psi.transpose();
    const Eigen::VectorXd beta = flatten(state_.beta());
    const Eigen::VectorXd zeta = data_.q() > 0 ? state_.zeta() : Eigen::VectorXd();
    state_.mu = kernels::omp::linear_predictors(data_.X, beta, data_.x_scale(), data_.Z, zeta, data_.z_scale());
    resid_ = state_.latent - state_.mu;
}

double RtgpSampler::linear_predictor(int i) const
{
    double acc = 0.0;
    for (int k = 0; k < data_.K; ++k) {
        for (int t = 0; t < data_.T; ++t) {
            if (state_.beta_active(k, t)) {
                acc += state_.E(k, t) * data_.X(i, k * data_.T + t);
            }
        }
    }
    double mu = acc * data_.x_scale();
    double accz = 0.0;
    for (int m = 0; m < data_.q(); ++m) {
        if (state_.zeta_active(m)) {
            accz += state_.eta(m) * data_.Z(i, m);
        }
    }
    return mu + accz * data_.z_scale();
}

double RtgpSampler::mu_cache_error() const
{
    double worst = 0.0;
    for (int i = 0; i < data_.n(); ++i) {
        worst = std::max(worst, std::abs(state_.mu(i) - linear_predictor(i)));
    }
    return worst;
}

double RtgpSampler::field_cache_error() const
{
    return (state_.E - state_.e * basis_.psi.transpose()).cwiseAbs().maxCoeff();
}

void RtgpSampler::sweep(int iter)
{
    iter_ = iter;
    state_.xi2 = config_.xi2.at(iter, config_.burn_in);
    update_latent();
    update_kl_coeffs();
    update_relaxed_field();
    if (data_.q() > 0) {
        update_interactions();
    }
    if (config_.adaptive_thresholds && iter > config_.xi2.warm_iters) {
        update_thresholds();
    }
    check_finite("sweep");
}

void RtgpSampler::check_finite(const char* step) const
{
    if (!state_.mu.allFinite() || !state_.e.allFinite() || !state_.Etilde.allFinite() ||
        !state_.eta.allFinite() || !std::isfinite(state_.sigma_eta2)) {
        throw NumericalFailure(std::string(step) + ": non-finite state", iter_);
    }
}

void RtgpSampler::update_latent()
{
    const int n = data_.n();
    for (int i = 0; i < n; ++i) {
        const double mu = state_.mu(i);
        const int y = data_.y(i);
        if (config_.link == Link::probit) {
            constexpr double inf = std::numeric_limits<double>::infinity();
            state_.latent(i) = y == 1 ? rng_.truncated_normal(mu, 1.0, 0.0, inf)
                                      : rng_.truncated_normal(mu, 1.0, -inf, 0.0);
            state_.weight(i) = 1.0;
        } else {
            const double w = rng_.polya_gamma(mu);
            state_.weight(i) = w;
            state_.latent(i) = (double(y) - 0.5) / w;
        }
    }
    resid_ = state_.latent - state_.mu;
}

void RtgpSampler::kl_system(int k, Eigen::MatrixXd& W, Eigen::VectorXd& partial, Eigen::MatrixXd& P,
                            Eigen::VectorXd& b) const
{
    const int T = data_.T;
    const double inv_xi2 = 1.0 / state_.xi2;
    const Eigen::MatrixXd& psi = basis_.psi;
    Eigen::MatrixXd psi_active = psi;
    for (int t = 0; t < T; ++t) {
        if (!state_.beta_active(k, t)) {
            psi_active.row(t).setZero();
        }
    }
    W = data_.x_scale() * (data_.X.middleCols(k * T, T) * psi_active);
    partial = resid_ + W * state_.e.row(k).transpose();
    P = W.transpose() * state_.weight.asDiagonal() * W + psi.transpose() * psi * inv_xi2;
    P.diagonal() += (config_.sigma_e2 * basis_.lambdas).cwiseInverse();
    b = W.transpose() * state_.weight.cwiseProduct(partial) + psi.transpose() * state_.Etilde.row(k).transpose() * inv_xi2;
}

GaussianConditional RtgpSampler::kl_conditional(int k) const
{
    if (k < 0 || k >= data_.K) {
        throw InvalidInput("kl_conditional: channel out of range");
    }
    Eigen::MatrixXd W;
    Eigen::VectorXd partial;
    GaussianConditional out;
    Eigen::VectorXd b;
    kl_system(k, W, partial, out.precision, b);
    out.mean = out.precision.llt().solve(b);
    return out;
}

void RtgpSampler::update_kl_coeffs()
{
    Eigen::MatrixXd W;
    Eigen::MatrixXd P;
    Eigen::VectorXd partial;
    Eigen::VectorXd b;
    for (int k = 0; k < data_.K; ++k) {
        kl_system(k, W, partial, P, b);
        const Eigen::VectorXd c_old = W * state_.e.row(k).transpose();
        const Eigen::VectorXd e_new = draw_gaussian(rng_, P, b, "update_kl_coeffs", iter_);
        const Eigen::VectorXd c_new = W * e_new;
        resid_ = partial - c_new;
        state_.mu += c_new - c_old;
        state_.e.row(k) = e_new.transpose();
        state_.E.row(k) = (basis_.psi * e_new).transpose();
    }
}

double RtgpSampler::residual_dot(const Eigen::Ref<const Eigen::VectorXd>& c, double& wcc) const
{
    const auto wc = state_.weight.cwiseProduct(c);
    wcc = wc.dot(c);
    return wc.dot(resid_);
}

void RtgpSampler::update_relaxed_field()
{
    const int T = data_.T;
    const double xs = data_.x_scale();
    const double sd = std::sqrt(state_.xi2);
    for (int k = 0; k < data_.K; ++k) {
        for (int t = 0; t < T; ++t) {
            const auto col = data_.X.col(k * T + t);
            const double value = state_.E(k, t);
            const bool active = state_.beta_active(k, t);
            double diff = 0.0;
            if (value != 0.0 && data_.n() > 0) {
                double wcc = 0.0;
                const double wrc = residual_dot(col, wcc) * xs * value;
                wcc *= xs * xs * value * value;
                diff = active ? wrc + 0.5 * wcc : wrc - 0.5 * wcc;
            }
            const RelaxedDraw d = sample_relaxed(rng_, value, sd, state_.omega1, diff, 0.0);
            state_.Etilde(k, t) = d.value;
            if (d.active != active && value != 0.0) {
                const double step = (d.active ? 1.0 : -1.0) * value * xs;
                state_.mu.noalias() += step * col;
                resid_.noalias() -= step * col;
            }
        }
    }
}

void RtgpSampler::interaction_system(Eigen::MatrixXd& W, Eigen::VectorXd& partial, Eigen::MatrixXd& P,
                                     Eigen::VectorXd& b) const
{
    const double inv_xi2 = 1.0 / state_.xi2;
    W = data_.z_scale() * data_.Z;
    for (int m = 0; m < data_.q(); ++m) {
        if (!state_.zeta_active(m)) {
            W.col(m).setZero();
        }
    }
    partial = resid_ + W * state_.eta;
    P = W.transpose() * state_.weight.asDiagonal() * W;
    P.diagonal().array() += inv_xi2 + 1.0 / state_.sigma_eta2;
    b = W.transpose() * state_.weight.cwiseProduct(partial) + state_.etatilde * inv_xi2;
}

GaussianConditional RtgpSampler::interaction_conditional() const
{
    Eigen::MatrixXd W;
    Eigen::VectorXd partial;
    GaussianConditional out;
    Eigen::VectorXd b;
    interaction_system(W, partial, out.precision, b);
    out.mean = out.precision.llt().solve(b);
    return out;
}

InverseGammaParams RtgpSampler::sigma_eta2_conditional() const
{
    return {config_.a_eta + 0.5 * data_.q(), config_.b_eta + 0.5 * state_.eta.squaredNorm()};
}

void RtgpSampler::update_interactions()
{
    const int q = data_.q();
    const double zs = data_.z_scale();
    Eigen::MatrixXd W;
    Eigen::MatrixXd P;
    Eigen::VectorXd partial;
    Eigen::VectorXd b;
    interaction_system(W, partial, P, b);
    const Eigen::VectorXd c_old = W * state_.eta;
    state_.eta = draw_gaussian(rng_, P, b, "update_interactions", iter_);
    const Eigen::VectorXd c_new = W * state_.eta;
    resid_ = partial - c_new;
    state_.mu += c_new - c_old;

    const double sd = std::sqrt(state_.xi2);
    for (int m = 0; m < q; ++m) {
        const auto col = data_.Z.col(m);
        const double value = state_.eta(m);
        const bool active = state_.zeta_active(m);
        double diff = 0.0;
        if (value != 0.0 && data_.n() > 0) {
            double wcc = 0.0;
            const double wrc = residual_dot(col, wcc) * zs * value;
            wcc *= zs * zs * value * value;
            diff = active ? wrc + 0.5 * wcc : wrc - 0.5 * wcc;
        }
        const RelaxedDraw d = sample_relaxed(rng_, value, sd, state_.omega2, diff, 0.0);
        state_.etatilde(m) = d.value;
        if (d.active != active && value != 0.0) {
            const double step = (d.active ? 1.0 : -1.0) * value * zs;
            state_.mu.noalias() += step * col;
            resid_.noalias() -= step * col;
        }
    }

    const InverseGammaParams ig = sigma_eta2_conditional();
    state_.sigma_eta2 = 1.0 / rng_.gamma(ig.shape, ig.rate);
    if (!(state_.sigma_eta2 > 0.0) || !std::isfinite(state_.sigma_eta2)) {
        throw NumericalFailure("update_interactions: interaction variance draw is not positive", iter_);
    }
}

// Samples one threshold from its discrete conditional on the quantile grid.
// mu is evaluated for every candidate with the latent variables integrated out.
ThresholdConditional RtgpSampler::threshold_conditional(bool for_beta) const
{
    ThresholdConditional out;
    const double current = for_beta ? state_.omega1 : state_.omega2;
    const Eigen::MatrixXd& mat = for_beta ? data_.X : data_.Z;
    const double scale = for_beta ? data_.x_scale() : data_.z_scale();
    const Eigen::VectorXd field = for_beta ? flatten(state_.E) : state_.eta;
    const Eigen::VectorXd relaxed = for_beta ? flatten(state_.Etilde) : state_.etatilde;
    const auto size = static_cast<std::size_t>(relaxed.size());
    if (size == 0) {
        return out;
    }

    std::vector<double> mags(size);
    for (std::size_t c = 0; c < size; ++c) {
        mags[c] = std::abs(relaxed(static_cast<Eigen::Index>(c)));
    }
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    const double lo = quantile_sorted(sorted, config_.omega_grid.lower_quantile);
    const double hi = quantile_sorted(sorted, config_.omega_grid.upper_quantile);
    if (!(hi > lo)) {
        return out;
    }
    const int Zp = config_.omega_grid.points;
    out.grid.resize(static_cast<std::size_t>(Zp));
    for (int z = 0; z < Zp; ++z) {
        out.grid[static_cast<std::size_t>(z)] = lo + (hi - lo) * double(z) / double(Zp - 1);
    }

    // Predictor with this block removed.
    Eigen::VectorXd active_field = field;
    for (std::size_t c = 0; c < size; ++c) {
        if (!(mags[c] > current)) {
            active_field(static_cast<Eigen::Index>(c)) = 0.0;
        }
    }
    Eigen::VectorXd m = state_.mu - scale * (mat * active_field);

    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mags[a] > mags[b]; });

    // Walk the grid downward so each coefficient enters m once.
    out.log_weights.resize(out.grid.size());
    std::size_t next = 0;
    const int n = data_.n();
    for (int z = Zp - 1; z >= 0; --z) {
        const double omega = out.grid[static_cast<std::size_t>(z)];
        while (next < size && mags[order[next]] > omega) {
            const auto c = static_cast<Eigen::Index>(order[next]);
            m.noalias() += (scale * field(c)) * mat.col(c);
            ++next;
        }
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += bernoulli_loglik(config_.link, data_.y(i), m(i));
        }
        out.log_weights[static_cast<std::size_t>(z)] = acc;
    }
    return out;
}

double RtgpSampler::threshold_step(bool for_beta)
{
    const double current = for_beta ? state_.omega1 : state_.omega2;
    const ThresholdConditional cond = threshold_conditional(for_beta);
    if (cond.grid.empty()) {
        return current;
    }
    const std::vector<double>& ll = cond.log_weights;
    const double top = *std::max_element(ll.begin(), ll.end());
    if (!std::isfinite(top)) {
        return current;
    }
    std::vector<double> w(ll.size());
    for (std::size_t z = 0; z < ll.size(); ++z) {
        w[z] = std::exp(ll[z] - top);
    }
    const double u = rng_.uniform() * std::accumulate(w.begin(), w.end(), 0.0);
    double run = 0.0;
    for (std::size_t z = 0; z < w.size(); ++z) {
        run += w[z];
        if (u < run) {
            return cond.grid[z];
        }
    }
    return cond.grid.back();
}

void RtgpSampler::update_thresholds()
{
    state_.omega1 = threshold_step(true);
    rebuild_cache();
    if (data_.q() > 0) {
        state_.omega2 = threshold_step(false);
        rebuild_cache();
    }
}

PosteriorDraws run_chain(const ModelData& data, const KLBasis& basis, const RtgpConfig& config)
{
    RtgpSampler sampler(data, basis, config);
    PosteriorDraws out;
    out.K = data.K;
    out.T = data.T;
    out.q = data.q();
    out.link = config.link;
    out.use_interactions = data.q() > 0;
    out.iterations = config.iterations;
    out.burn_in = config.burn_in;
    out.thin = config.thin;
    out.seed = config.seed;
    out.basis = basis;

    const int D = config.draw_count();
    const int p = data.p();
    const int q = data.q();
    out.beta.resize(p, D);
    out.zeta.resize(q, D);
    out.gamma_beta.resize(p, D);
    out.gamma_zeta.resize(q, D);
    out.omega1_trace.reserve(static_cast<std::size_t>(config.iterations));
    out.omega2_trace.reserve(static_cast<std::size_t>(config.iterations));
    out.sigma_eta2_trace.reserve(static_cast<std::size_t>(config.iterations));

    int stored = 0;
    for (int iter = 1; iter <= config.iterations; ++iter) {
        sampler.sweep(iter);
        const RtgpState& s = sampler.state();
        out.omega1_trace.push_back(s.omega1);
        out.omega2_trace.push_back(s.omega2);
        out.sigma_eta2_trace.push_back(s.sigma_eta2);
        if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0 && stored < D) {
            for (int k = 0; k < data.K; ++k) {
                for (int t = 0; t < data.T; ++t) {
                    const bool on = s.beta_active(k, t);
                    out.gamma_beta(k * data.T + t, stored) = on ? 1 : 0;
                    out.beta(k * data.T + t, stored) = on ? static_cast<float>(s.E(k, t)) : 0.0f;
                }
            }
            for (int m = 0; m < q; ++m) {
                const bool on = s.zeta_active(m);
                out.gamma_zeta(m, stored) = on ? 1 : 0;
                out.zeta(m, stored) = on ? static_cast<float>(s.eta(m)) : 0.0f;
            }
            ++stored;
        }
        if (iter % 100 == 0 || iter == config.iterations) {
            out.max_cache_error = std::max(out.max_cache_error, sampler.mu_cache_error());
        }
        if (config.verbose && iter % 100 == 0) {
            std::cerr << "sweep " << iter << "/" << config.iterations << "  omega1=" << s.omega1
                      << "  omega2=" << s.omega2 << "  xi2=" << s.xi2 << '\n';
        }
    }
    return out;
}

InclusionMaps posterior_inclusion(const PosteriorDraws& draws)
{
    if (draws.D() < 1) {
        throw InvalidInput("posterior_inclusion: no draws");
    }
    InclusionMaps maps;
    const Eigen::VectorXd gb = draws.gamma_beta.cast<double>().rowwise().mean();
    maps.beta.resize(draws.K, draws.T);
    for (int k = 0; k < draws.K; ++k) {
        for (int t = 0; t < draws.T; ++t) {
            maps.beta(k, t) = gb(k * draws.T + t);
        }
    }
    maps.zeta = draws.q > 0 ? Eigen::VectorXd(draws.gamma_zeta.cast<double>().rowwise().mean())
                            : Eigen::VectorXd();
    return maps;
}

bool relaxed_indicator(Random& rng, double f, double omega, double xi2)
{
    return std::abs(rng.normal(f, std::sqrt(xi2))) > omega;
}

}  // namespace rtgp
