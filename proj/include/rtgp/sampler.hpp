#pragma once

#include "rtgp/eeg_data.hpp"
#include "rtgp/gp_kernel.hpp"
#include "rtgp/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace rtgp {

/// Relaxation variance schedule: constant start value for the warm phase,
/// geometric decay to the end value at the end of burn-in, constant after.
struct Xi2Schedule {
    int warm_iters = 200;
    double start = 1.0;
    double end = 1e-4;

    /// Value used during 1-based sweep `iter`.
    double at(int iter, int burn_in) const;
};

/// Adaptive threshold grid: Z points between two empirical quantiles.
struct OmegaGrid {
    int points = 10;
    double lower_quantile = 0.25;
    double upper_quantile = 0.90;
};

struct RtgpConfig {
    Link link = Link::probit;
    bool use_interactions = true;
    int iterations = 3000;
    int burn_in = 1000;
    int thin = 5;
    double sigma_e2 = 10.0;
    double a_eta = 0.001;
    double b_eta = 0.001;
    Xi2Schedule xi2;
    OmegaGrid omega_grid;
    /// When false both thresholds stay at zero for the whole run.
    bool adaptive_thresholds = true;
    std::uint64_t seed = 1;
    bool verbose = false;

    void validate() const;
    int draw_count() const { return (iterations - burn_in) / thin; }
};

/// Flattened model inputs. Column c = k*T + t of X holds channel k, time t.
struct ModelData {
    int K = 0;
    int T = 0;
    Eigen::MatrixXd X;  ///< n x p (standardized, unscaled)
    Eigen::MatrixXd Z;  ///< n x q (may have 0 columns)
    Eigen::VectorXi y;  ///< 0/1

    int n() const { return static_cast<int>(X.rows()); }
    int p() const { return K * T; }
    int q() const { return static_cast<int>(Z.cols()); }
    double x_scale() const { return 1.0 / double(p()); }
    double z_scale() const { return q() > 0 ? 1.0 / double(q()) : 0.0; }

    static ModelData from_design(const DesignMatrices& design, int K, int T, bool use_interactions);
    void validate() const;
};

/// One Gibbs chain state.
struct RtgpState {
    Eigen::MatrixXd e;       ///< K x L KL coefficients
    Eigen::MatrixXd E;       ///< K x T, E = e psi'
    Eigen::MatrixXd Etilde;  ///< K x T relaxed field
    Eigen::VectorXd eta;
    Eigen::VectorXd etatilde;
    double sigma_eta2 = 1.0;
    double omega1 = 0.0;
    double omega2 = 0.0;
    double xi2 = 1.0;
    Eigen::VectorXd latent;  ///< working response (probit latent or PG-scaled label)
    Eigen::VectorXd weight;  ///< 1 (probit) or the Polya-Gamma variate (logit)
    Eigen::VectorXd mu;      ///< cached linear predictors

    /// Coefficient fields after thresholding.
    Eigen::MatrixXd beta() const;
    Eigen::VectorXd zeta() const;
    bool beta_active(int k, int t) const { return std::abs(Etilde(k, t)) > omega1; }
    bool zeta_active(int m) const { return std::abs(etatilde(m)) > omega2; }
};

struct PosteriorDraws {
    int K = 0;
    int T = 0;
    int q = 0;  ///< 0 when interactions are disabled
    Link link = Link::probit;
    bool use_interactions = false;
    int iterations = 0;
    int burn_in = 0;
    int thin = 1;
    std::uint64_t seed = 0;
    KLBasis basis;
    std::optional<Standardizer> standardizer;

    Eigen::MatrixXf beta;   ///< p x D
    Eigen::MatrixXf zeta;   ///< q x D
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> gamma_beta;  ///< p x D
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> gamma_zeta;  ///< q x D

    // Per-sweep traces (not persisted).
    std::vector<double> omega1_trace;
    std::vector<double> omega2_trace;
    std::vector<double> sigma_eta2_trace;
    /// Largest |mu_cache - mu| seen at the periodic coherence checks.
    double max_cache_error = 0.0;

    int D() const { return static_cast<int>(beta.cols()); }
    int p() const { return K * T; }
    Eigen::MatrixXd beta_mean() const;  ///< K x T
};

/// Gaussian full conditional in canonical form.
struct GaussianConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd precision;
};

struct InverseGammaParams {
    double shape = 0.0;
    double rate = 0.0;
};

/// Discrete threshold conditional. Empty grid when the quantile grid is degenerate.
struct ThresholdConditional {
    std::vector<double> grid;
    std::vector<double> log_weights;  ///< unnormalized
};

/// Sampler over one data set. Exposes the individual sweep steps for testing.
class RtgpSampler {
public:
    RtgpSampler(const ModelData& data, const KLBasis& basis, const RtgpConfig& config);

    RtgpState& state() { return state_; }
    const RtgpState& state() const { return state_; }
    Random& rng() { return rng_; }

    /// Sets xi2 and thresholds for 1-based sweep `iter`, then runs every step.
    void sweep(int iter);

    void update_latent();
    void update_kl_coeffs();
    void update_relaxed_field();
    void update_interactions();
    void update_thresholds();

    /// Full conditionals at the current state.
    GaussianConditional kl_conditional(int k) const;
    GaussianConditional interaction_conditional() const;
    InverseGammaParams sigma_eta2_conditional() const;
    ThresholdConditional threshold_conditional(bool for_beta) const;

    /// Recomputes E and mu from scratch.
    void rebuild_cache();
    /// Max |mu_cache - direct mu| and max |E - e psi'|.
    double mu_cache_error() const;
    double field_cache_error() const;

    /// Direct evaluation of the linear predictor for flash i.
    double linear_predictor(int i) const;

    int sweeps_done() const { return iter_; }

private:
    double residual_dot(const Eigen::Ref<const Eigen::VectorXd>& c, double& wcc) const;
    void kl_system(int k, Eigen::MatrixXd& W, Eigen::VectorXd& partial, Eigen::MatrixXd& P,
                   Eigen::VectorXd& b) const;
    void interaction_system(Eigen::MatrixXd& W, Eigen::VectorXd& partial, Eigen::MatrixXd& P,
                            Eigen::VectorXd& b) const;
    double threshold_step(bool for_beta);
    void check_finite(const char* step) const;

    const ModelData& data_;
    const KLBasis& basis_;
    RtgpConfig config_;
    Random rng_;
    RtgpState state_;
    Eigen::VectorXd resid_;  ///< latent - mu
    int iter_ = 0;
};

PosteriorDraws run_chain(const ModelData& data, const KLBasis& basis, const RtgpConfig& config);

/// Mean inclusion per channel-time (K x T) and per pair (q).
struct InclusionMaps {
    Eigen::MatrixXd beta;
    Eigen::VectorXd zeta;
};

InclusionMaps posterior_inclusion(const PosteriorDraws& draws);

/// Draw-level relaxed indicator I(|f + xi N(0,1)| > omega).
bool relaxed_indicator(Random& rng, double f, double omega, double xi2);
/// Hard-threshold indicator I(|f| > omega).
inline bool hard_indicator(double f, double omega) { return std::abs(f) > omega; }

}  // namespace rtgp
