#pragma once

#include "rtgp/eeg_data.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rtgp {

/// Modified squared-exponential kernel parameters.
struct KernelParams {
    double alpha = 0.01;  ///< variance decay, >= 0
    double rho = 1.0;     ///< smoothness, > 0

    void validate() const;
};

/// exp{-alpha (x^2 + x'^2) - rho (x - x')^2}
double mse_kernel(double x, double xp, const KernelParams& params);

/// Time grid t -> (t-1)/(T-1) on [0, 1]; {0} when T == 1.
Eigen::VectorXd unit_time_grid(int T);

/// Symmetric Gram matrix of the kernel on `grid` (no jitter).
Eigen::MatrixXd gram_matrix(const Eigen::VectorXd& grid, const KernelParams& params);

/// Jitter added to the Gram diagonal before decomposition.
inline constexpr double kGramJitter = 1e-10;

/// Truncated Karhunen-Loeve basis of the kernel on a grid.
struct KLBasis {
    Eigen::VectorXd grid;     ///< T locations
    KernelParams params;
    double variance_threshold = 0.99;
    Eigen::VectorXd lambdas;  ///< L eigenvalues, descending, > 0
    Eigen::MatrixXd psi;      ///< T x L orthonormal eigenvectors
    double variance_fraction = 1.0;

    int T() const { return static_cast<int>(grid.size()); }
    int L() const { return static_cast<int>(lambdas.size()); }

    /// ||Gram - psi diag(lambda) psi'||_F / ||Gram||_F
    double reconstruction_error() const;
};

KLBasis build_kl_basis(const Eigen::VectorXd& grid, const KernelParams& params, double variance_threshold);

/// Grids searched by estimate_rho.
struct RhoSearch {
    std::vector<double> rho_grid;
    std::vector<double> noise_grid;  ///< noise variance relative to waveform variance
    double alpha = 0.01;

    /// 30 log-spaced rho in [0.5, 500]; 10 log-spaced noise levels in [1e-3, 1].
    static RhoSearch defaults();
};

std::vector<double> log_spaced(double lo, double hi, int count);

/// Log marginal likelihood of a zero-mean GP (kernel + noise I) for one waveform.
double gp_log_marginal(const Eigen::VectorXd& y, const Eigen::VectorXd& grid, const KernelParams& params,
                       double noise_variance);

/// Per-waveform argmax rho; flat waveforms get NaN.
std::vector<double> estimate_rho_per_channel(const std::vector<Eigen::VectorXd>& waveforms,
                                             const RhoSearch& search);

/// Mean of the per-channel argmax rho over non-flat waveforms.
double estimate_rho(const std::vector<Eigen::VectorXd>& waveforms, const RhoSearch& search);

/// Channel grand-average waveforms over all flashes of a session.
std::vector<Eigen::VectorXd> channel_grand_averages(const SessionData& session);

double estimate_rho(const SessionData& session, const RhoSearch& search);

}  // namespace rtgp
