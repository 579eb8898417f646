#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; both evaluate every output element with the same
// expression, so their results are bit-identical.

#include "rtgp/eeg_data.hpp"
#include "rtgp/random.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rtgp::kernels {

namespace serial {

/// n x q Fisher-z interaction features for every flash.
Eigen::MatrixXd interaction_matrix(const std::vector<FlashRecord>& flashes, bool* degenerate);

/// mu_i = x_scale * X_i . beta + z_scale * Z_i . zeta  (Z may have zero columns).
Eigen::VectorXd linear_predictors(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double x_scale,
                                  const Eigen::MatrixXd& Z, const Eigen::VectorXd& zeta, double z_scale);

/// Per-flash mean over draws of link_inverse(mu). Draws are stored one per column:
/// beta_draws is p x D, zeta_draws is q x D (q may be 0).
Eigen::VectorXd mean_link_inverse(const Eigen::MatrixXd& X, const Eigen::MatrixXf& beta_draws, double x_scale,
                                  const Eigen::MatrixXd& Z, const Eigen::MatrixXf& zeta_draws, double z_scale,
                                  Link link);

}  // namespace serial

namespace omp {

Eigen::MatrixXd interaction_matrix(const std::vector<FlashRecord>& flashes, bool* degenerate);

Eigen::VectorXd linear_predictors(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double x_scale,
                                  const Eigen::MatrixXd& Z, const Eigen::VectorXd& zeta, double z_scale);

Eigen::VectorXd mean_link_inverse(const Eigen::MatrixXd& X, const Eigen::MatrixXf& beta_draws, double x_scale,
                                  const Eigen::MatrixXd& Z, const Eigen::MatrixXf& zeta_draws, double z_scale,
                                  Link link);

}  // namespace omp

}  // namespace rtgp::kernels
