#pragma once

#include "rtgp/decode.hpp"
#include "rtgp/eeg_data.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace rtgp {

/// Spatial noise correlation for target flashes used by the reference design.
Eigen::MatrixXd reference_target_correlation();
/// Spatial noise correlation for nontarget flashes used by the reference design.
Eigen::MatrixXd reference_nontarget_correlation();

struct SimConfig {
    double alpha = 2.5;   ///< target/nontarget peak ratio
    double tau2 = 9.0;    ///< spatial noise scale
    double sigma2 = 20.0; ///< white noise variance
    int K = 6;
    int T = 50;
    int R = 19;
    int S = 5;
    int J = 12;
    std::string text = "THE_QUICK_BROWN_FOX";
    Eigen::MatrixXd sigma_target = reference_target_correlation();
    Eigen::MatrixXd sigma_nontarget = reference_nontarget_correlation();

    // Evoked template family: Gaussian bumps on the first centers.size() channels.
    double amplitude = 2.0;
    double width = 0.08;
    std::vector<double> centers{0.35, 0.40, 0.45, 0.50};
    /// Bumps are zero beyond this many widths from their center.
    double support_halfwidth = 3.0;

    double sample_rate = 0.0;  ///< 0 selects T / 0.6 s
    FlashTiming timing;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EvokedTemplates {
    Eigen::MatrixXd target;     ///< K x T
    Eigen::MatrixXd nontarget;  ///< K x T
};

EvokedTemplates make_templates(const SimConfig& config);

/// Points where target and nontarget templates differ.
SupportMask truth_support(const SimConfig& config);

/// Labeled session. `stream` separates independent sessions drawn from one config
/// (0 = calibration, 1 = test by convention).
SessionData generate_session(const SimConfig& config, std::uint64_t stream = 0);

/// Throws InvalidInput unless `m` is a symmetric, unit-diagonal, positive definite correlation matrix.
void validate_correlation(const Eigen::MatrixXd& m, const std::string& name);

}  // namespace rtgp
