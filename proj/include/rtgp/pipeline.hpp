#pragma once

#include "rtgp/decode.hpp"
#include "rtgp/gp_kernel.hpp"
#include "rtgp/sampler.hpp"
#include "rtgp/swlda.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rtgp {

struct KernelConfig {
    double alpha = 0.01;
    double variance_threshold = 0.99;
    /// Fixed smoothness; 0 estimates it from the calibration session.
    double rho = 0.0;
    RhoSearch search = RhoSearch::defaults();
};

struct FitReport {
    double rho = 0.0;
    int L = 0;
    double variance_fraction = 0.0;
    double reconstruction_error = 0.0;
    double max_mu_cache_error = 0.0;
    bool standardization_degenerate = false;
    bool interaction_degenerate = false;
};

struct FitResult {
    PosteriorDraws draws;
    FitReport report;
};

/// Smoothness estimate, KL basis, Gibbs chain. Requires a labeled session.
FitResult fit_rtgp(const SessionData& calibration, const KernelConfig& kernel, const RtgpConfig& config);

enum class Method { sirtgp_probit, sirtgp_logit, rtgp_probit, rtgp_logit, swlda };

Method parse_method(const std::string& name);
std::string to_string(Method method);

struct MethodSettings {
    KernelConfig kernel;
    RtgpConfig rtgp;
    SwldaOptions swlda;
    SupportRule support_rule = SupportRule::median_model;
};

struct MethodOutcome {
    std::vector<double> accuracy;  ///< per budget
    SupportMask support;
    std::vector<std::optional<double>> eswr;  ///< per channel
    std::vector<std::optional<double>> eewr;
};

/// Trains on `calibration`, decodes `test`, scores support against `truth`.
MethodOutcome evaluate_method(Method method, const SessionData& calibration, const SessionData& test,
                              const SupportMask& truth, const MethodSettings& settings, std::uint64_t seed);

}  // namespace rtgp
