#include "rtgp/pipeline.hpp"

#include "rtgp/error.hpp"

namespace rtgp {

FitResult fit_rtgp(const SessionData& calibration, const KernelConfig& kernel, const RtgpConfig& config)
{
    if (!calibration.labeled()) {
        throw InvalidInput("fit: calibration session must be labeled");
    }
    calibration.validate();
    config.validate();

    FitResult out;
    RhoSearch search = kernel.search;
    search.alpha = kernel.alpha;
    out.report.rho = kernel.rho > 0.0 ? kernel.rho : estimate_rho(calibration, search);

    const KLBasis basis = build_kl_basis(unit_time_grid(calibration.T), KernelParams{kernel.alpha, out.report.rho},
                                         kernel.variance_threshold);
    out.report.L = basis.L();
    out.report.variance_fraction = basis.variance_fraction;
    out.report.reconstruction_error = basis.reconstruction_error();

    const DesignMatrices design = assemble_design(calibration);
    out.report.standardization_degenerate = design.standardization_degenerate;
    out.report.interaction_degenerate = design.interaction_degenerate;
    const ModelData data = ModelData::from_design(design, calibration.K, calibration.T, config.use_interactions);

    out.draws = run_chain(data, basis, config);
    out.draws.standardizer = design.standardizer;
    out.report.max_mu_cache_error = out.draws.max_cache_error;
    return out;
}

Method parse_method(const std::string& name)
{
    if (name == "SIRTGP-P") {
        return Method::sirtgp_probit;
    }
    if (name == "SIRTGP-L") {
        return Method::sirtgp_logit;
    }
    if (name == "RTGP-P") {
        return Method::rtgp_probit;
    }
    if (name == "RTGP-L") {
        return Method::rtgp_logit;
    }
    if (name == "SWLDA") {
        return Method::swlda;
    }
    throw InvalidInput("unknown method '" + name + "' (expected SIRTGP-P, SIRTGP-L, RTGP-P, RTGP-L or SWLDA)");
}

std::string to_string(Method method)
{
    switch (method) {
    case Method::sirtgp_probit:
        return "SIRTGP-P";
    case Method::sirtgp_logit:
        return "SIRTGP-L";
    case Method::rtgp_probit:
        return "RTGP-P";
    case Method::rtgp_logit:
        return "RTGP-L";
    case Method::swlda:
        return "SWLDA";
    }
    return "?";
}

MethodOutcome evaluate_method(Method method, const SessionData& calibration, const SessionData& test,
                              const SupportMask& truth, const MethodSettings& settings, std::uint64_t seed)
{
    MethodOutcome out;
    Eigen::VectorXd scores;
    if (method == Method::swlda) {
        const DesignMatrices cal = assemble_design(calibration);
        const SwldaModel model = fit_swlda(cal.X, cal.y, settings.swlda);
        const DesignMatrices tst = assemble_design(test, cal.standardizer);
        scores = swlda_scores(model, tst.X);
        out.support = swlda_support(model, calibration.K, calibration.T);
    } else {
        RtgpConfig cfg = settings.rtgp;
        cfg.seed = seed;
        cfg.link = (method == Method::sirtgp_logit || method == Method::rtgp_logit) ? Link::logit : Link::probit;
        cfg.use_interactions = method == Method::sirtgp_probit || method == Method::sirtgp_logit;
        const FitResult fit = fit_rtgp(calibration, settings.kernel, cfg);
        scores = score_flashes(fit.draws, test);
        out.support = support_from_draws(fit.draws, settings.support_rule);
    }
    const ScoreTable table = ScoreTable::from_flashes(test, scores);
    out.accuracy = accuracy_curve(table, test.target_text(), test.layout);
    for (int k = 0; k < calibration.K; ++k) {
        out.eswr.push_back(eswr(out.support, truth, k));
        out.eewr.push_back(eewr(out.support, truth, k));
    }
    return out;
}

}  // namespace rtgp
