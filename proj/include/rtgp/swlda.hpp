#pragma once

#include "rtgp/decode.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rtgp {

struct SwldaOptions {
    double p_enter = 0.05;
    double p_remove = 0.10;
    int max_features = 60;
};

/// Stepwise least-squares discriminant on 0/1 labels.
/// Discriminant value is intercept + weights . x[selected], centered so that
/// the training mean maps to 0.
struct SwldaModel {
    std::vector<int> selected;  ///< feature indices, in selection order
    Eigen::VectorXd weights;    ///< one per selected feature
    double intercept = 0.0;
    int steps = 0;              ///< add/remove moves performed

    double discriminant(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

SwldaModel fit_swlda(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const SwldaOptions& options = {});

/// logistic(discriminant) per row.
Eigen::VectorXd swlda_scores(const SwldaModel& model, const Eigen::MatrixXd& X);

/// Selected positions of a channel-major K*T feature layout.
SupportMask swlda_support(const SwldaModel& model, int K, int T);

/// Partial-F upper-tail p-value with (1, df) degrees of freedom.
double partial_f_pvalue(double F, int df);

void write_swlda_csv(const SwldaModel& model, const std::string& path);

}  // namespace rtgp
