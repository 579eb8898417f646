#include "rtgp/kernels.hpp"

#include "rtgp/error.hpp"

#include <omp.h>

namespace rtgp::kernels {

namespace {

int common_q(const std::vector<FlashRecord>& flashes)
{
    if (flashes.empty()) {
        return 0;
    }
    const auto K = flashes.front().signal.rows();
    return static_cast<int>(K * (K - 1) / 2);
}

void interaction_row(const FlashRecord& f, Eigen::MatrixXd& out, Eigen::Index i, bool& degenerate)
{
    const auto res = compute_interactions(f.signal.cast<double>());
    if (res.z.size() != out.cols()) {
        throw StructuralError("interaction_matrix: flashes differ in channel count");
    }
    out.row(i) = res.z.transpose();
    degenerate = degenerate || res.degenerate;
}

void check_predictor_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, const Eigen::MatrixXd& Z,
                            const Eigen::VectorXd& zeta)
{
    if (X.cols() != beta.size() || Z.cols() != zeta.size() || (Z.cols() > 0 && Z.rows() != X.rows())) {
        throw StructuralError("linear_predictors: dimension mismatch");
    }
}

double predictor_row(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double x_scale,
                     const Eigen::MatrixXd& Z, const Eigen::VectorXd& zeta, double z_scale, Eigen::Index i)
{
    double mu = x_scale * X.row(i).dot(beta);
    if (Z.cols() > 0) {
        mu += z_scale * Z.row(i).dot(zeta);
    }
    return mu;
}

struct ScoringInputs {
    Eigen::MatrixXd Xt;  // p x n
    Eigen::MatrixXd Zt;  // q x n
    Eigen::MatrixXd B;   // p x D
    Eigen::MatrixXd H;   // q x D
};

ScoringInputs prepare_scoring(const Eigen::MatrixXd& X, const Eigen::MatrixXf& beta_draws, const Eigen::MatrixXd& Z,
                              const Eigen::MatrixXf& zeta_draws)
{
    if (beta_draws.rows() != X.cols()) {
        throw StructuralError("mean_link_inverse: draws do not match the design width");
    }
    if (beta_draws.cols() < 1) {
        throw InvalidInput("mean_link_inverse: no draws");
    }
    const bool with_z = zeta_draws.rows() > 0;
    if (with_z && (zeta_draws.rows() != Z.cols() || zeta_draws.cols() != beta_draws.cols() || Z.rows() != X.rows())) {
        throw StructuralError("mean_link_inverse: interaction draws do not match the design");
    }
    ScoringInputs in;
    in.Xt = X.transpose();
    in.B = beta_draws.cast<double>();
    if (with_z) {
        in.Zt = Z.transpose();
        in.H = zeta_draws.cast<double>();
    }
    return in;
}

double score_row(const ScoringInputs& in, double x_scale, double z_scale, Link link, Eigen::Index i)
{
    Eigen::RowVectorXd mu = x_scale * (in.Xt.col(i).transpose() * in.B);
    if (in.H.rows() > 0) {
        mu += z_scale * (in.Zt.col(i).transpose() * in.H);
    }
    double acc = 0.0;
    for (Eigen::Index d = 0; d < mu.size(); ++d) {
        acc += link_inverse(link, mu(d));
    }
    return acc / double(mu.size());
}

}  // namespace

namespace serial {

Eigen::MatrixXd interaction_matrix(const std::vector<FlashRecord>& flashes, bool* degenerate)
{
    const int q = common_q(flashes);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(flashes.size()), q);
    bool deg = false;
    for (std::size_t i = 0; i < flashes.size(); ++i) {
        interaction_row(flashes[i], out, static_cast<Eigen::Index>(i), deg);
    }
    if (degenerate) {
        *degenerate = deg;
    }
    return out;
}

Eigen::VectorXd linear_predictors(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double x_scale,
                                  const Eigen::MatrixXd& Z, const Eigen::VectorXd& zeta, double z_scale)
{
    check_predictor_shapes(X, beta, Z, zeta);
    Eigen::VectorXd mu(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        mu(i) = predictor_row(X, beta, x_scale, Z, zeta, z_scale, i);
    }
    return mu;
}

Eigen::VectorXd mean_link_inverse(const Eigen::MatrixXd& X, const Eigen::MatrixXf& beta_draws, double x_scale,
                                  const Eigen::MatrixXd& Z, const Eigen::MatrixXf& zeta_draws, double z_scale,
                                  Link link)
{
    const ScoringInputs in = prepare_scoring(X, beta_draws, Z, zeta_draws);
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        out(i) = score_row(in, x_scale, z_scale, link, i);
    }
    return out;
}

}  // namespace serial

namespace omp {

Eigen::MatrixXd interaction_matrix(const std::vector<FlashRecord>& flashes, bool* degenerate)
{
    const int q = common_q(flashes);
    const auto n = static_cast<long>(flashes.size());
    Eigen::MatrixXd out(n, q);
    bool deg = false;
    bool shape_error = false;
#pragma omp parallel for schedule(static) reduction(|| : deg, shape_error)
    for (long i = 0; i < n; ++i) {
        try {
            interaction_row(flashes[static_cast<std::size_t>(i)], out, i, deg);
        } catch (const Error&) {
            shape_error = true;
        }
    }
    if (shape_error) {
        throw StructuralError("interaction_matrix: flashes differ in shape or are too short");
    }
    if (degenerate) {
        *degenerate = deg;
    }
    return out;
}

Eigen::VectorXd linear_predictors(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double x_scale,
                                  const Eigen::MatrixXd& Z, const Eigen::VectorXd& zeta, double z_scale)
{
    check_predictor_shapes(X, beta, Z, zeta);
    const long n = X.rows();
    Eigen::VectorXd mu(n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        mu(i) = predictor_row(X, beta, x_scale, Z, zeta, z_scale, i);
    }
    return mu;
}

Eigen::VectorXd mean_link_inverse(const Eigen::MatrixXd& X, const Eigen::MatrixXf& beta_draws, double x_scale,
                                  const Eigen::MatrixXd& Z, const Eigen::MatrixXf& zeta_draws, double z_scale,
                                  Link link)
{
    const ScoringInputs in = prepare_scoring(X, beta_draws, Z, zeta_draws);
    const long n = X.rows();
    Eigen::VectorXd out(n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        out(i) = score_row(in, x_scale, z_scale, link, i);
    }
    return out;
}

}  // namespace omp

}  // namespace rtgp::kernels
