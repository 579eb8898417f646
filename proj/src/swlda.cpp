#include "rtgp/swlda.hpp"

#include "rtgp/csv.hpp"
#include "rtgp/error.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rtgp {

double SwldaModel::discriminant(const Eigen::Ref<const Eigen::RowVectorXd>& x) const
{
    double d = intercept;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        d += weights(static_cast<Eigen::Index>(i)) * x(selected[i]);
    }
    return d;
}

double partial_f_pvalue(double F, int df)
{
    if (df < 1) {
        throw InvalidInput("partial_f_pvalue: df must be >= 1");
    }
    if (std::isnan(F)) {
        return 1.0;
    }
    if (F == std::numeric_limits<double>::infinity()) {
        return 0.0;
    }
    if (F <= 0.0) {
        return 1.0;
    }
    const boost::math::fisher_f_distribution<double> dist(1.0, double(df));
    return boost::math::cdf(boost::math::complement(dist, F));
}

namespace {

constexpr double kSingularTol = 1e-10;

struct Fit {
    Eigen::VectorXd coef;    ///< intercept first
    Eigen::VectorXd inv_diag;
    double rss = 0.0;
};

Fit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<int>& sel)
{
    const auto n = X.rows();
    Eigen::MatrixXd A(n, static_cast<Eigen::Index>(sel.size()) + 1);
    A.col(0).setOnes();
    for (std::size_t i = 0; i < sel.size(); ++i) {
        A.col(static_cast<Eigen::Index>(i) + 1) = X.col(sel[i]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    Fit f;
    f.coef = qr.solve(y);
    f.rss = (y - A * f.coef).squaredNorm();
    const Eigen::MatrixXd gram = A.transpose() * A;
    f.inv_diag = gram.ldlt().solve(Eigen::MatrixXd::Identity(A.cols(), A.cols())).diagonal();
    return f;
}

// Residualizes y and every column of X on [1, X_sel] with modified Gram-Schmidt.
class Projector {
public:
    Projector(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) : X_(X), y_(y) { reset({}); }

    void reset(const std::vector<int>& sel)
    {
        Xres_ = X_.rowwise() - X_.colwise().mean();
        r_ = y_.array() - y_.mean();
        for (int c : sel) {
            add(c);
        }
    }

    // Returns false when column c is (numerically) in the current span.
    bool admissible(int c, double centered_norm2) const
    {
        return Xres_.col(c).squaredNorm() > kSingularTol * std::max(centered_norm2, 1e-300);
    }

    void add(int c)
    {
        const Eigen::VectorXd v = Xres_.col(c) / Xres_.col(c).norm();
        r_ -= v * v.dot(r_);
        const Eigen::RowVectorXd proj = v.transpose() * Xres_;
        Xres_.noalias() -= v * proj;
    }

    double rss() const { return r_.squaredNorm(); }
    double gain(int c) const
    {
        const double num = Xres_.col(c).dot(r_);
        return num * num / Xres_.col(c).squaredNorm();
    }

private:
    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    Eigen::MatrixXd Xres_;
    Eigen::VectorXd r_;
};

}  // namespace

SwldaModel fit_swlda(const Eigen::MatrixXd& X, const Eigen::VectorXi& yi, const SwldaOptions& options)
{
    const auto n = X.rows();
    const auto p = X.cols();
    if (yi.size() != n) {
        throw StructuralError("fit_swlda: label count differs from the row count");
    }
    if (n <= 10) {
        throw InvalidInput("fit_swlda: need more than 10 observations");
    }
    int ones = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (yi(i) != 0 && yi(i) != 1) {
            throw InvalidInput("fit_swlda: labels must be 0 or 1");
        }
        ones += yi(i);
    }
    if (ones == 0 || ones == n) {
        throw InvalidInput("fit_swlda: labels must contain both classes");
    }
    if (!(options.p_enter > 0.0 && options.p_enter <= options.p_remove && options.p_remove < 1.0) ||
        options.max_features < 1) {
        throw InvalidInput("fit_swlda: need 0 < p_enter <= p_remove < 1 and max_features >= 1");
    }

    const Eigen::VectorXd y = yi.cast<double>();
    const double tss = (y.array() - y.mean()).square().sum();
    const Eigen::VectorXd centered_norm2 = (X.rowwise() - X.colwise().mean()).colwise().squaredNorm();

    SwldaModel model;
    std::vector<int> sel;
    std::vector<bool> in_model(static_cast<std::size_t>(p), false);
    Projector proj(X, y);
    const int guard = 10 * options.max_features;

    while (model.steps < guard) {
        bool changed = false;

        // Forward: best admissible candidate by partial F.
        const auto size = static_cast<int>(sel.size());
        const int df_add = static_cast<int>(n) - size - 2;
        const double rss = proj.rss();
        if (size < options.max_features && df_add >= 1 && rss > 1e-12 * tss) {
            int best = -1;
            double best_gain = -1.0;
            for (Eigen::Index c = 0; c < p; ++c) {
                if (in_model[static_cast<std::size_t>(c)] || !proj.admissible(static_cast<int>(c), centered_norm2(c))) {
                    continue;
                }
                const double g = proj.gain(static_cast<int>(c));
                if (g > best_gain) {
                    best_gain = g;
                    best = static_cast<int>(c);
                }
            }
            if (best >= 0) {
                const double rest = std::max(rss - best_gain, 0.0);
                const double F = rest > 0.0 ? best_gain / (rest / df_add) : std::numeric_limits<double>::infinity();
                if (partial_f_pvalue(F, df_add) < options.p_enter) {
                    sel.push_back(best);
                    in_model[static_cast<std::size_t>(best)] = true;
                    proj.add(best);
                    ++model.steps;
                    changed = true;
                }
            }
        }

        // Backward: drop the weakest feature while its p-value exceeds p_remove.
        if (!sel.empty() && model.steps < guard) {
            const Fit fit = ols(X, y, sel);
            const int df = static_cast<int>(n) - static_cast<int>(sel.size()) - 1;
            const double s2 = df > 0 ? fit.rss / df : 0.0;
            int worst = -1;
            double worst_p = options.p_remove;
            for (std::size_t i = 0; i < sel.size(); ++i) {
                const double b = fit.coef(static_cast<Eigen::Index>(i) + 1);
                const double v = s2 * fit.inv_diag(static_cast<Eigen::Index>(i) + 1);
                const double F = v > 0.0 ? b * b / v : std::numeric_limits<double>::infinity();
                const double pv = partial_f_pvalue(F, std::max(df, 1));
                if (pv > worst_p) {
                    worst_p = pv;
                    worst = static_cast<int>(i);
                }
            }
            if (worst >= 0) {
                in_model[static_cast<std::size_t>(sel[static_cast<std::size_t>(worst)])] = false;
                sel.erase(sel.begin() + worst);
                proj.reset(sel);
                ++model.steps;
                changed = true;
            }
        }

        if (!changed) {
            break;
        }
    }

    model.selected = sel;
    model.weights.resize(static_cast<Eigen::Index>(sel.size()));
    if (!sel.empty()) {
        const Fit fit = ols(X, y, sel);
        double shift = 0.0;
        for (std::size_t i = 0; i < sel.size(); ++i) {
            const double w = fit.coef(static_cast<Eigen::Index>(i) + 1);
            model.weights(static_cast<Eigen::Index>(i)) = w;
            shift += w * X.col(sel[i]).mean();
        }
        model.intercept = -shift;
    }
    return model;
}

Eigen::VectorXd swlda_scores(const SwldaModel& model, const Eigen::MatrixXd& X)
{
    for (int c : model.selected) {
        if (c < 0 || c >= X.cols()) {
            throw StructuralError("swlda_scores: selected feature outside the design");
        }
    }
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        out(i) = 1.0 / (1.0 + std::exp(-model.discriminant(X.row(i))));
    }
    return out;
}

SupportMask swlda_support(const SwldaModel& model, int K, int T)
{
    SupportMask mask = SupportMask::Zero(K, T);
    for (int c : model.selected) {
        if (c < 0 || c >= K * T) {
            throw StructuralError("swlda_support: feature index outside K*T");
        }
        mask(c / T, c % T) = 1;
    }
    return mask;
}

void write_swlda_csv(const SwldaModel& model, const std::string& path)
{
    CsvWriter csv({"feature_index", "weight"});
    csv.add(-1L).add(model.intercept).end_row();
    for (std::size_t i = 0; i < model.selected.size(); ++i) {
        csv.add(model.selected[i]).add(model.weights(static_cast<Eigen::Index>(i))).end_row();
    }
    csv.save(path);
}

}  // namespace rtgp
