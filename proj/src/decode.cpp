#include "rtgp/decode.hpp"

#include "rtgp/csv.hpp"
#include "rtgp/error.hpp"
#include "rtgp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rtgp {

ScoreTable ScoreTable::from_flashes(const SessionData& session, const Eigen::VectorXd& scores)
{
    if (scores.size() != session.n()) {
        throw StructuralError("score table: one score per flash required");
    }
    ScoreTable table;
    table.R = session.R;
    table.S = session.S;
    table.J = session.J;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    table.blocks.assign(static_cast<std::size_t>(session.R), Eigen::MatrixXd::Constant(session.S, session.J, nan));
    for (int i = 0; i < session.n(); ++i) {
        const auto& f = session.flashes[static_cast<std::size_t>(i)];
        if (f.r < 1 || f.r > session.R || f.s < 1 || f.s > session.S || f.j < 1 || f.j > session.J) {
            throw StructuralError("score table: flash index out of range");
        }
        if (!std::isfinite(scores(i))) {
            throw InvalidInput("score table: non-finite score");
        }
        table.blocks[static_cast<std::size_t>(f.r - 1)](f.s - 1, f.j - 1) = scores(i);
    }
    return table;
}

Eigen::VectorXd score_flashes(const PosteriorDraws& draws, const DesignMatrices& design)
{
    if (design.X.cols() != draws.p()) {
        throw StructuralError("score_flashes: session K*T does not match the draws");
    }
    const double xs = 1.0 / double(draws.p());
    if (draws.q > 0) {
        if (design.Z.cols() != draws.q) {
            throw StructuralError("score_flashes: interaction width does not match the draws");
        }
        return kernels::omp::mean_link_inverse(design.X, draws.beta, xs, design.Z, draws.zeta, 1.0 / draws.q,
                                               draws.link);
    }
    const Eigen::MatrixXd noZ(design.X.rows(), 0);
    const Eigen::MatrixXf noDraws(0, draws.D());
    return kernels::omp::mean_link_inverse(design.X, draws.beta, xs, noZ, noDraws, 0.0, draws.link);
}

Eigen::VectorXd score_flashes(const PosteriorDraws& draws, const SessionData& session)
{
    if (session.K != draws.K || session.T != draws.T) {
        throw StructuralError("score_flashes: session is " + std::to_string(session.K) + "x" +
                              std::to_string(session.T) + ", draws are " + std::to_string(draws.K) + "x" +
                              std::to_string(draws.T));
    }
    if (!draws.standardizer) {
        throw StructuralError("score_flashes: draws carry no calibration standardization");
    }
    return score_flashes(draws, assemble_design(session, *draws.standardizer));
}

DecodedCell decode_character(const Eigen::MatrixXd& scores, int s_budget, const SpellerLayout& layout)
{
    if (s_budget < 1 || s_budget > scores.rows()) {
        throw InvalidInput("decode_character: sequence budget out of range");
    }
    if (scores.cols() != layout.stimulus_count()) {
        throw StructuralError("decode_character: score block width differs from the stimulus count");
    }
    const Eigen::MatrixXd window = scores.topRows(s_budget);
    if (!window.allFinite()) {
        throw StructuralError("decode_character: missing flash inside the budget window");
    }
    const Eigen::RowVectorXd total = window.colwise().sum();
    DecodedCell cell;
    int best_row = 0;
    for (int j = 1; j < layout.rows; ++j) {
        if (total(j) > total(best_row)) {
            best_row = j;
        }
    }
    int best_col = layout.rows;
    for (int j = layout.rows + 1; j < layout.stimulus_count(); ++j) {
        if (total(j) > total(best_col)) {
            best_col = j;
        }
    }
    cell.row = best_row + 1;
    cell.col = best_col - layout.rows + 1;
    cell.symbol = layout.symbol(cell.row, cell.col);
    return cell;
}

DecodeResult decode_session(const ScoreTable& table, const std::string& truth, const SpellerLayout& layout)
{
    if (static_cast<int>(truth.size()) != table.R) {
        throw StructuralError("decode: truth text length differs from the character count");
    }
    DecodeResult res;
    res.predicted.resize(static_cast<std::size_t>(table.R));
    res.correct.resize(static_cast<std::size_t>(table.R));
    res.accuracy.assign(static_cast<std::size_t>(table.S), 0.0);
    for (int r = 1; r <= table.R; ++r) {
        const auto idx = static_cast<std::size_t>(r - 1);
        for (int s = 1; s <= table.S; ++s) {
            const DecodedCell cell = decode_character(table.character(r), s, layout);
            res.predicted[idx].push_back(cell);
            const bool ok = cell.symbol == truth[idx];
            res.correct[idx].push_back(ok);
            res.accuracy[static_cast<std::size_t>(s - 1)] += ok ? 1.0 : 0.0;
        }
    }
    for (auto& a : res.accuracy) {
        a /= double(table.R);
    }
    return res;
}

std::vector<double> accuracy_curve(const ScoreTable& table, const std::string& truth, const SpellerLayout& layout)
{
    return decode_session(table, truth, layout).accuracy;
}

double bci_utility(double accuracy, int s_budget, const FlashTiming& timing, int J, int symbols)
{
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
        throw InvalidInput("bci_utility: accuracy must lie in [0, 1]");
    }
    const double c = double(s_budget) * double(J) * (timing.display_ms + timing.pause_ms) / 1000.0;
    if (!(c > 0.0)) {
        throw InvalidInput("bci_utility: selection time must be positive");
    }
    return std::max(0.0, 2.0 * accuracy - 1.0) * std::log2(double(symbols - 1)) / c;
}

std::vector<double> utility_curve(const std::vector<double>& accuracy, const FlashTiming& timing, int J,
                                  int symbols)
{
    std::vector<double> out;
    out.reserve(accuracy.size());
    for (std::size_t s = 0; s < accuracy.size(); ++s) {
        out.push_back(bci_utility(accuracy[s], static_cast<int>(s + 1), timing, J, symbols));
    }
    return out;
}

namespace {

void check_masks(const SupportMask& est, const SupportMask& truth, int k)
{
    if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
        throw StructuralError("support masks differ in shape");
    }
    if (k < 0 || k >= truth.rows()) {
        throw InvalidInput("support metric: channel index out of range");
    }
}

}  // namespace

std::optional<double> eswr(const SupportMask& est, const SupportMask& truth, int k)
{
    check_masks(est, truth, k);
    int hit = 0;
    int total = 0;
    for (Eigen::Index t = 0; t < truth.cols(); ++t) {
        if (truth(k, t)) {
            ++total;
            hit += est(k, t) ? 1 : 0;
        }
    }
    if (total == 0) {
        return std::nullopt;
    }
    return double(hit) / double(total);
}

std::optional<double> eewr(const SupportMask& est, const SupportMask& truth, int k)
{
    check_masks(est, truth, k);
    int hit = 0;
    int total = 0;
    for (Eigen::Index t = 0; t < truth.cols(); ++t) {
        if (!truth(k, t)) {
            ++total;
            hit += est(k, t) ? 0 : 1;
        }
    }
    if (total == 0) {
        return std::nullopt;
    }
    return double(hit) / double(total);
}

SupportRule parse_support_rule(const std::string& name)
{
    if (name == "median-model") {
        return SupportRule::median_model;
    }
    if (name == "mean-beta") {
        return SupportRule::mean_beta;
    }
    throw InvalidInput("unknown support rule '" + name + "' (expected median-model or mean-beta)");
}

std::string to_string(SupportRule rule)
{
    return rule == SupportRule::median_model ? "median-model" : "mean-beta";
}

SupportMask support_from_draws(const PosteriorDraws& draws, SupportRule rule)
{
    if (draws.D() < 1) {
        throw InvalidInput("support_from_draws: no draws");
    }
    const Eigen::MatrixXd stat =
        rule == SupportRule::median_model ? posterior_inclusion(draws).beta : draws.beta_mean();
    SupportMask mask(draws.K, draws.T);
    for (int k = 0; k < draws.K; ++k) {
        for (int t = 0; t < draws.T; ++t) {
            const double v = stat(k, t);
            mask(k, t) = rule == SupportRule::median_model ? (v > 0.5) : (std::abs(v) > 1e-8);
        }
    }
    return mask;
}

Eigen::VectorXd pair_percentiles(const std::vector<Eigen::VectorXd>& per_subject)
{
    if (per_subject.empty()) {
        throw InvalidInput("pair_percentiles: no subjects");
    }
    const auto q = per_subject.front().size();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(q);
    for (const auto& v : per_subject) {
        if (v.size() != q) {
            throw StructuralError("pair_percentiles: subjects differ in pair count");
        }
        std::vector<Eigen::Index> order(static_cast<std::size_t>(q));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && v(order[j + 1]) == v(order[i])) {
                ++j;
            }
            // 1-based ranks i+1..j+1 share their average.
            const double rank = 0.5 * double(i + 1 + j + 1);
            for (std::size_t m = i; m <= j; ++m) {
                acc(order[m]) += 100.0 * rank / double(q);
            }
            i = j + 1;
        }
    }
    return acc / double(per_subject.size());
}

void write_accuracy_csv(const std::vector<double>& accuracy, const std::string& path)
{
    CsvWriter csv({"budget", "accuracy"});
    for (std::size_t s = 0; s < accuracy.size(); ++s) {
        csv.add(static_cast<long>(s + 1)).add(accuracy[s]).end_row();
    }
    csv.save(path);
}

void write_utility_csv(const std::vector<double>& utility, const std::string& path)
{
    CsvWriter csv({"budget", "bits_per_sec"});
    for (std::size_t s = 0; s < utility.size(); ++s) {
        csv.add(static_cast<long>(s + 1)).add(utility[s]).end_row();
    }
    csv.save(path);
}

void write_selection_csv(const Eigen::MatrixXd& inclusion, const std::string& path)
{
    CsvWriter csv({"channel", "time_index", "prob"});
    for (Eigen::Index k = 0; k < inclusion.rows(); ++k) {
        for (Eigen::Index t = 0; t < inclusion.cols(); ++t) {
            csv.add(static_cast<long>(k + 1)).add(static_cast<long>(t + 1)).add(inclusion(k, t)).end_row();
        }
    }
    csv.save(path);
}

void write_pair_csv(const Eigen::VectorXd& percentiles, int K, const std::string& path, double min_percentile)
{
    CsvWriter csv({"k1", "k2", "avg_percentile"});
    for (Eigen::Index m = 0; m < percentiles.size(); ++m) {
        if (percentiles(m) < min_percentile) {
            continue;
        }
        const auto [a, b] = pair_channels(static_cast<int>(m), K);
        csv.add(a + 1).add(b + 1).add(percentiles(m)).end_row();
    }
    csv.save(path);
}

}  // namespace rtgp
