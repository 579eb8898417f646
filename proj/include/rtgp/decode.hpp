#pragma once

#include "rtgp/eeg_data.hpp"
#include "rtgp/sampler.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rtgp {

/// Per-flash classification scores arranged as one S x J block per character.
/// Missing flashes are NaN.
struct ScoreTable {
    int R = 0;
    int S = 0;
    int J = 0;
    std::vector<Eigen::MatrixXd> blocks;

    static ScoreTable from_flashes(const SessionData& session, const Eigen::VectorXd& scores);
    const Eigen::MatrixXd& character(int r) const { return blocks.at(static_cast<std::size_t>(r - 1)); }
};

/// Posterior predictive target probability per flash, in session flash order.
Eigen::VectorXd score_flashes(const PosteriorDraws& draws, const SessionData& session);
/// Same, on an already assembled design (X standardized, Z raw Fisher-z).
Eigen::VectorXd score_flashes(const PosteriorDraws& draws, const DesignMatrices& design);

struct DecodedCell {
    int row = 0;  ///< 1-based
    int col = 0;  ///< 1-based
    char symbol = '?';
};

/// Cumulative scores over sequences 1..s_budget; argmax row and column, ties to the lowest j.
DecodedCell decode_character(const Eigen::MatrixXd& scores, int s_budget, const SpellerLayout& layout);

struct DecodeResult {
    /// predicted[r-1][s-1]
    std::vector<std::vector<DecodedCell>> predicted;
    std::vector<std::vector<bool>> correct;
    std::vector<double> accuracy;  ///< length S
};

DecodeResult decode_session(const ScoreTable& table, const std::string& truth, const SpellerLayout& layout);
std::vector<double> accuracy_curve(const ScoreTable& table, const std::string& truth, const SpellerLayout& layout);

/// Bits per second: max(0, 2P-1) log2(N-1) / (s_budget * J * (display+pause)/1000).
double bci_utility(double accuracy, int s_budget, const FlashTiming& timing, int J = 12, int symbols = 36);
std::vector<double> utility_curve(const std::vector<double>& accuracy, const FlashTiming& timing, int J = 12,
                                  int symbols = 36);

using SupportMask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Share of truly active points on channel k that are selected; nullopt without active points.
std::optional<double> eswr(const SupportMask& est, const SupportMask& truth, int k);
/// Share of truly inactive points on channel k left unselected; nullopt without inactive points.
std::optional<double> eewr(const SupportMask& est, const SupportMask& truth, int k);

enum class SupportRule { median_model, mean_beta };
SupportRule parse_support_rule(const std::string& name);
std::string to_string(SupportRule rule);

SupportMask support_from_draws(const PosteriorDraws& draws, SupportRule rule = SupportRule::median_model);

/// Within-subject percentile ranks (average ranks for ties, scaled to 100) averaged over subjects.
Eigen::VectorXd pair_percentiles(const std::vector<Eigen::VectorXd>& per_subject);

void write_accuracy_csv(const std::vector<double>& accuracy, const std::string& path);
void write_utility_csv(const std::vector<double>& utility, const std::string& path);
void write_selection_csv(const Eigen::MatrixXd& inclusion, const std::string& path);
/// Pair table; only pairs with percentile >= min_percentile are written.
void write_pair_csv(const Eigen::VectorXd& percentiles, int K, const std::string& path, double min_percentile = 0.0);

}  // namespace rtgp
