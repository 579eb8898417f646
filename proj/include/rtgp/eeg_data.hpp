#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rtgp {

/// 6x6 row/column speller. Stimuli 1..rows flash rows, rows+1..rows+cols flash columns.
struct SpellerLayout {
    int rows = 6;
    int cols = 6;
    std::string chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZ123456789_";

    static SpellerLayout standard() { return {}; }

    int stimulus_count() const { return rows + cols; }
    bool is_row_stimulus(int j) const { return j >= 1 && j <= rows; }
    bool is_col_stimulus(int j) const { return j > rows && j <= rows + cols; }

    /// Symbol at 1-based (row, col).
    char symbol(int row, int col) const;
    /// 1-based (row, col) of a symbol; nullopt when absent.
    std::optional<std::pair<int, int>> locate(char symbol) const;
    void validate() const;
};

/// Label of one flash. `unknown` is allowed in test-phase data only.
enum class Label : std::int8_t { unknown = -1, nontarget = 0, target = 1 };

struct FlashRecord {
    int r = 1;  ///< character index, 1..R
    int s = 1;  ///< sequence, 1..S
    int j = 1;  ///< stimulus, 1..J
    Label y = Label::unknown;
    Eigen::MatrixXf signal;       ///< K x T, microvolts
    Eigen::VectorXd interaction;  ///< length q = K(K-1)/2, Fisher-z
};

struct FlashTiming {
    double display_ms = 125.0;
    double pause_ms = 62.5;
};

struct SessionData {
    int K = 0;
    int T = 0;
    int R = 0;
    int S = 0;
    int J = 12;
    double sample_rate = 512.0;
    FlashTiming timing;
    SpellerLayout layout;
    std::vector<std::string> channel_names;
    std::vector<FlashRecord> flashes;

    int n() const { return static_cast<int>(flashes.size()); }
    int p() const { return K * T; }
    int q() const { return K * (K - 1) / 2; }
    bool labeled() const;

    /// Checks n = R*S*J, per-(r,s) stimulus coverage, signal shapes and,
    /// when labeled, the two-targets-per-sequence rule. Throws StructuralError.
    void validate() const;

    /// Fills every flash's interaction vector from its signal. Returns true
    /// when any flash had a zero-variance channel.
    bool refresh_interactions();

    /// Target symbol per character derived from labels ('?' if ambiguous).
    std::string target_text() const;
};

/// Largest |correlation| fed to fisher_z.
inline constexpr double kCorrelationClamp = 1.0 - 1e-6;

double fisher_z(double c);

/// 0-based index of the channel pair (k1 < k2, both 0-based) in lexicographic order.
int pair_index(int k1, int k2, int K);
/// Inverse of pair_index.
std::pair<int, int> pair_channels(int index, int K);

struct InteractionResult {
    Eigen::VectorXd z;
    bool degenerate = false;
};

/// Fisher-z of Pearson correlations between all channel pairs of a K x T segment.
/// A zero-variance channel yields 0 for its pairs and sets `degenerate`.
InteractionResult compute_interactions(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Per-column z-scoring fitted on calibration data.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  ///< 0 marks a zero-variance column (zeroed on apply)

    static Standardizer fit(const Eigen::MatrixXd& raw);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& standardized) const;
    bool degenerate() const;
};

/// Model inputs. Rows of X are flashes, columns channel-major (k*T + t).
/// The 1/p and 1/q factors are not applied here.
struct DesignMatrices {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Z;
    Eigen::VectorXi y;  ///< 0/1, or -1 where unknown
    Standardizer standardizer;
    bool standardization_degenerate = false;
    bool interaction_degenerate = false;
};

/// Raw channel-major n x p signal matrix.
Eigen::MatrixXd raw_signal_matrix(const SessionData& session);

/// Calibration-phase assembly: fits the standardizer on this session. Requires labels.
DesignMatrices assemble_design(const SessionData& session);
/// Test-phase assembly reusing calibration statistics; labels optional.
DesignMatrices assemble_design(const SessionData& session, const Standardizer& calibration);

/// Writes the per-flash interaction vectors as CSV (r,s,j,y,z_1_2,...).
void export_interactions_csv(const SessionData& session, const std::string& path);

}  // namespace rtgp
