#include "rtgp/eeg_data.hpp"

#include "rtgp/error.hpp"
#include "rtgp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace rtgp {

char SpellerLayout::symbol(int row, int col) const
{
    if (row < 1 || row > rows || col < 1 || col > cols) {
        throw InvalidInput("speller cell (" + std::to_string(row) + "," + std::to_string(col) +
                           ") outside layout");
    }
    return chars[static_cast<std::size_t>((row - 1) * cols + (col - 1))];
}

std::optional<std::pair<int, int>> SpellerLayout::locate(char c) const
{
    const auto pos = chars.find(c);
    if (pos == std::string::npos) {
        return std::nullopt;
    }
    const int idx = static_cast<int>(pos);
    return std::make_pair(idx / cols + 1, idx % cols + 1);
}

void SpellerLayout::validate() const
{
    if (rows <= 0 || cols <= 0 || static_cast<std::size_t>(rows * cols) != chars.size()) {
        throw StructuralError("speller layout: rows*cols must equal the symbol count");
    }
}

bool SessionData::labeled() const
{
    if (flashes.empty()) {
        return false;
    }
    for (const auto& f : flashes) {
        if (f.y == Label::unknown) {
            return false;
        }
    }
    return true;
}

void SessionData::validate() const
{
    layout.validate();
    if (K < 1 || T < 1 || R < 1 || S < 1 || J < 1) {
        throw StructuralError("session dimensions must be positive");
    }
    if (J != layout.stimulus_count()) {
        throw StructuralError("J must equal rows + cols of the speller layout");
    }
    if (static_cast<long>(flashes.size()) != static_cast<long>(R) * S * J) {
        throw StructuralError("flash count " + std::to_string(flashes.size()) + " != R*S*J = " +
                              std::to_string(R * S * J));
    }
    if (!channel_names.empty() && static_cast<int>(channel_names.size()) != K) {
        throw StructuralError("channel name table has wrong length");
    }
    std::vector<int> seen(static_cast<std::size_t>(R * S * J), 0);
    for (const auto& f : flashes) {
        if (f.r < 1 || f.r > R || f.s < 1 || f.s > S || f.j < 1 || f.j > J) {
            throw StructuralError("flash index (r,s,j) out of range");
        }
        if (f.signal.rows() != K || f.signal.cols() != T) {
            throw StructuralError("flash signal is not K x T");
        }
        seen[static_cast<std::size_t>(((f.r - 1) * S + (f.s - 1)) * J + (f.j - 1))] += 1;
    }
    for (int v : seen) {
        if (v != 1) {
            throw StructuralError("each (r,s) block must contain every stimulus exactly once");
        }
    }
    if (!labeled()) {
        return;
    }
    // Exactly one row target and one column target per sequence.
    std::vector<int> row_targets(static_cast<std::size_t>(R * S), 0);
    std::vector<int> col_targets(static_cast<std::size_t>(R * S), 0);
    for (const auto& f : flashes) {
        if (f.y != Label::target) {
            continue;
        }
        const auto block = static_cast<std::size_t>((f.r - 1) * S + (f.s - 1));
        (layout.is_row_stimulus(f.j) ? row_targets : col_targets)[block] += 1;
    }
    for (std::size_t b = 0; b < row_targets.size(); ++b) {
        if (row_targets[b] != 1 || col_targets[b] != 1) {
            throw StructuralError("labeled sequence must have exactly one row and one column target");
        }
    }
}

bool SessionData::refresh_interactions()
{
    bool degenerate = false;
    const Eigen::MatrixXd Zm = kernels::omp::interaction_matrix(flashes, &degenerate);
    for (std::size_t i = 0; i < flashes.size(); ++i) {
        flashes[i].interaction = Zm.row(static_cast<Eigen::Index>(i)).transpose();
    }
    return degenerate;
}

std::string SessionData::target_text() const
{
    std::string text(static_cast<std::size_t>(R), '?');
    std::vector<int> row(static_cast<std::size_t>(R), 0);
    std::vector<int> col(static_cast<std::size_t>(R), 0);
    for (const auto& f : flashes) {
        if (f.y != Label::target) {
            continue;
        }
        auto& slot = layout.is_row_stimulus(f.j) ? row : col;
        const int value = layout.is_row_stimulus(f.j) ? f.j : f.j - layout.rows;
        auto& cur = slot[static_cast<std::size_t>(f.r - 1)];
        cur = (cur == 0 || cur == value) ? value : -1;
    }
    for (int r = 0; r < R; ++r) {
        const int rr = row[static_cast<std::size_t>(r)];
        const int cc = col[static_cast<std::size_t>(r)];
        if (rr > 0 && cc > 0) {
            text[static_cast<std::size_t>(r)] = layout.symbol(rr, cc);
        }
    }
    return text;
}

double fisher_z(double c)
{
    if (!std::isfinite(c)) {
        throw InvalidInput("fisher_z: non-finite correlation");
    }
    c = std::clamp(c, -kCorrelationClamp, kCorrelationClamp);
    return std::atanh(c);
}

int pair_index(int k1, int k2, int K)
{
    if (k1 < 0 || k2 <= k1 || k2 >= K) {
        throw InvalidInput("pair_index: need 0 <= k1 < k2 < K");
    }
    // Pairs (0,1..K-1), (1,2..K-1), ...
    return k1 * K - k1 * (k1 + 1) / 2 + (k2 - k1 - 1);
}

std::pair<int, int> pair_channels(int index, int K)
{
    const int q = K * (K - 1) / 2;
    if (index < 0 || index >= q) {
        throw InvalidInput("pair_channels: index out of range");
    }
    int k1 = 0;
    int row_len = K - 1;
    while (index >= row_len) {
        index -= row_len;
        ++k1;
        --row_len;
    }
    return {k1, k1 + 1 + index};
}

InteractionResult compute_interactions(const Eigen::Ref<const Eigen::MatrixXd>& X)
{
    const auto K = X.rows();
    const auto T = X.cols();
    if (K < 2 || T < 3) {
        throw InvalidInput("compute_interactions: need K >= 2 and T >= 3");
    }
    InteractionResult out;
    out.z.setZero(K * (K - 1) / 2);

    Eigen::MatrixXd centered = X.colwise() - X.rowwise().mean();
    Eigen::VectorXd norms = centered.rowwise().norm();
    std::vector<bool> flat(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
        const double scale = X.row(k).cwiseAbs().maxCoeff();
        flat[static_cast<std::size_t>(k)] = norms(k) <= 1e-12 * std::max(scale, 1.0) * std::sqrt(double(T));
    }

    Eigen::Index idx = 0;
    for (Eigen::Index k1 = 0; k1 < K; ++k1) {
        for (Eigen::Index k2 = k1 + 1; k2 < K; ++k2, ++idx) {
            if (flat[static_cast<std::size_t>(k1)] || flat[static_cast<std::size_t>(k2)]) {
                out.degenerate = true;
                continue;
            }
            const double c = centered.row(k1).dot(centered.row(k2)) / (norms(k1) * norms(k2));
            out.z(idx) = fisher_z(c);
        }
    }
    return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& raw)
{
    Standardizer st;
    const auto n = raw.rows();
    st.mean = raw.colwise().mean().transpose();
    st.scale.resize(raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        const double var = n > 1 ? (raw.col(c).array() - st.mean(c)).square().sum() / double(n - 1) : 0.0;
        const double tol = 1e-24 * std::max(1.0, st.mean(c) * st.mean(c));
        st.scale(c) = var > tol ? std::sqrt(var) : 0.0;
    }
    return st;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& raw) const
{
    if (raw.cols() != mean.size()) {
        throw StructuralError("standardizer: column count mismatch");
    }
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        if (scale(c) > 0.0) {
            out.col(c) = (raw.col(c).array() - mean(c)) / scale(c);
        } else {
            out.col(c).setZero();
        }
    }
    return out;
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& standardized) const
{
    if (standardized.cols() != mean.size()) {
        throw StructuralError("standardizer: column count mismatch");
    }
    Eigen::MatrixXd out(standardized.rows(), standardized.cols());
    for (Eigen::Index c = 0; c < standardized.cols(); ++c) {
        out.col(c) = standardized.col(c).array() * scale(c) + mean(c);
    }
    return out;
}

bool Standardizer::degenerate() const
{
    return (scale.array() == 0.0).any();
}

Eigen::MatrixXd raw_signal_matrix(const SessionData& session)
{
    const int n = session.n();
    const int T = session.T;
    Eigen::MatrixXd X(n, session.p());
    for (int i = 0; i < n; ++i) {
        const auto& sig = session.flashes[static_cast<std::size_t>(i)].signal;
        if (sig.rows() != session.K || sig.cols() != T) {
            throw StructuralError("assemble_design: flash signal is not K x T");
        }
        for (int k = 0; k < session.K; ++k) {
            X.block(i, k * T, 1, T) = sig.row(k).cast<double>();
        }
    }
    return X;
}

namespace {

DesignMatrices assemble_with(const SessionData& session, const Standardizer* calibration)
{
    DesignMatrices d;
    const Eigen::MatrixXd raw = raw_signal_matrix(session);
    d.standardizer = calibration ? *calibration : Standardizer::fit(raw);
    d.X = d.standardizer.apply(raw);
    d.standardization_degenerate = d.standardizer.degenerate();

    const int q = session.q();
    d.Z.resize(session.n(), q);
    bool need_refresh = false;
    for (const auto& f : session.flashes) {
        need_refresh = need_refresh || f.interaction.size() != q;
    }
    if (need_refresh || q == 0) {
        d.Z = q > 0 ? kernels::omp::interaction_matrix(session.flashes, &d.interaction_degenerate)
                    : Eigen::MatrixXd(session.n(), 0);
    } else {
        for (int i = 0; i < session.n(); ++i) {
            d.Z.row(i) = session.flashes[static_cast<std::size_t>(i)].interaction.transpose();
        }
    }

    d.y.resize(session.n());
    for (int i = 0; i < session.n(); ++i) {
        d.y(i) = static_cast<int>(session.flashes[static_cast<std::size_t>(i)].y);
    }
    return d;
}

}  // namespace

DesignMatrices assemble_design(const SessionData& session)
{
    if (!session.labeled()) {
        throw InvalidInput("assemble_design: calibration session must be labeled");
    }
    return assemble_with(session, nullptr);
}

DesignMatrices assemble_design(const SessionData& session, const Standardizer& calibration)
{
    if (calibration.mean.size() != session.p()) {
        throw StructuralError("assemble_design: calibration statistics do not match K*T");
    }
    return assemble_with(session, &calibration);
}

void export_interactions_csv(const SessionData& session, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw FormatError(FormatError::Code::io, "cannot open " + path);
    }
    out << "r,s,j,y";
    for (int m = 0; m < session.q(); ++m) {
        const auto [a, b] = pair_channels(m, session.K);
        out << ",z_" << a + 1 << '_' << b + 1;
    }
    out << '\n' << std::setprecision(17);
    for (const auto& f : session.flashes) {
        Eigen::VectorXd z = f.interaction.size() == session.q()
                                ? f.interaction
                                : compute_interactions(f.signal.cast<double>()).z;
        out << f.r << ',' << f.s << ',' << f.j << ',' << static_cast<int>(f.y);
        for (Eigen::Index m = 0; m < z.size(); ++m) {
            out << ',' << z(m);
        }
        out << '\n';
    }
}

}  // namespace rtgp
