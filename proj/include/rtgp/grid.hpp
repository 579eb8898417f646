#pragma once

#include "rtgp/pipeline.hpp"
#include "rtgp/simulate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rtgp {

struct GridConfig {
    std::vector<double> alphas{2.5};
    std::vector<double> tau2s{9.0};
    std::vector<double> sigma2s{20.0};
    int replicates = 1;
    std::vector<Method> methods{Method::sirtgp_probit};
    int workers = 1;
    SimConfig sim;  ///< alpha, tau2, sigma2 and seed are overridden per cell
    MethodSettings settings;
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t cell_count() const { return alphas.size() * tau2s.size() * sigma2s.size(); }
};

struct GridRow {
    double alpha = 0.0;
    double tau2 = 0.0;
    double sigma2 = 0.0;
    int replicate = 0;
    Method method = Method::sirtgp_probit;
    double accuracy = 0.0;  ///< at the final budget; NaN on failure
    std::vector<std::optional<double>> eswr;
    std::vector<std::optional<double>> eewr;
    std::string error;
};

struct GridSummaryRow {
    double alpha = 0.0;
    double tau2 = 0.0;
    double sigma2 = 0.0;
    Method method = Method::sirtgp_probit;
    int completed = 0;
    double accuracy_mean = 0.0;
    double accuracy_sd = 0.0;
    std::vector<std::optional<double>> eswr_mean;
    std::vector<std::optional<double>> eewr_mean;
};

/// Rows ordered by (alpha, tau2, sigma2, replicate, method) regardless of scheduling.
std::vector<GridRow> run_grid(const GridConfig& config);

std::vector<GridSummaryRow> summarize_grid(const std::vector<GridRow>& rows);

/// Seed of one (config, replicate) cell; independent of worker scheduling.
std::uint64_t cell_seed(std::uint64_t seed, double alpha, double tau2, double sigma2, int replicate);

/// Channels with at least one truly active point under the grid's templates.
std::vector<int> eswr_channels(const SimConfig& sim);

void write_grid_csv(const std::vector<GridRow>& rows, const SimConfig& sim, const std::string& path);
void write_grid_summary_csv(const std::vector<GridSummaryRow>& rows, const SimConfig& sim, const std::string& path);

}  // namespace rtgp
