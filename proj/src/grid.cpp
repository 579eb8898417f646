#include "rtgp/grid.hpp"

#include "rtgp/csv.hpp"
#include "rtgp/error.hpp"
#include "rtgp/random.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace rtgp {

void GridConfig::validate() const
{
    if (alphas.empty() || tau2s.empty() || sigma2s.empty()) {
        throw ConfigError("grid: alpha, tau2 and sigma2 lists must be non-empty");
    }
    if (replicates < 1) {
        throw ConfigError("grid: replicates must be >= 1");
    }
    if (methods.empty()) {
        throw ConfigError("grid: no methods listed");
    }
    if (workers < 1) {
        throw ConfigError("grid: workers must be >= 1");
    }
    settings.rtgp.validate();
}

std::uint64_t cell_seed(std::uint64_t seed, double alpha, double tau2, double sigma2, int replicate)
{
    return mix_seed({seed, std::bit_cast<std::uint64_t>(alpha), std::bit_cast<std::uint64_t>(tau2),
                     std::bit_cast<std::uint64_t>(sigma2), static_cast<std::uint64_t>(replicate)});
}

std::vector<int> eswr_channels(const SimConfig& sim)
{
    const SupportMask truth = truth_support(sim);
    std::vector<int> out;
    for (int k = 0; k < sim.K; ++k) {
        if (truth.row(k).cast<int>().sum() > 0) {
            out.push_back(k);
        }
    }
    return out;
}

std::vector<GridRow> run_grid(const GridConfig& config)
{
    config.validate();
    struct Cell {
        double alpha, tau2, sigma2;
        int replicate;
    };
    std::vector<Cell> cells;
    for (double a : config.alphas) {
        for (double t : config.tau2s) {
            for (double s : config.sigma2s) {
                for (int r = 1; r <= config.replicates; ++r) {
                    cells.push_back({a, t, s, r});
                }
            }
        }
    }
    const auto nm = config.methods.size();
    std::vector<GridRow> rows(cells.size() * nm);

    const long count = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.workers)
    for (long c = 0; c < count; ++c) {
        const Cell& cell = cells[static_cast<std::size_t>(c)];
        const std::uint64_t seed = cell_seed(config.seed, cell.alpha, cell.tau2, cell.sigma2, cell.replicate);
        SimConfig sim = config.sim;
        sim.alpha = cell.alpha;
        sim.tau2 = cell.tau2;
        sim.sigma2 = cell.sigma2;
        sim.seed = seed;

        std::string setup_error;
        SessionData calibration;
        SessionData test;
        SupportMask truth;
        try {
            calibration = generate_session(sim, 0);
            test = generate_session(sim, 1);
            truth = truth_support(sim);
        } catch (const std::exception& e) {
            setup_error = e.what();
        }

        for (std::size_t m = 0; m < nm; ++m) {
            GridRow& row = rows[static_cast<std::size_t>(c) * nm + m];
            row.alpha = cell.alpha;
            row.tau2 = cell.tau2;
            row.sigma2 = cell.sigma2;
            row.replicate = cell.replicate;
            row.method = config.methods[m];
            row.accuracy = std::numeric_limits<double>::quiet_NaN();
            row.eswr.assign(static_cast<std::size_t>(sim.K), std::nullopt);
            row.eewr.assign(static_cast<std::size_t>(sim.K), std::nullopt);
            if (!setup_error.empty()) {
                row.error = setup_error;
                continue;
            }
            try {
                const MethodOutcome out =
                    evaluate_method(row.method, calibration, test, truth, config.settings,
                                    mix_seed({seed, static_cast<std::uint64_t>(row.method)}));
                row.accuracy = out.accuracy.back();
                row.eswr = out.eswr;
                row.eewr = out.eewr;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    }
    return rows;
}

std::vector<GridSummaryRow> summarize_grid(const std::vector<GridRow>& rows)
{
    using Key = std::tuple<double, double, double, int>;
    std::map<Key, std::vector<const GridRow*>> groups;
    std::vector<Key> order;
    for (const auto& r : rows) {
        const Key key{r.alpha, r.tau2, r.sigma2, static_cast<int>(r.method)};
        if (groups.find(key) == groups.end()) {
            order.push_back(key);
        }
        groups[key].push_back(&r);
    }
    std::vector<GridSummaryRow> out;
    for (const auto& key : order) {
        const auto& members = groups[key];
        GridSummaryRow s;
        s.alpha = std::get<0>(key);
        s.tau2 = std::get<1>(key);
        s.sigma2 = std::get<2>(key);
        s.method = static_cast<Method>(std::get<3>(key));
        const std::size_t K = members.front()->eswr.size();
        std::vector<double> sum_eswr(K, 0.0), sum_eewr(K, 0.0);
        std::vector<int> n_eswr(K, 0), n_eewr(K, 0);
        double sum = 0.0;
        double sum2 = 0.0;
        for (const GridRow* r : members) {
            if (!r->error.empty()) {
                continue;
            }
            ++s.completed;
            sum += r->accuracy;
            sum2 += r->accuracy * r->accuracy;
            for (std::size_t k = 0; k < K; ++k) {
                if (r->eswr[k]) {
                    sum_eswr[k] += *r->eswr[k];
                    ++n_eswr[k];
                }
                if (r->eewr[k]) {
                    sum_eewr[k] += *r->eewr[k];
                    ++n_eewr[k];
                }
            }
        }
        if (s.completed > 0) {
            s.accuracy_mean = sum / s.completed;
            s.accuracy_sd = s.completed > 1
                                ? std::sqrt(std::max(0.0, (sum2 - s.completed * s.accuracy_mean * s.accuracy_mean) /
                                                              (s.completed - 1)))
                                : 0.0;
        } else {
            s.accuracy_mean = std::numeric_limits<double>::quiet_NaN();
            s.accuracy_sd = std::numeric_limits<double>::quiet_NaN();
        }
        for (std::size_t k = 0; k < K; ++k) {
            s.eswr_mean.push_back(n_eswr[k] ? std::optional<double>(sum_eswr[k] / n_eswr[k]) : std::nullopt);
            s.eewr_mean.push_back(n_eewr[k] ? std::optional<double>(sum_eewr[k] / n_eewr[k]) : std::nullopt);
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::string opt(const std::optional<double>& v)
{
    return v ? format_double(*v) : std::string("NA");
}

std::string sanitize(std::string s)
{
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') {
            c = ';';
        }
    }
    return s;
}

}  // namespace

void write_grid_csv(const std::vector<GridRow>& rows, const SimConfig& sim, const std::string& path)
{
    const std::vector<int> active = eswr_channels(sim);
    std::vector<std::string> header{"alpha", "tau2", "sigma2", "replicate", "method", "accuracy"};
    for (int k : active) {
        header.push_back("eswr_ch" + std::to_string(k + 1));
    }
    for (int k = 0; k < sim.K; ++k) {
        header.push_back("eewr_ch" + std::to_string(k + 1));
    }
    header.push_back("error");
    CsvWriter csv(header);
    for (const auto& r : rows) {
        csv.add(r.alpha).add(r.tau2).add(r.sigma2).add(r.replicate).add(to_string(r.method)).add(r.accuracy);
        for (int k : active) {
            csv.add(opt(r.eswr[static_cast<std::size_t>(k)]));
        }
        for (int k = 0; k < sim.K; ++k) {
            csv.add(opt(r.eewr[static_cast<std::size_t>(k)]));
        }
        csv.add(sanitize(r.error));
        csv.end_row();
    }
    csv.save(path);
}

void write_grid_summary_csv(const std::vector<GridSummaryRow>& rows, const SimConfig& sim, const std::string& path)
{
    const std::vector<int> active = eswr_channels(sim);
    std::vector<std::string> header{"alpha", "tau2", "sigma2", "method", "completed", "accuracy_mean", "accuracy_sd"};
    for (int k : active) {
        header.push_back("eswr_ch" + std::to_string(k + 1));
    }
    for (int k = 0; k < sim.K; ++k) {
        header.push_back("eewr_ch" + std::to_string(k + 1));
    }
    CsvWriter csv(header);
    for (const auto& r : rows) {
        csv.add(r.alpha).add(r.tau2).add(r.sigma2).add(to_string(r.method)).add(r.completed);
        csv.add(r.accuracy_mean).add(r.accuracy_sd);
        for (int k : active) {
            csv.add(opt(r.eswr_mean[static_cast<std::size_t>(k)]));
        }
        for (int k = 0; k < sim.K; ++k) {
            csv.add(opt(r.eewr_mean[static_cast<std::size_t>(k)]));
        }
        csv.end_row();
    }
    csv.save(path);
}

}  // namespace rtgp
