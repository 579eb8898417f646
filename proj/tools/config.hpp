#pragma once

#include "rtgp/grid.hpp"
#include "rtgp/pipeline.hpp"
#include "rtgp/simulate.hpp"

#include <boost/property_tree/ptree.hpp>

#include <map>
#include <string>
#include <vector>

namespace rtgp::cli {

/// INI run configuration. Unknown sections and keys are rejected on load.
class RunConfig {
public:
    static RunConfig load(const std::string& path);
    static RunConfig from_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;

    /// Builders; `required` lists keys that must be present in the section.
    SimConfig sim(const std::vector<std::string>& required = {}) const;
    KernelConfig kernel() const;
    RtgpConfig rtgp() const;
    SwldaOptions swlda() const;
    GridConfig grid(const std::vector<std::string>& required = {}) const;

    struct EvaluateSettings {
        SupportRule support_rule = SupportRule::median_model;
        double pair_display_percentile = 75.0;
    };
    EvaluateSettings evaluate() const;

private:
    boost::property_tree::ptree tree_;
};

/// Section name -> ordered (key, value) pairs.
using Echo = std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>;

void echo_sim(Echo& echo, const SimConfig& sim);
void echo_kernel(Echo& echo, const KernelConfig& kernel);
void echo_rtgp(Echo& echo, const RtgpConfig& rtgp);
void echo_swlda(Echo& echo, const SwldaOptions& swlda);
void echo_grid(Echo& echo, const GridConfig& grid);
void echo_evaluate(Echo& echo, const RunConfig::EvaluateSettings& evaluate);

std::string render_ini(const Echo& echo);

std::string join_doubles(const std::vector<double>& values);

}  // namespace rtgp::cli
