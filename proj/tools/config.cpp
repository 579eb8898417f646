#include "config.hpp"

#include "rtgp/csv.hpp"
#include "rtgp/error.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <set>
#include <sstream>

namespace rtgp::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"sim",
         {"alpha", "tau2", "sigma2", "K", "T", "R", "S", "text", "amplitude", "width", "centers",
          "support_halfwidth", "sample_rate", "display_ms", "pause_ms", "sigma_target", "sigma_nontarget",
          "seed"}},
        {"kernel",
         {"alpha", "variance_threshold", "rho", "rho_grid_min", "rho_grid_max", "rho_grid_count", "noise_grid_min",
          "noise_grid_max", "noise_grid_count"}},
        {"rtgp",
         {"link", "use_interactions", "iterations", "burn_in", "thin", "sigma_e2", "a_eta", "b_eta", "warm_iters",
          "xi2_start", "xi2_end", "omega_points", "omega_lower_quantile", "omega_upper_quantile",
          "adaptive_thresholds", "seed", "verbose"}},
        {"swlda", {"p_enter", "p_remove", "max_features"}},
        {"grid", {"alphas", "tau2s", "sigma2s", "replicates", "methods", "workers", "seed"}},
        {"evaluate", {"support_rule", "pair_display_percentile"}},
    };
    return keys;
}

void check_keys(const pt::ptree& tree)
{
    const auto& known = known_keys();
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) {
            if (body.empty()) {
                throw ConfigError("key '" + section + "' outside any section");
            }
            throw ConfigError("unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            (void)value;
            if (!it->second.count(key)) {
                throw ConfigError("unknown key '" + key + "' in [" + section + "]");
            }
        }
    }
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw)
{
    const std::string s = trim(raw);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw ConfigError("key '" + key + "': '" + raw + "' is not a number");
    }
    return v;
}

long long to_integer(const std::string& key, const std::string& raw)
{
    const std::string s = trim(raw);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw ConfigError("key '" + key + "': '" + raw + "' is not an integer");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& raw)
{
    std::vector<std::string> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

class Section {
public:
    Section(const pt::ptree& tree, std::string name, const std::vector<std::string>& required)
        : name_(std::move(name))
    {
        if (const auto child = tree.get_child_optional(name_)) {
            body_ = &*child;
        }
        for (const auto& key : required) {
            if (!raw(key)) {
                throw ConfigError("missing required key '" + key + "' in [" + name_ + "]");
            }
        }
    }

    std::optional<std::string> raw(const std::string& key) const
    {
        if (!body_) {
            return std::nullopt;
        }
        const auto v = body_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) {
            return std::nullopt;
        }
        return trim(*v);
    }

    std::string qualified(const std::string& key) const { return name_ + "." + key; }

    void read(const std::string& key, double& out) const
    {
        if (auto v = raw(key)) {
            out = to_double(qualified(key), *v);
        }
    }
    void read(const std::string& key, int& out) const
    {
        if (auto v = raw(key)) {
            const long long x = to_integer(qualified(key), *v);
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
                throw ConfigError("key '" + qualified(key) + "' out of range");
            }
            out = static_cast<int>(x);
        }
    }
    void read(const std::string& key, std::uint64_t& out) const
    {
        if (auto v = raw(key)) {
            const long long x = to_integer(qualified(key), *v);
            if (x < 0) {
                throw ConfigError("key '" + qualified(key) + "' must be non-negative");
            }
            out = static_cast<std::uint64_t>(x);
        }
    }
    void read(const std::string& key, bool& out) const
    {
        if (auto v = raw(key)) {
            if (*v == "true" || *v == "1") {
                out = true;
            } else if (*v == "false" || *v == "0") {
                out = false;
            } else {
                throw ConfigError("key '" + qualified(key) + "': expected true or false");
            }
        }
    }
    void read(const std::string& key, std::string& out) const
    {
        if (auto v = raw(key)) {
            out = *v;
        }
    }
    void read(const std::string& key, std::vector<double>& out) const
    {
        if (auto v = raw(key)) {
            out.clear();
            for (const auto& item : split_list(*v)) {
                out.push_back(to_double(qualified(key), item));
            }
        }
    }

private:
    std::string name_;
    const pt::ptree* body_ = nullptr;
};

Eigen::MatrixXd read_matrix(const Section& s, const std::string& key, const Eigen::MatrixXd& fallback, int K)
{
    std::vector<double> v;
    s.read(key, v);
    if (v.empty()) {
        return fallback;
    }
    if (static_cast<int>(v.size()) != K * K) {
        throw ConfigError("key '" + s.qualified(key) + "' needs K*K row-major values");
    }
    Eigen::MatrixXd m(K, K);
    for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) {
            m(a, b) = v[static_cast<std::size_t>(a * K + b)];
        }
    }
    return m;
}

std::string matrix_string(const Eigen::MatrixXd& m)
{
    std::vector<double> v;
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
        for (Eigen::Index b = 0; b < m.cols(); ++b) {
            v.push_back(m(a, b));
        }
    }
    return join_doubles(v);
}

std::string flag(bool b)
{
    return b ? "true" : "false";
}

std::string integer(long long v)
{
    return std::to_string(v);
}

}  // namespace

std::string join_doubles(const std::vector<double>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? "," : "") + format_double(values[i]);
    }
    return out;
}

RunConfig RunConfig::load(const std::string& path)
{
    RunConfig cfg;
    try {
        pt::ini_parser::read_ini(path, cfg.tree_);
    } catch (const pt::ini_parser_error& e) {
        if (e.line() == 0) {
            throw FormatError(FormatError::Code::io, "cannot read config " + path);
        }
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    check_keys(cfg.tree_);
    return cfg;
}

RunConfig RunConfig::from_string(const std::string& text)
{
    RunConfig cfg;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, cfg.tree_);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    check_keys(cfg.tree_);
    return cfg;
}

bool RunConfig::has(const std::string& section, const std::string& key) const
{
    return Section(tree_, section, {}).raw(key).has_value();
}

SimConfig RunConfig::sim(const std::vector<std::string>& required) const
{
    const Section s(tree_, "sim", required);
    SimConfig c;
    s.read("alpha", c.alpha);
    s.read("tau2", c.tau2);
    s.read("sigma2", c.sigma2);
    s.read("K", c.K);
    s.read("T", c.T);
    s.read("R", c.R);
    s.read("S", c.S);
    s.read("text", c.text);
    s.read("amplitude", c.amplitude);
    s.read("width", c.width);
    s.read("centers", c.centers);
    s.read("support_halfwidth", c.support_halfwidth);
    s.read("sample_rate", c.sample_rate);
    s.read("display_ms", c.timing.display_ms);
    s.read("pause_ms", c.timing.pause_ms);
    s.read("seed", c.seed);
    if (c.K != 6 && (!s.raw("sigma_target") || !s.raw("sigma_nontarget"))) {
        throw ConfigError("[sim] K != 6 requires sigma_target and sigma_nontarget");
    }
    c.sigma_target = read_matrix(s, "sigma_target", c.sigma_target, c.K);
    c.sigma_nontarget = read_matrix(s, "sigma_nontarget", c.sigma_nontarget, c.K);
    try {
        c.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("[sim] ") + e.what());
    }
    return c;
}

KernelConfig RunConfig::kernel() const
{
    const Section s(tree_, "kernel", {});
    KernelConfig c;
    s.read("alpha", c.alpha);
    s.read("variance_threshold", c.variance_threshold);
    s.read("rho", c.rho);
    double rmin = 0.5, rmax = 500.0, nmin = 1e-3, nmax = 1.0;
    int rcount = 30, ncount = 10;
    s.read("rho_grid_min", rmin);
    s.read("rho_grid_max", rmax);
    s.read("rho_grid_count", rcount);
    s.read("noise_grid_min", nmin);
    s.read("noise_grid_max", nmax);
    s.read("noise_grid_count", ncount);
    try {
        c.search.rho_grid = log_spaced(rmin, rmax, rcount);
        c.search.noise_grid = log_spaced(nmin, nmax, ncount);
        c.search.alpha = c.alpha;
        KernelParams{c.alpha, c.rho > 0.0 ? c.rho : 1.0}.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("[kernel] ") + e.what());
    }
    if (c.rho < 0.0 || !(c.variance_threshold > 0.0 && c.variance_threshold <= 1.0)) {
        throw ConfigError("[kernel] need rho >= 0 and variance_threshold in (0, 1]");
    }
    return c;
}

RtgpConfig RunConfig::rtgp() const
{
    const Section s(tree_, "rtgp", {});
    RtgpConfig c;
    std::string link = to_string(c.link);
    s.read("link", link);
    try {
        c.link = parse_link(link);
    } catch (const Error& e) {
        throw ConfigError(std::string("[rtgp] ") + e.what());
    }
    s.read("use_interactions", c.use_interactions);
    s.read("iterations", c.iterations);
    s.read("burn_in", c.burn_in);
    s.read("thin", c.thin);
    s.read("sigma_e2", c.sigma_e2);
    s.read("a_eta", c.a_eta);
    s.read("b_eta", c.b_eta);
    s.read("warm_iters", c.xi2.warm_iters);
    s.read("xi2_start", c.xi2.start);
    s.read("xi2_end", c.xi2.end);
    s.read("omega_points", c.omega_grid.points);
    s.read("omega_lower_quantile", c.omega_grid.lower_quantile);
    s.read("omega_upper_quantile", c.omega_grid.upper_quantile);
    s.read("adaptive_thresholds", c.adaptive_thresholds);
    s.read("seed", c.seed);
    s.read("verbose", c.verbose);
    c.validate();
    return c;
}

SwldaOptions RunConfig::swlda() const
{
    const Section s(tree_, "swlda", {});
    SwldaOptions c;
    s.read("p_enter", c.p_enter);
    s.read("p_remove", c.p_remove);
    s.read("max_features", c.max_features);
    if (!(c.p_enter > 0.0 && c.p_enter <= c.p_remove && c.p_remove < 1.0) || c.max_features < 1) {
        throw ConfigError("[swlda] need 0 < p_enter <= p_remove < 1 and max_features >= 1");
    }
    return c;
}

RunConfig::EvaluateSettings RunConfig::evaluate() const
{
    const Section s(tree_, "evaluate", {});
    EvaluateSettings c;
    std::string rule = to_string(c.support_rule);
    s.read("support_rule", rule);
    try {
        c.support_rule = parse_support_rule(rule);
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("[evaluate] ") + e.what());
    }
    s.read("pair_display_percentile", c.pair_display_percentile);
    return c;
}

GridConfig RunConfig::grid(const std::vector<std::string>& required) const
{
    const Section s(tree_, "grid", required);
    GridConfig c;
    c.sim = sim();
    c.settings.kernel = kernel();
    c.settings.rtgp = rtgp();
    c.settings.swlda = swlda();
    c.settings.support_rule = evaluate().support_rule;
    c.alphas = {c.sim.alpha};
    c.tau2s = {c.sim.tau2};
    c.sigma2s = {c.sim.sigma2};
    s.read("alphas", c.alphas);
    s.read("tau2s", c.tau2s);
    s.read("sigma2s", c.sigma2s);
    s.read("replicates", c.replicates);
    if (const char* env = std::getenv("RTGP_WORKERS")) {
        c.workers = static_cast<int>(to_integer("RTGP_WORKERS", env));
    }
    s.read("workers", c.workers);
    s.read("seed", c.seed);
    if (auto m = s.raw("methods")) {
        c.methods.clear();
        for (const auto& name : split_list(*m)) {
            try {
                c.methods.push_back(parse_method(name));
            } catch (const InvalidInput& e) {
                throw ConfigError(std::string("[grid] ") + e.what());
            }
        }
    }
    c.validate();
    return c;
}

void echo_sim(Echo& echo, const SimConfig& c)
{
    echo.push_back({"sim",
                    {{"alpha", format_double(c.alpha)},
                     {"tau2", format_double(c.tau2)},
                     {"sigma2", format_double(c.sigma2)},
                     {"K", integer(c.K)},
                     {"T", integer(c.T)},
                     {"R", integer(c.R)},
                     {"S", integer(c.S)},
                     {"text", c.text},
                     {"amplitude", format_double(c.amplitude)},
                     {"width", format_double(c.width)},
                     {"centers", join_doubles(c.centers)},
                     {"support_halfwidth", format_double(c.support_halfwidth)},
                     {"sample_rate", format_double(c.sample_rate)},
                     {"display_ms", format_double(c.timing.display_ms)},
                     {"pause_ms", format_double(c.timing.pause_ms)},
                     {"sigma_target", matrix_string(c.sigma_target)},
                     {"sigma_nontarget", matrix_string(c.sigma_nontarget)},
                     {"seed", std::to_string(c.seed)}}});
}

void echo_kernel(Echo& echo, const KernelConfig& c)
{
    echo.push_back({"kernel",
                    {{"alpha", format_double(c.alpha)},
                     {"variance_threshold", format_double(c.variance_threshold)},
                     {"rho", format_double(c.rho)},
                     {"rho_grid_min", format_double(c.search.rho_grid.front())},
                     {"rho_grid_max", format_double(c.search.rho_grid.back())},
                     {"rho_grid_count", integer(static_cast<long long>(c.search.rho_grid.size()))},
                     {"noise_grid_min", format_double(c.search.noise_grid.front())},
                     {"noise_grid_max", format_double(c.search.noise_grid.back())},
                     {"noise_grid_count", integer(static_cast<long long>(c.search.noise_grid.size()))}}});
}

void echo_rtgp(Echo& echo, const RtgpConfig& c)
{
    echo.push_back({"rtgp",
                    {{"link", to_string(c.link)},
                     {"use_interactions", flag(c.use_interactions)},
                     {"iterations", integer(c.iterations)},
                     {"burn_in", integer(c.burn_in)},
                     {"thin", integer(c.thin)},
                     {"sigma_e2", format_double(c.sigma_e2)},
                     {"a_eta", format_double(c.a_eta)},
                     {"b_eta", format_double(c.b_eta)},
                     {"warm_iters", integer(c.xi2.warm_iters)},
                     {"xi2_start", format_double(c.xi2.start)},
                     {"xi2_end", format_double(c.xi2.end)},
                     {"omega_points", integer(c.omega_grid.points)},
                     {"omega_lower_quantile", format_double(c.omega_grid.lower_quantile)},
                     {"omega_upper_quantile", format_double(c.omega_grid.upper_quantile)},
                     {"adaptive_thresholds", flag(c.adaptive_thresholds)},
                     {"seed", std::to_string(c.seed)},
                     {"verbose", flag(c.verbose)}}});
}

void echo_swlda(Echo& echo, const SwldaOptions& c)
{
    echo.push_back({"swlda",
                    {{"p_enter", format_double(c.p_enter)},
                     {"p_remove", format_double(c.p_remove)},
                     {"max_features", integer(c.max_features)}}});
}

void echo_grid(Echo& echo, const GridConfig& c)
{
    std::string methods;
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
        methods += (i ? "," : "") + to_string(c.methods[i]);
    }
    echo.push_back({"grid",
                    {{"alphas", join_doubles(c.alphas)},
                     {"tau2s", join_doubles(c.tau2s)},
                     {"sigma2s", join_doubles(c.sigma2s)},
                     {"replicates", integer(c.replicates)},
                     {"methods", methods},
                     {"workers", integer(c.workers)},
                     {"seed", std::to_string(c.seed)}}});
}

void echo_evaluate(Echo& echo, const RunConfig::EvaluateSettings& c)
{
    echo.push_back({"evaluate",
                    {{"support_rule", to_string(c.support_rule)},
                     {"pair_display_percentile", format_double(c.pair_display_percentile)}}});
}

std::string render_ini(const Echo& echo)
{
    std::string out;
    for (std::size_t i = 0; i < echo.size(); ++i) {
        out += (i ? "\n[" : "[") + echo[i].first + "]\n";
        for (const auto& [k, v] : echo[i].second) {
            out += k + " = " + v + "\n";
        }
    }
    return out;
}

}  // namespace rtgp::cli
