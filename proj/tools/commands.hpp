#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rtgp::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kConfigError = 1, kIoError = 2, kNumericError = 3 };

struct SimulateArgs {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

struct FitArgs {
    std::string config;  ///< optional; defaults apply when empty
    std::string session;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

struct EvaluateArgs {
    std::string config;
    std::string draws;
    std::string session;
    std::string truth;  ///< optional support-mask CSV
    std::string text;   ///< optional target text for unlabeled sessions
    std::vector<std::string> subject_draws;  ///< extra subjects for pair percentiles
    std::string out_dir;
};

struct GridArgs {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

void cmd_simulate(const SimulateArgs& args);
void cmd_fit(const FitArgs& args);
void cmd_evaluate(const EvaluateArgs& args);
void cmd_grid(const GridArgs& args);

/// Runs `fn`, reporting errors on stderr; returns the mapped exit code.
int guarded(const std::string& command, const std::function<void()>& fn);

}  // namespace rtgp::cli
