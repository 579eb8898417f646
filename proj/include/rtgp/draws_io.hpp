#pragma once

#include "rtgp/sampler.hpp"

#include <cstdint>
#include <string>

namespace rtgp {

inline constexpr std::uint16_t kDrawsVersion = 1;

/// Writes an "RTGP" posterior-draws file (atomic).
void save_draws(const PosteriorDraws& draws, const std::string& path);
PosteriorDraws load_draws(const std::string& path);

}  // namespace rtgp
