#pragma once

#include "rtgp/eeg_data.hpp"

#include <cstdint>
#include <string>

namespace rtgp {

inline constexpr std::uint16_t kSessionVersion = 1;

/// Reads an "EEGS" container. Interaction vectors are recomputed from the signals.
SessionData load_session(const std::string& path);

/// Writes an "EEGS" container via a temporary file and rename.
void save_session(const SessionData& session, const std::string& path);

}  // namespace rtgp
