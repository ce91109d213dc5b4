#pragma once

#include <cstdint>
#include <random>

namespace defect {

enum class LogLevel { Silent = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from the DEFECTIVITY_LOG env var (silent|warn|info|debug or 0..3).
LogLevel log_level();

void logf(LogLevel level, const char* fmt, ...);

/// Deterministic generator for seeded tie-breaking and test data.
inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace defect
