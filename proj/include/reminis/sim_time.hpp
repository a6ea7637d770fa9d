#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

namespace reminis {

/// Simulation clock. Integer microseconds so that multi-hundred-Mbps
/// opportunity spacing (tens of microseconds) stays exact.
using SimTime = std::chrono::duration<std::int64_t, std::micro>;

inline constexpr SimTime kNever{-1};

constexpr double to_seconds(SimTime t) {
  return static_cast<double>(t.count()) * 1e-6;
}

constexpr double to_millis(SimTime t) {
  return static_cast<double>(t.count()) * 1e-3;
}

inline SimTime from_seconds(double s) {
  return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))};
}

inline SimTime from_millis(double ms) {
  return SimTime{static_cast<std::int64_t>(std::llround(ms * 1e3))};
}

}  // namespace reminis
