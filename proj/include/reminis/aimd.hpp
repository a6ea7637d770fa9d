#pragma once

#include <limits>

namespace reminis {

enum class AimdPhase { kSlowStart, kCongestionAvoidance };

/// Ack-clocked window state shared by the AIMD block and the Guardian.
/// The window is fractional so that congestion avoidance can accumulate
/// 1/cwnd per ack.
struct CwndState {
  double cwnd = 10.0;
  double ssthresh = std::numeric_limits<double>::infinity();
  AimdPhase phase = AimdPhase::kSlowStart;
  int dupack_count = 0;
};

inline constexpr double kDefaultCwndFloor = 2.0;
inline constexpr int kDupackThreshold = 3;

struct LossEvent {};

/// Per-ack growth: +1 in slow start, +1/cwnd in congestion avoidance.
/// Leaves slow start once cwnd reaches ssthresh. Resets the dupack count.
void on_ack(CwndState& state);

/// Counts a duplicate ack. Returns true exactly once per loss episode,
/// when the count reaches the threshold.
bool on_dupack(CwndState& state);

/// Multiplicative decrease: ssthresh = max(cwnd / 2, floor), cwnd = ssthresh.
void on_loss(CwndState& state, double cwnd_floor = kDefaultCwndFloor);

/// Delay-triggered slow-start exit. Keeps the current window and pins
/// ssthresh to it.
void exit_slow_start(CwndState& state, double cwnd_floor = kDefaultCwndFloor);

}  // namespace reminis
