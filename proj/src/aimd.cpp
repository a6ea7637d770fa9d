#include "reminis/aimd.hpp"

#include <algorithm>

namespace reminis {

void on_ack(CwndState& state) {
  if (state.phase == AimdPhase::kSlowStart) {
    state.cwnd += 1.0;
    if (state.cwnd >= state.ssthresh) {
      state.phase = AimdPhase::kCongestionAvoidance;
    }
  } else {
    state.cwnd += 1.0 / state.cwnd;
  }
  state.dupack_count = 0;
}

bool on_dupack(CwndState& state) {
  ++state.dupack_count;
  return state.dupack_count == kDupackThreshold;
}

void on_loss(CwndState& state, double cwnd_floor) {
  state.ssthresh = std::max(state.cwnd / 2.0, cwnd_floor);
  state.cwnd = state.ssthresh;
  state.phase = AimdPhase::kCongestionAvoidance;
}

void exit_slow_start(CwndState& state, double cwnd_floor) {
  state.cwnd = std::max(state.cwnd, cwnd_floor);
  state.ssthresh = state.cwnd;
  state.phase = AimdPhase::kCongestionAvoidance;
}

}  // namespace reminis
