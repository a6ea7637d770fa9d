#pragma once

// Link capacity as a schedule of packet delivery opportunities, using the
// Mahimahi trace convention: one integer millisecond per line, each line one
// MTU-sized opportunity. Repeated timestamps are bursts within that
// millisecond. Replay loops once the last timestamp is passed.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reminis/sim_time.hpp"

namespace reminis {

inline constexpr int kDefaultPacketSize = 1500;

class TraceParseError : public std::runtime_error {
 public:
  enum class Kind { kNotInteger, kDecreasing, kEmpty, kZeroLength };

  TraceParseError(Kind kind, std::size_t line, const std::string& what)
      : std::runtime_error(what), kind_(kind), line_(line) {}

  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

struct RateSegment {
  double rate_mbps = 0.0;
  double duration_s = 0.0;
};

class TraceSchedule {
 public:
  /// Timestamps must be nondecreasing and nonempty, loop_ms >= last timestamp
  /// and > 0. Throws std::invalid_argument otherwise.
  TraceSchedule(std::vector<std::int64_t> timestamps_ms, std::int64_t loop_ms);

  static TraceSchedule parse(std::string_view text);
  static TraceSchedule load(const std::filesystem::path& path);

  /// Evenly spaced opportunities at rate / (packet_size * 8) per second.
  static TraceSchedule synth_constant(double rate_mbps, double duration_s,
                                      int packet_size = kDefaultPacketSize);

  /// Back-to-back constant segments on one continuous timeline.
  static TraceSchedule synth_step(const std::vector<RateSegment>& segments,
                                  int packet_size = kDefaultPacketSize);

  std::string render() const;

  std::span<const std::int64_t> timestamps_ms() const { return timestamps_ms_; }
  std::int64_t loop_ms() const { return loop_ms_; }
  std::size_t size() const { return timestamps_ms_.size(); }

  /// Opportunity instants of the first loop, with same-millisecond bursts
  /// spread uniformly across their millisecond.
  std::span<const SimTime> opportunities() const { return opportunities_; }
  SimTime loop_length() const { return SimTime{loop_ms_ * 1000}; }

  /// Number of opportunities at instants in [0, t), counting loop replays.
  std::int64_t count_before(SimTime t) const;

  /// Number of opportunities in [t0, t1).
  std::int64_t count_between(SimTime t0, SimTime t1) const;

  /// Instant of the k-th opportunity (0-based) across loop replays.
  SimTime opportunity(std::int64_t k) const;

  /// Average capacity over one loop.
  double mean_rate_mbps(int packet_size = kDefaultPacketSize) const;

  friend bool operator==(const TraceSchedule& a, const TraceSchedule& b) {
    return a.timestamps_ms_ == b.timestamps_ms_ && a.loop_ms_ == b.loop_ms_;
  }

 private:
  std::vector<std::int64_t> timestamps_ms_;
  std::int64_t loop_ms_;
  std::vector<SimTime> opportunities_;
};

/// Sequential reader over the looped opportunity stream.
class TraceCursor {
 public:
  explicit TraceCursor(const TraceSchedule& trace) : trace_(&trace) {}

  /// Instants never go backwards, even for traces whose first millisecond
  /// burst would otherwise overlap the previous loop's final one.
  SimTime next() {
    last_ = std::max(last_, trace_->opportunity(index_++));
    return last_;
  }

 private:
  const TraceSchedule* trace_;
  std::int64_t index_ = 0;
  SimTime last_{0};
};

/// Parses a synthetic trace description:
///   "constant:<mbps>:<seconds>" or "step:<mbps>x<seconds>,<mbps>x<seconds>,..."
/// Throws std::invalid_argument on malformed input.
TraceSchedule synth_from_spec(std::string_view spec,
                              int packet_size = kDefaultPacketSize);

}  // namespace reminis
