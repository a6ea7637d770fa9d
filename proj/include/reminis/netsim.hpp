#pragma once

// Deterministic discrete-event simulation of a single trace-driven
// bottleneck. Senders are window-limited; each packet travels one_way_delay
// to a drop-tail queue, leaves it at the next trace delivery opportunity,
// and its ack returns after another one_way_delay over an unconstrained
// uplink.

#include <chrono>
#include <cstdint>
#include <vector>

#include "reminis/aimd.hpp"
#include "reminis/guardian.hpp"
#include "reminis/sim_time.hpp"
#include "reminis/trace.hpp"

namespace reminis {

using namespace std::chrono_literals;

/// Stand-in for an unbounded buffer.
inline constexpr std::int64_t kInfiniteBuffer = std::int64_t{1} << 31;

struct SimConfig {
  std::int64_t buffer_capacity = 3200;  // packets
  SimTime one_way_delay = 10ms;
  SimTime duration = 60s;
  int packet_size = kDefaultPacketSize;
  std::uint64_t seed = 1;
  bool per_flow_queues = false;
  SimTime cwnd_sample_interval = 10ms;

  SimTime intrinsic_rtt() const { return 2 * one_way_delay; }
};

void validate(const SimConfig& config);

enum class ControllerKind { kReminis, kAimdOnly };

enum class Ablation {
  kNone,
  kNdeOff,
  kPsOff,
  kCmOff,
  kPsCmOff,
  kAimdOff,
  kDeterministicExploration,
};

struct ControllerSpec {
  ControllerKind kind = ControllerKind::kReminis;
  GuardianConfig guardian;
  // Per-ack increase and loss decrease outside slow start.
  bool aimd_enabled = true;
  double initial_cwnd = 10.0;
  bool start_in_congestion_avoidance = false;
  // Reminis only: leave slow start on the first RTT sample above DTT.
  bool delay_slow_start_exit = true;
};

ControllerSpec reminis_controller(Ablation ablation = Ablation::kNone,
                                  GuardianConfig guardian = {});
ControllerSpec aimd_controller();

struct FlowSpec {
  std::uint32_t flow_id = 0;
  SimTime start_time{0};
  ControllerSpec controller;
};

struct PacketRecord {
  std::uint32_t flow_id = 0;
  std::uint64_t seq = 0;
  SimTime sent_at{0};
  SimTime enqueued_at = kNever;
  SimTime delivered_at = kNever;  // left the bottleneck queue
  SimTime dropped_at = kNever;

  bool delivered() const { return delivered_at != kNever; }
  bool dropped() const { return dropped_at != kNever; }
  /// Time spent waiting in the bottleneck queue.
  SimTime queuing_delay() const { return delivered_at - enqueued_at; }
};

struct TickSnapshot {
  std::uint32_t flow_id = 0;
  TickRecord tick;
};

struct CwndSample {
  SimTime t{0};
  std::uint32_t flow_id = 0;
  double cwnd = 0.0;
};

struct FlowStats {
  std::uint32_t flow_id = 0;
  std::int64_t sent = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  std::int64_t loss_events = 0;
  std::int64_t stall_timeouts = 0;
  SimTime guardian_activated_at = kNever;
};

/// Packet accounting at one instant.
struct Conservation {
  std::int64_t sent = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  std::int64_t in_queue = 0;
  std::int64_t in_flight = 0;  // travelling towards the queue

  bool holds() const {
    return sent == delivered + dropped + in_queue + in_flight;
  }
};

struct ExperimentLog {
  SimConfig config;
  std::vector<PacketRecord> packets;
  std::vector<TickSnapshot> ticks;
  std::vector<CwndSample> cwnd_samples;
  std::vector<FlowStats> flows;
  std::int64_t opportunities_used = 0;
  std::int64_t opportunities_wasted = 0;
  std::int64_t max_queue_length = 0;
  Conservation final_accounting;

  /// RTT of a delivered packet: both propagation legs plus queue wait.
  SimTime rtt(const PacketRecord& p) const {
    return p.delivered_at - p.sent_at + config.one_way_delay;
  }
};

/// Runs one experiment. Throws std::invalid_argument for invalid configs or
/// duplicate flow ids, and std::logic_error if packet conservation breaks.
ExperimentLog run(const SimConfig& config, const std::vector<FlowSpec>& flows,
                  const TraceSchedule& trace);

/// Bytes the link could carry in [t0, t1), trace replay included.
std::int64_t capacity_delivered(const TraceSchedule& trace, SimTime t0,
                                SimTime t1,
                                int packet_size = kDefaultPacketSize);

/// Stable 64-bit digest of a log, for replay comparisons.
std::uint64_t fingerprint(const ExperimentLog& log);

}  // namespace reminis
