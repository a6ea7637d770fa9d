#include "reminis/netsim.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <deque>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace reminis {

void validate(const SimConfig& config) {
  if (config.buffer_capacity < 1) {
    throw std::invalid_argument("buffer_capacity must be >= 1");
  }
  if (config.duration <= SimTime{0}) {
    throw std::invalid_argument("duration must be positive");
  }
  if (config.one_way_delay < SimTime{0}) {
    throw std::invalid_argument("one_way_delay must be >= 0");
  }
  if (config.packet_size <= 0) {
    throw std::invalid_argument("packet_size must be positive");
  }
  if (config.cwnd_sample_interval <= SimTime{0}) {
    throw std::invalid_argument("cwnd_sample_interval must be positive");
  }
}

ControllerSpec reminis_controller(Ablation ablation, GuardianConfig guardian) {
  ControllerSpec spec;
  spec.kind = ControllerKind::kReminis;
  switch (ablation) {
    case Ablation::kNone: break;
    case Ablation::kNdeOff: guardian.exploration = ExplorationMode::kOff; break;
    case Ablation::kPsOff: guardian.proactive_slowdown = false; break;
    case Ablation::kCmOff: guardian.catastrophe_mitigation = false; break;
    case Ablation::kPsCmOff:
      guardian.proactive_slowdown = false;
      guardian.catastrophe_mitigation = false;
      break;
    case Ablation::kAimdOff: spec.aimd_enabled = false; break;
    case Ablation::kDeterministicExploration:
      guardian.exploration = ExplorationMode::kDeterministic;
      break;
  }
  spec.guardian = guardian;
  return spec;
}

ControllerSpec aimd_controller() {
  ControllerSpec spec;
  spec.kind = ControllerKind::kAimdOnly;
  spec.delay_slow_start_exit = false;
  return spec;
}

std::int64_t capacity_delivered(const TraceSchedule& trace, SimTime t0,
                                SimTime t1, int packet_size) {
  if (t1 <= t0) return 0;
  return trace.count_between(t0, t1) * packet_size;
}

namespace {

enum class EventKind : std::uint8_t {
  kFlowStart,
  kQueueArrival,
  kDeliveryOpportunity,
  kAckArrival,
  kGuardianTick,
  kStallCheck,
  kCwndSample,
};

struct Event {
  std::int64_t time;
  std::uint64_t order;
  EventKind kind;
  std::uint32_t flow;
  std::uint64_t packet;
};

struct LaterFirst {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.order > b.order;
  }
};

constexpr SimTime kMinStallTimeout = 1s;

struct FlowRuntime {
  FlowSpec spec;
  CwndState cwnd;
  RttTracker rtt;
  std::optional<Guardian> guardian;
  bool started = false;
  std::uint64_t next_seq = 0;
  std::int64_t inflight = 0;
  std::deque<std::size_t> outstanding;  // packet indices, send order
  std::deque<std::size_t> holes;        // skipped by a later ack
  std::optional<std::uint64_t> recovery_seq;
  SimTime last_ack_at{0};
  SimTime last_rtt{0};
  bool stall_check_pending = false;
  FlowStats stats;

  bool is_reminis() const {
    return spec.controller.kind == ControllerKind::kReminis;
  }
  double floor() const { return spec.controller.guardian.cwnd_floor; }
};

std::uint64_t derive_seed(std::uint64_t sim_seed, std::uint32_t flow_id,
                          std::uint64_t guardian_seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(sim_seed),
                    static_cast<std::uint32_t>(sim_seed >> 32), flow_id,
                    static_cast<std::uint32_t>(guardian_seed),
                    static_cast<std::uint32_t>(guardian_seed >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

class Simulator {
 public:
  Simulator(const SimConfig& config, const std::vector<FlowSpec>& flows,
            const TraceSchedule& trace)
      : config_(config), trace_(trace), cursor_(trace) {
    validate(config_);
    std::unordered_set<std::uint32_t> ids;
    for (const auto& spec : flows) {
      if (!ids.insert(spec.flow_id).second) {
        throw std::invalid_argument("duplicate flow_id " +
                                    std::to_string(spec.flow_id));
      }
      if (spec.start_time < SimTime{0} || spec.start_time >= config_.duration) {
        throw std::invalid_argument("flow " + std::to_string(spec.flow_id) +
                                    " start_time outside [0, duration)");
      }
      if (!(spec.controller.initial_cwnd >= 1.0)) {
        throw std::invalid_argument("initial_cwnd must be >= 1");
      }
      validate(spec.controller.guardian);

      FlowRuntime f;
      f.spec = spec;
      f.cwnd.cwnd = std::max(spec.controller.initial_cwnd, f.floor());
      if (spec.controller.start_in_congestion_avoidance) {
        f.cwnd.phase = AimdPhase::kCongestionAvoidance;
        f.cwnd.ssthresh = f.cwnd.cwnd;
      }
      if (f.is_reminis()) {
        GuardianConfig g = spec.controller.guardian;
        g.rng_seed = derive_seed(config_.seed, spec.flow_id, g.rng_seed);
        f.guardian.emplace(g);
      }
      f.stats.flow_id = spec.flow_id;
      flows_.push_back(std::move(f));
    }
    queues_.resize(config_.per_flow_queues ? std::max<std::size_t>(flows_.size(), 1)
                                           : 1);
    log_.config = config_;
  }

  ExperimentLog run() {
    for (std::uint32_t i = 0; i < flows_.size(); ++i) {
      schedule(flows_[i].spec.start_time, EventKind::kFlowStart, i);
    }
    schedule(cursor_.next(), EventKind::kDeliveryOpportunity);
    if (!flows_.empty()) schedule(SimTime{0}, EventKind::kCwndSample);

    const std::int64_t end = config_.duration.count();
    while (!events_.empty() && events_.top().time < end) {
      const Event ev = events_.top();
      events_.pop();
      now_ = SimTime{ev.time};
      dispatch(ev);
      check_conservation();
    }

    log_.final_accounting = accounting();
    if (!log_.final_accounting.holds()) {
      throw std::logic_error("packet conservation violated at end of run");
    }
    for (auto& f : flows_) log_.flows.push_back(f.stats);
    return std::move(log_);
  }

 private:
  void schedule(SimTime t, EventKind kind, std::uint32_t flow = 0,
                std::uint64_t packet = 0) {
    events_.push(Event{t.count(), order_++, kind, flow, packet});
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::kFlowStart: start_flow(ev.flow); break;
      case EventKind::kQueueArrival: arrive(ev.packet); break;
      case EventKind::kDeliveryOpportunity: deliver(); break;
      case EventKind::kAckArrival: ack(ev.packet); break;
      case EventKind::kGuardianTick: guardian_tick(ev.flow); break;
      case EventKind::kStallCheck: stall_check(ev.flow); break;
      case EventKind::kCwndSample: sample_cwnd(); break;
    }
  }

  void start_flow(std::uint32_t fi) {
    auto& f = flows_[fi];
    f.started = true;
    f.last_ack_at = now_;
    try_send(fi);
  }

  void try_send(std::uint32_t fi) {
    auto& f = flows_[fi];
    if (!f.started) return;
    const auto limit = static_cast<std::int64_t>(std::floor(f.cwnd.cwnd));
    while (f.inflight < limit) {
      PacketRecord p;
      p.flow_id = f.spec.flow_id;
      p.seq = f.next_seq++;
      p.sent_at = now_;
      const std::size_t idx = log_.packets.size();
      log_.packets.push_back(p);
      given_up_.push_back(false);
      f.outstanding.push_back(idx);
      ++f.inflight;
      ++f.stats.sent;
      ++propagating_;
      schedule(now_ + config_.one_way_delay, EventKind::kQueueArrival, fi, idx);
    }
    arm_stall_check(fi);
  }

  std::deque<std::size_t>& queue_for(std::uint32_t flow_index) {
    return queues_[config_.per_flow_queues ? flow_index : 0];
  }

  void arrive(std::size_t idx) {
    --propagating_;
    auto& p = log_.packets[idx];
    auto& q = queue_for(flow_index_of(p));
    if (static_cast<std::int64_t>(q.size()) >= config_.buffer_capacity) {
      p.dropped_at = now_;
      ++dropped_;
      ++flows_[flow_index_of(p)].stats.dropped;
      return;
    }
    p.enqueued_at = now_;
    q.push_back(idx);
    ++queued_;
    log_.max_queue_length =
        std::max(log_.max_queue_length, static_cast<std::int64_t>(q.size()));
  }

  void deliver() {
    std::deque<std::size_t>* q = nullptr;
    for (std::size_t k = 0; k < queues_.size(); ++k) {
      auto& candidate = queues_[(rr_ + k) % queues_.size()];
      if (!candidate.empty()) {
        q = &candidate;
        rr_ = (rr_ + k + 1) % queues_.size();
        break;
      }
    }
    if (q == nullptr) {
      ++log_.opportunities_wasted;
    } else {
      const std::size_t idx = q->front();
      q->pop_front();
      --queued_;
      ++delivered_;
      ++log_.opportunities_used;
      auto& p = log_.packets[idx];
      p.delivered_at = now_;
      const auto fi = flow_index_of(p);
      ++flows_[fi].stats.delivered;
      schedule(now_ + config_.one_way_delay, EventKind::kAckArrival, fi, idx);
    }
    schedule(cursor_.next(), EventKind::kDeliveryOpportunity);
  }

  void ack(std::size_t idx) {
    const auto& p = log_.packets[idx];
    const auto fi = flow_index_of(p);
    auto& f = flows_[fi];
    if (given_up_[idx]) return;  // written off by a stall timeout

    while (!f.outstanding.empty() && f.outstanding.front() != idx) {
      f.holes.push_back(f.outstanding.front());
      f.outstanding.pop_front();
    }
    f.outstanding.pop_front();
    --f.inflight;
    f.last_ack_at = now_;

    const SimTime rtt = now_ - p.sent_at;
    f.last_rtt = rtt;
    f.rtt.record(to_seconds(rtt));

    const bool in_slow_start = f.cwnd.phase == AimdPhase::kSlowStart;
    if (!f.holes.empty()) {
      if (on_dupack(f.cwnd)) {
        const std::uint64_t first_hole = log_.packets[f.holes.front()].seq;
        for (auto h : f.holes) given_up_[h] = true;
        f.inflight -= static_cast<std::int64_t>(f.holes.size());
        f.holes.clear();
        f.cwnd.dupack_count = 0;
        if (!f.recovery_seq || first_hole > *f.recovery_seq) {
          loss_event(f);
        }
      }
    } else if (in_slow_start || f.spec.controller.aimd_enabled) {
      on_ack(f.cwnd);
    } else {
      f.cwnd.dupack_count = 0;
    }

    if (f.is_reminis() && f.cwnd.phase == AimdPhase::kSlowStart &&
        f.spec.controller.delay_slow_start_exit) {
      const double dtt = resolve_dtt(f.guardian->config(), f.rtt.mrtt()).seconds;
      if (to_seconds(rtt) > dtt) exit_slow_start(f.cwnd, f.floor());
    }
    maybe_activate_guardian(fi);
    try_send(fi);
  }

  void loss_event(FlowRuntime& f) {
    ++f.stats.loss_events;
    f.recovery_seq = f.next_seq == 0 ? 0 : f.next_seq - 1;
    if (f.cwnd.phase == AimdPhase::kSlowStart || f.spec.controller.aimd_enabled) {
      on_loss(f.cwnd, f.floor());
    }
  }

  void maybe_activate_guardian(std::uint32_t fi) {
    auto& f = flows_[fi];
    if (!f.guardian || f.guardian->active()) return;
    if (f.cwnd.phase != AimdPhase::kCongestionAvoidance || !f.rtt.has_mrtt()) {
      return;
    }
    f.guardian->activate(to_seconds(now_), f.rtt);
    f.stats.guardian_activated_at = now_;
    schedule(from_seconds(f.guardian->next_tick_time()),
             EventKind::kGuardianTick, fi);
  }

  void guardian_tick(std::uint32_t fi) {
    auto& f = flows_[fi];
    TickSnapshot snap;
    snap.flow_id = f.spec.flow_id;
    snap.tick = f.guardian->tick(to_seconds(now_), f.rtt, f.cwnd);
    log_.ticks.push_back(snap);
    const SimTime next = std::max(from_seconds(f.guardian->next_tick_time()),
                                  now_ + SimTime{1});
    schedule(next, EventKind::kGuardianTick, fi);
    try_send(fi);
  }

  SimTime stall_timeout(const FlowRuntime& f) const {
    return std::max(kMinStallTimeout, 4 * f.last_rtt);
  }

  void arm_stall_check(std::uint32_t fi) {
    auto& f = flows_[fi];
    if (f.stall_check_pending || f.inflight == 0) return;
    f.stall_check_pending = true;
    schedule(f.last_ack_at + stall_timeout(f), EventKind::kStallCheck, fi);
  }

  // Liveness guard: a window made entirely of lost packets produces no acks
  // and therefore no duplicate acks either.
  void stall_check(std::uint32_t fi) {
    auto& f = flows_[fi];
    f.stall_check_pending = false;
    if (f.inflight == 0) return;
    const SimTime deadline = f.last_ack_at + stall_timeout(f);
    if (now_ < deadline) {
      f.stall_check_pending = true;
      schedule(deadline, EventKind::kStallCheck, fi);
      return;
    }
    for (auto idx : f.outstanding) given_up_[idx] = true;
    for (auto idx : f.holes) given_up_[idx] = true;
    f.outstanding.clear();
    f.holes.clear();
    f.inflight = 0;
    f.cwnd.dupack_count = 0;
    ++f.stats.stall_timeouts;
    loss_event(f);
    f.last_ack_at = now_;
    try_send(fi);
  }

  void sample_cwnd() {
    for (const auto& f : flows_) {
      if (f.started) {
        log_.cwnd_samples.push_back({now_, f.spec.flow_id, f.cwnd.cwnd});
      }
    }
    schedule(now_ + config_.cwnd_sample_interval, EventKind::kCwndSample);
  }

  std::uint32_t flow_index_of(const PacketRecord& p) const {
    // Flow ids are usually 0..n-1; fall back to a scan otherwise.
    if (p.flow_id < flows_.size() && flows_[p.flow_id].spec.flow_id == p.flow_id) {
      return p.flow_id;
    }
    for (std::uint32_t i = 0; i < flows_.size(); ++i) {
      if (flows_[i].spec.flow_id == p.flow_id) return i;
    }
    throw std::logic_error("packet of unknown flow");
  }

  Conservation accounting() const {
    return {static_cast<std::int64_t>(log_.packets.size()), delivered_, dropped_,
            queued_, propagating_};
  }

  void check_conservation() const {
    if (!accounting().holds()) {
      throw std::logic_error("packet conservation violated at t=" +
                             std::to_string(now_.count()) + "us");
    }
  }

  SimConfig config_;
  const TraceSchedule& trace_;
  TraceCursor cursor_;
  std::vector<FlowRuntime> flows_;
  std::vector<std::deque<std::size_t>> queues_;
  std::size_t rr_ = 0;
  std::priority_queue<Event, std::vector<Event>, LaterFirst> events_;
  std::uint64_t order_ = 0;
  SimTime now_{0};
  std::vector<bool> given_up_;
  std::int64_t delivered_ = 0;
  std::int64_t dropped_ = 0;
  std::int64_t queued_ = 0;
  std::int64_t propagating_ = 0;
  ExperimentLog log_;
};

class Fnv1a {
 public:
  template <typename T>
  void add(const T& value) {
    const auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    for (auto b : bytes) {
      hash_ ^= b;
      hash_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

ExperimentLog run(const SimConfig& config, const std::vector<FlowSpec>& flows,
                  const TraceSchedule& trace) {
  return Simulator(config, flows, trace).run();
}

std::uint64_t fingerprint(const ExperimentLog& log) {
  Fnv1a h;
  for (const auto& p : log.packets) {
    h.add(p.flow_id);
    h.add(p.seq);
    h.add(p.sent_at.count());
    h.add(p.enqueued_at.count());
    h.add(p.delivered_at.count());
    h.add(p.dropped_at.count());
  }
  for (const auto& s : log.ticks) {
    h.add(s.flow_id);
    h.add(s.tick.time);
    h.add(s.tick.d_now);
    h.add(s.tick.mu);
    h.add(s.tick.adjustment.multiplier);
    h.add(s.tick.cwnd_after);
  }
  for (const auto& c : log.cwnd_samples) {
    h.add(c.t.count());
    h.add(c.flow_id);
    h.add(c.cwnd);
  }
  h.add(log.opportunities_used);
  h.add(log.opportunities_wasted);
  return h.value();
}

}  // namespace reminis
