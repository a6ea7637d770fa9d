#include "reminis/guardian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace reminis {

void validate(const GuardianConfig& config) {
  if (const auto* m = std::get_if<MrttMultiplierDtt>(&config.dtt_policy)) {
    if (!(m->multiplier > 1.0)) {
      throw std::invalid_argument("dtt_multiplier must be > 1.0, got " +
                                  std::to_string(m->multiplier));
    }
  } else {
    const auto& fixed = std::get<FixedDtt>(config.dtt_policy);
    if (!(fixed.seconds > 0.0)) {
      throw std::invalid_argument("dtt must be positive, got " +
                                  std::to_string(fixed.seconds));
    }
  }
  if (!(config.cwnd_floor >= 1.0)) {
    throw std::invalid_argument("cwnd_floor must be >= 1, got " +
                                std::to_string(config.cwnd_floor));
  }
}

ResolvedDtt resolve_dtt(const GuardianConfig& config, double mrtt) {
  if (const auto* m = std::get_if<MrttMultiplierDtt>(&config.dtt_policy)) {
    return {mrtt * m->multiplier, false};
  }
  const double fixed = std::get<FixedDtt>(config.dtt_policy).seconds;
  const double floor = 1.1 * mrtt;
  if (fixed < floor) return {floor, true};
  return {fixed, false};
}

void RttTracker::record(double rtt_seconds) {
  if (!has_mrtt_ || rtt_seconds < mrtt_) {
    mrtt_ = rtt_seconds;
    has_mrtt_ = true;
  }
  samples_.push_back(rtt_seconds);
}

std::optional<double> RttTracker::si_mean() const {
  if (samples_.empty()) return std::nullopt;
  const double sum = std::accumulate(samples_.begin(), samples_.end(), 0.0);
  return sum / static_cast<double>(samples_.size());
}

double safe_zone(double d, double mrtt, double dtt) {
  return 1.0 - (d - mrtt) / (dtt - mrtt);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Zone classify_zone(double d, double derivative, double dtt) {
  if (d > dtt) return Zone::kZone3;
  if (derivative > 0.0) return Zone::kZone2;
  if (derivative < 0.0) return Zone::kZone1;
  return Zone::kNeutral;
}

double nde_variance(double mu) { return std::max(std::abs(mu) / 4.0, 1e-6); }

double nde_multiplier(double mu, Rng& rng) {
  std::normal_distribution<double> gaussian(mu, std::sqrt(nde_variance(mu)));
  return std::exp2(sigmoid(gaussian(rng)));
}

double deterministic_nde_multiplier(double mu) {
  return std::exp2(sigmoid(mu));
}

namespace {

// 2^x underflows to zero below about -1074. Far past that point cwnd is on
// its floor anyway; the clamp only keeps the multipliers strictly positive.
constexpr double kMinExponent = -1000.0;

}  // namespace

double ps_multiplier(double d_now, double derivative, double si, double mrtt,
                     double dtt) {
  const double d_next = d_now + derivative * si;
  return std::exp2(std::clamp(safe_zone(d_next, mrtt, dtt), kMinExponent, 0.0));
}

double cm_multiplier(double sz_now) {
  return std::exp2(std::max(sz_now, kMinExponent)) * 0.5;
}

TickRecord guardian_tick(GuardianState& state, RttTracker& rtt,
                         CwndState& cwnd, double now, Rng& rng,
                         const GuardianConfig& config) {
  TickRecord rec;
  rec.time = now;
  rec.mrtt = rtt.mrtt();
  const ResolvedDtt dtt = resolve_dtt(config, rec.mrtt);
  rec.dtt = dtt.seconds;
  rec.dtt_raised = dtt.raised;

  const std::optional<double> mean = rtt.si_mean();
  rec.empty_si = !mean.has_value();
  rec.d_now = mean.value_or(state.d_prev);

  const double interval = now - state.last_tick;
  rec.derivative = interval > 0.0 ? (rec.d_now - state.d_prev) / interval : 0.0;
  state.mu -= rec.derivative;
  rec.mu = state.mu;

  rec.zone = rec.empty_si ? Zone::kNeutral
                          : classify_zone(rec.d_now, rec.derivative, rec.dtt);

  CwndAdjustment adj;
  switch (rec.zone) {
    case Zone::kZone3:
      if (config.catastrophe_mitigation) {
        adj = {cm_multiplier(safe_zone(rec.d_now, rec.mrtt, rec.dtt)),
               AdjustmentSource::kCm};
      }
      break;
    case Zone::kZone2:
      if (config.proactive_slowdown) {
        adj = {ps_multiplier(rec.d_now, rec.derivative, interval, rec.mrtt,
                             rec.dtt),
               AdjustmentSource::kPs};
      }
      break;
    case Zone::kZone1:
      switch (config.exploration) {
        case ExplorationMode::kStochastic:
          adj = {nde_multiplier(state.mu, rng), AdjustmentSource::kNde};
          break;
        case ExplorationMode::kDeterministic:
          adj = {deterministic_nde_multiplier(state.mu),
                 AdjustmentSource::kNde};
          break;
        case ExplorationMode::kOff:
          break;
      }
      break;
    case Zone::kNeutral:
      break;
  }
  rec.adjustment = adj;

  rec.cwnd_before = cwnd.cwnd;
  cwnd.cwnd = std::max(cwnd.cwnd * adj.multiplier, config.cwnd_floor);
  rec.cwnd_after = cwnd.cwnd;

  state.d_prev = rec.d_now;
  state.last_tick = now;
  state.si_length = rec.mrtt;
  rtt.clear_si();
  return rec;
}

Guardian::Guardian(GuardianConfig config)
    : config_(std::move(config)), rng_(config_.rng_seed) {
  validate(config_);
}

void Guardian::activate(double now, RttTracker& rtt) {
  if (!rtt.has_mrtt()) {
    throw std::logic_error("Guardian activated before any RTT sample");
  }
  state_ = GuardianState{};
  state_.d_prev = rtt.mrtt();
  state_.last_tick = now;
  state_.si_length = rtt.mrtt();
  rtt.clear_si();
  active_ = true;
}

TickRecord Guardian::tick(double now, RttTracker& rtt, CwndState& cwnd) {
  return guardian_tick(state_, rtt, cwnd, now, rng_, config_);
}

std::string_view to_string(Zone zone) {
  switch (zone) {
    case Zone::kZone1: return "zone1";
    case Zone::kZone2: return "zone2";
    case Zone::kZone3: return "zone3";
    case Zone::kNeutral: return "neutral";
  }
  return "neutral";
}

std::string_view to_string(AdjustmentSource source) {
  switch (source) {
    case AdjustmentSource::kNde: return "nde";
    case AdjustmentSource::kPs: return "ps";
    case AdjustmentSource::kCm: return "cm";
    case AdjustmentSource::kNone: return "none";
  }
  return "none";
}

}  // namespace reminis
