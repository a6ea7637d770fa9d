#pragma once

// The Guardian: once per sampling interval (SI) it infers the network
// condition from the mean RTT of the interval and its derivative, then
// scales the congestion window through exactly one of
//   NDE  non-deterministic exploration   (Zone 1, multiplier in (1, 2))
//   PS   proactive slowdown              (Zone 2, multiplier in (0, 1])
//   CM   catastrophe mitigation          (Zone 3, multiplier in (0, 0.5))

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "reminis/aimd.hpp"

namespace reminis {

using Rng = std::mt19937_64;

/// DTT given directly by the application, in seconds.
struct FixedDtt {
  double seconds = 0.0;
};

/// DTT derived from the running minimum RTT.
struct MrttMultiplierDtt {
  double multiplier = 1.5;
};

using DttPolicy = std::variant<MrttMultiplierDtt, FixedDtt>;

enum class ExplorationMode {
  kStochastic,     // sample x ~ N(mu, sigma^2)
  kDeterministic,  // use mu itself instead of a sample
  kOff,
};

struct GuardianConfig {
  DttPolicy dtt_policy = MrttMultiplierDtt{};
  double cwnd_floor = kDefaultCwndFloor;
  std::uint64_t rng_seed = 1;
  ExplorationMode exploration = ExplorationMode::kStochastic;
  bool proactive_slowdown = true;
  bool catastrophe_mitigation = true;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const GuardianConfig& config);

struct ResolvedDtt {
  double seconds = 0.0;
  bool raised = false;  // fixed DTT was below 1.1 x mRTT and got lifted
};

ResolvedDtt resolve_dtt(const GuardianConfig& config, double mrtt);

/// Running minimum RTT plus the samples of the current SI.
class RttTracker {
 public:
  void record(double rtt_seconds);

  bool has_mrtt() const { return has_mrtt_; }
  double mrtt() const { return mrtt_; }

  std::span<const double> si_samples() const { return samples_; }
  std::optional<double> si_mean() const;
  void clear_si() { samples_.clear(); }

 private:
  bool has_mrtt_ = false;
  double mrtt_ = 0.0;
  std::vector<double> samples_;
};

enum class Zone { kZone1, kZone2, kZone3, kNeutral };

enum class AdjustmentSource { kNone, kNde, kPs, kCm };

struct CwndAdjustment {
  double multiplier = 1.0;
  AdjustmentSource source = AdjustmentSource::kNone;
};

struct GuardianState {
  double d_prev = 0.0;
  double mu = 1.0;
  double last_tick = 0.0;
  double si_length = 0.0;
};

/// Everything a single Guardian invocation observed and decided.
struct TickRecord {
  double time = 0.0;
  double d_now = 0.0;
  double derivative = 0.0;
  double mrtt = 0.0;
  double dtt = 0.0;
  double mu = 0.0;
  Zone zone = Zone::kNeutral;
  CwndAdjustment adjustment;
  double cwnd_before = 0.0;
  double cwnd_after = 0.0;
  bool empty_si = false;
  bool dtt_raised = false;
};

/// 1 at d == mrtt, 0 at d == dtt, negative beyond dtt. Not clamped.
double safe_zone(double d, double mrtt, double dtt);

double sigmoid(double x);

Zone classify_zone(double d, double derivative, double dtt);

/// Variance used for the exploration Gaussian: max(|mu| / 4, 1e-6).
double nde_variance(double mu);

/// 2^S(x) with x ~ N(mu, nde_variance(mu)).
double nde_multiplier(double mu, Rng& rng);

/// 2^S(mu): exploration driven by the Gaussian mean alone.
double deterministic_nde_multiplier(double mu);

/// 2^min(0, SafeZone(d_now + derivative * si)).
double ps_multiplier(double d_now, double derivative, double si, double mrtt,
                     double dtt);

/// 2^sz_now * 0.5.
double cm_multiplier(double sz_now);

/// One Guardian iteration. Consumes the SI samples held by `rtt`, updates
/// `state` and scales `cwnd` (never below config.cwnd_floor).
TickRecord guardian_tick(GuardianState& state, RttTracker& rtt,
                         CwndState& cwnd, double now, Rng& rng,
                         const GuardianConfig& config);

/// Owns the per-flow Guardian state bundle and its RNG.
class Guardian {
 public:
  explicit Guardian(GuardianConfig config);

  /// Starts periodic operation at `now` with d_prev = mRTT, the empty-queue
  /// delay that mu = 1 corresponds to. Samples gathered so far are discarded.
  void activate(double now, RttTracker& rtt);

  bool active() const { return active_; }
  double next_tick_time() const { return state_.last_tick + state_.si_length; }

  TickRecord tick(double now, RttTracker& rtt, CwndState& cwnd);

  const GuardianState& state() const { return state_; }
  const GuardianConfig& config() const { return config_; }

 private:
  GuardianConfig config_;
  GuardianState state_;
  Rng rng_;
  bool active_ = false;
};

std::string_view to_string(Zone zone);
std::string_view to_string(AdjustmentSource source);

}  // namespace reminis
