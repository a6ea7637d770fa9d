#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "reminis/netsim.hpp"

namespace reminis {

inline constexpr SimTime kDefaultWarmup = 5s;

/// Half-open analysis window [begin, end).
struct TimeWindow {
  SimTime begin{0};
  SimTime end{0};
};

struct MetricsSummary {
  double avg_throughput_mbps = 0.0;
  double utilization = 0.0;
  double avg_delay_s = 0.0;  // RTT
  double p95_delay_s = 0.0;
  double median_delay_s = 0.0;
  double avg_queuing_delay_s = 0.0;
  double p95_queuing_delay_s = 0.0;
  double d3 = 0.0;
  std::int64_t delivered_packets = 0;
  std::map<std::uint32_t, double> per_flow_throughput_mbps;
};

/// Metrics over packets delivered inside `window`. Returns std::nullopt when
/// nothing was delivered there. `flows` restricts delay and throughput
/// statistics to the listed flow ids (empty = all flows); utilization always
/// uses the aggregate.
std::optional<MetricsSummary> summarize(const ExperimentLog& log,
                                        const TraceSchedule& trace, double dtt,
                                        TimeWindow window,
                                        std::span<const std::uint32_t> flows = {});

/// Summary from `warmup` to the end of the run.
std::optional<MetricsSummary> summarize(const ExperimentLog& log,
                                        const TraceSchedule& trace, double dtt,
                                        SimTime warmup = kDefaultWarmup);

/// Nearest-rank percentile (p in (0, 100]) of an unsorted sample.
double nearest_rank_percentile(std::vector<double> values, double p);

/// (sum x)^2 / (n * sum x^2). Throws std::invalid_argument when empty or
/// when every value is zero.
double jain_index(std::span<const double> throughputs);

struct TimeseriesRow {
  double t_s = 0.0;  // bin start
  std::uint32_t flow_id = 0;
  double throughput_mbps = 0.0;
  std::optional<double> rtt_ms_avg;
  std::optional<double> queuing_delay_ms_avg;
  std::optional<double> cwnd_pkts;  // last sample in the bin
  std::optional<Zone> zone;         // last Guardian decision in the bin
  std::optional<double> guardian_multiplier;
  std::optional<double> mu;
};

/// Per-flow binned aggregates, ordered by (bin, flow id). Every flow gets a
/// row in every bin; bins without deliveries report zero throughput and no
/// delay.
std::vector<TimeseriesRow> timeseries(const ExperimentLog& log, SimTime bin);

}  // namespace reminis
