#include "reminis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace reminis {

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  if (!(p > 0.0 && p <= 100.0)) {
    throw std::invalid_argument("percentile must be in (0, 100]");
  }
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

std::optional<MetricsSummary> summarize(const ExperimentLog& log,
                                        const TraceSchedule& trace, double dtt,
                                        TimeWindow window,
                                        std::span<const std::uint32_t> flows) {
  window.begin = std::max(window.begin, SimTime{0});
  window.end = std::min(window.end, log.config.duration);
  if (window.end <= window.begin) return std::nullopt;

  const auto selected = [&](std::uint32_t id) {
    return flows.empty() || std::find(flows.begin(), flows.end(), id) != flows.end();
  };

  MetricsSummary s;
  for (const auto& f : log.flows) s.per_flow_throughput_mbps[f.flow_id] = 0.0;

  std::vector<double> rtts;
  std::vector<double> queuing;
  std::int64_t all_packets = 0;
  std::unordered_map<std::uint32_t, std::int64_t> per_flow_packets;
  for (const auto& p : log.packets) {
    if (!p.delivered() || p.delivered_at < window.begin ||
        p.delivered_at >= window.end) {
      continue;
    }
    ++all_packets;
    ++per_flow_packets[p.flow_id];
    if (!selected(p.flow_id)) continue;
    rtts.push_back(to_seconds(log.rtt(p)));
    queuing.push_back(to_seconds(p.queuing_delay()));
  }
  if (rtts.empty()) return std::nullopt;

  const double span_s = to_seconds(window.end - window.begin);
  const double bits_per_packet = log.config.packet_size * 8.0;
  const auto mbps = [&](std::int64_t packets) {
    return static_cast<double>(packets) * bits_per_packet / span_s / 1e6;
  };

  s.delivered_packets = static_cast<std::int64_t>(rtts.size());
  s.avg_throughput_mbps = mbps(s.delivered_packets);
  for (const auto& [id, n] : per_flow_packets) s.per_flow_throughput_mbps[id] = mbps(n);

  const auto capacity = capacity_delivered(trace, window.begin, window.end,
                                           log.config.packet_size);
  s.utilization = capacity > 0
                      ? static_cast<double>(all_packets * log.config.packet_size) /
                            static_cast<double>(capacity)
                      : 0.0;

  const double n = static_cast<double>(rtts.size());
  s.avg_delay_s = std::accumulate(rtts.begin(), rtts.end(), 0.0) / n;
  s.avg_queuing_delay_s = std::accumulate(queuing.begin(), queuing.end(), 0.0) / n;
  s.median_delay_s = nearest_rank_percentile(rtts, 50.0);
  s.p95_delay_s = nearest_rank_percentile(rtts, 95.0);
  s.p95_queuing_delay_s = nearest_rank_percentile(std::move(queuing), 95.0);
  s.d3 = s.avg_delay_s / dtt;
  return s;
}

std::optional<MetricsSummary> summarize(const ExperimentLog& log,
                                        const TraceSchedule& trace, double dtt,
                                        SimTime warmup) {
  return summarize(log, trace, dtt, TimeWindow{warmup, log.config.duration});
}

double jain_index(std::span<const double> throughputs) {
  if (throughputs.empty()) throw std::invalid_argument("jain_index of nothing");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : throughputs) {
    if (x < 0.0) throw std::invalid_argument("negative throughput");
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0.0) throw std::invalid_argument("jain_index of all-zero shares");
  return sum * sum / (static_cast<double>(throughputs.size()) * sum_sq);
}

std::vector<TimeseriesRow> timeseries(const ExperimentLog& log, SimTime bin) {
  if (bin <= SimTime{0}) throw std::invalid_argument("bin must be positive");
  const auto bins = static_cast<std::size_t>(
      (log.config.duration.count() + bin.count() - 1) / bin.count());

  std::vector<std::uint32_t> ids;
  for (const auto& f : log.flows) ids.push_back(f.flow_id);
  std::sort(ids.begin(), ids.end());
  std::unordered_map<std::uint32_t, std::size_t> column;
  for (std::size_t i = 0; i < ids.size(); ++i) column[ids[i]] = i;

  struct Acc {
    std::int64_t packets = 0;
    double rtt_sum = 0.0;
    double queuing_sum = 0.0;
  };
  std::vector<Acc> acc(bins * ids.size());
  std::vector<TimeseriesRow> rows(bins * ids.size());
  for (std::size_t b = 0; b < bins; ++b) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto& row = rows[b * ids.size() + i];
      // Divide rather than scale by 1e-6 so bin starts print as 0.1, not
      // 0.09999999999999999.
      row.t_s = static_cast<double>((bin * static_cast<std::int64_t>(b)).count()) / 1e6;
      row.flow_id = ids[i];
    }
  }
  const auto slot = [&](SimTime t, std::uint32_t id) -> std::optional<std::size_t> {
    const auto b = static_cast<std::size_t>(t.count() / bin.count());
    if (t < SimTime{0} || b >= bins) return std::nullopt;
    return b * ids.size() + column.at(id);
  };

  for (const auto& p : log.packets) {
    if (!p.delivered()) continue;
    if (auto k = slot(p.delivered_at, p.flow_id)) {
      auto& a = acc[*k];
      ++a.packets;
      a.rtt_sum += to_millis(log.rtt(p));
      a.queuing_sum += to_millis(p.queuing_delay());
    }
  }
  for (const auto& c : log.cwnd_samples) {
    if (auto k = slot(c.t, c.flow_id)) rows[*k].cwnd_pkts = c.cwnd;
  }
  for (const auto& s : log.ticks) {
    if (auto k = slot(from_seconds(s.tick.time), s.flow_id)) {
      rows[*k].zone = s.tick.zone;
      rows[*k].guardian_multiplier = s.tick.adjustment.multiplier;
      rows[*k].mu = s.tick.mu;
    }
  }

  const double bin_s = to_seconds(bin);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& a = acc[k];
    auto& row = rows[k];
    // The last bin may be cut short by the end of the run.
    const double width =
        std::min(bin_s, to_seconds(log.config.duration) - row.t_s);
    row.throughput_mbps =
        static_cast<double>(a.packets) * log.config.packet_size * 8.0 / width / 1e6;
    if (a.packets > 0) {
      row.rtt_ms_avg = a.rtt_sum / static_cast<double>(a.packets);
      row.queuing_delay_ms_avg = a.queuing_sum / static_cast<double>(a.packets);
    }
  }
  return rows;
}

}  // namespace reminis
