#include <doctest.h>

#include <algorithm>
#include <random>

#include "reminis/metrics.hpp"

using namespace reminis;
using namespace std::chrono_literals;

namespace {

ExperimentLog empty_log(SimTime duration) {
  ExperimentLog log;
  log.config.duration = duration;
  log.config.one_way_delay = 10ms;
  log.flows.push_back({});
  return log;
}

// A packet that waited `wait` in the queue and left it at `at`.
PacketRecord delivered(SimTime at, SimTime wait, std::uint32_t flow = 0) {
  PacketRecord p;
  p.flow_id = flow;
  p.delivered_at = at;
  p.enqueued_at = at - wait;
  p.sent_at = p.enqueued_at - 10ms;
  return p;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("nearest-rank percentile") {
  std::vector<double> ms;
  for (int i = 100; i >= 1; --i) ms.push_back(i);
  CHECK(nearest_rank_percentile(ms, 95) == 95.0);
  CHECK(nearest_rank_percentile(ms, 50) == 50.0);
  CHECK(nearest_rank_percentile(ms, 100) == 100.0);
  CHECK(nearest_rank_percentile({7.0}, 1) == 7.0);
  CHECK_THROWS_AS(nearest_rank_percentile({}, 50), std::invalid_argument);
  CHECK_THROWS_AS(nearest_rank_percentile(ms, 0), std::invalid_argument);
}

TEST_CASE("property: percentile matches a full sort") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 200)(gen);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = std::uniform_real_distribution<double>(0, 1)(gen);
    const double p = std::uniform_real_distribution<double>(0.5, 100)(gen);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::size_t rank = 1;
    while (static_cast<double>(rank) < p / 100.0 * n) ++rank;
    REQUIRE(nearest_rank_percentile(v, p) == sorted[rank - 1]);
  }
}

TEST_CASE("jain index") {
  CHECK(jain_index(std::vector{5.0, 5.0, 5.0}) == doctest::Approx(1.0));
  CHECK(jain_index(std::vector{1.0, 0.0, 0.0}) == doctest::Approx(1.0 / 3.0));
  CHECK(jain_index(std::vector{2.0, 1.0}) == doctest::Approx(0.9));
  CHECK_THROWS_AS(jain_index(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(jain_index(std::vector{0.0, 0.0}), std::invalid_argument);

  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(4);
    for (auto& v : x) v = std::uniform_real_distribution<double>(0.01, 100)(gen);
    auto scaled = x;
    for (auto& v : scaled) v *= 37.5;
    REQUIRE(jain_index(scaled) == doctest::Approx(jain_index(x)));
  }
}

TEST_CASE("no queuing means zero queuing delay") {
  auto log = empty_log(1s);
  for (int i = 1; i <= 10; ++i) log.packets.push_back(delivered(i * 50ms, 0ms));
  const auto trace = TraceSchedule::synth_constant(12.0, 1.0);
  const auto s = summarize(log, trace, 0.030, SimTime{0});
  REQUIRE(s);
  CHECK(s->avg_queuing_delay_s == 0.0);
  CHECK(s->avg_delay_s == doctest::Approx(0.020));
}

TEST_CASE("d3 is delay over target") {
  auto log = empty_log(1s);
  for (int i = 1; i <= 10; ++i) log.packets.push_back(delivered(i * 50ms, 10ms));
  const auto trace = TraceSchedule::synth_constant(12.0, 1.0);
  const auto s = summarize(log, trace, 0.030, SimTime{0});
  REQUIRE(s);
  CHECK(s->avg_delay_s == doctest::Approx(0.030));
  CHECK(s->d3 == doctest::Approx(1.0));
  CHECK(s->p95_delay_s >= s->median_delay_s);
  // Ten packets against the 999 opportunities at 1..999 ms.
  CHECK(s->utilization == doctest::Approx(10.0 / 999.0));
  CHECK(s->avg_throughput_mbps == doctest::Approx(0.12));
}

TEST_CASE("an empty window is reported as such") {
  auto log = empty_log(10s);
  log.packets.push_back(delivered(2s, 0ms));
  const auto trace = TraceSchedule::synth_constant(12.0, 1.0);
  CHECK_FALSE(summarize(log, trace, 0.03, 5s).has_value());
  CHECK_FALSE(summarize(log, trace, 0.03, TimeWindow{3s, 3s}).has_value());
  CHECK(summarize(log, trace, 0.03, SimTime{0}).has_value());
}

TEST_CASE("flow filter keeps aggregate utilization") {
  auto log = empty_log(1s);
  log.flows.push_back({1});
  for (int i = 1; i <= 10; ++i) {
    log.packets.push_back(delivered(i * 50ms, 0ms, 0));
    log.packets.push_back(delivered(i * 50ms, 10ms, 1));
  }
  const auto trace = TraceSchedule::synth_constant(12.0, 1.0);
  const std::vector<std::uint32_t> only{1};
  const auto s = summarize(log, trace, 0.03, TimeWindow{SimTime{0}, 1s}, only);
  REQUIRE(s);
  CHECK(s->delivered_packets == 10);
  CHECK(s->avg_queuing_delay_s == doctest::Approx(0.010));
  CHECK(s->utilization == doctest::Approx(20.0 / 999.0));
  CHECK(s->per_flow_throughput_mbps.at(0) == doctest::Approx(0.12));
}

TEST_CASE("timeseries bins") {
  auto log = empty_log(300ms);
  for (int i = 0; i < 10; ++i) log.packets.push_back(delivered(100ms + i * 5ms, 2ms));
  const auto rows = timeseries(log, 100ms);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].throughput_mbps == 0.0);
  CHECK_FALSE(rows[0].rtt_ms_avg.has_value());
  CHECK(rows[1].throughput_mbps == doctest::Approx(1.2));
  CHECK(rows[1].rtt_ms_avg == doctest::Approx(22.0));
  CHECK(rows[1].queuing_delay_ms_avg == doctest::Approx(2.0));
  CHECK(rows[2].t_s == doctest::Approx(0.2));
  CHECK_THROWS_AS(timeseries(log, SimTime{0}), std::invalid_argument);
}

TEST_CASE("one bin spanning the run equals the summary") {
  const auto trace = TraceSchedule::synth_constant(24.0, 1.0);
  SimConfig c;
  c.duration = 3s;
  c.buffer_capacity = 100;
  const auto log = run(c, {{0, SimTime{0}, aimd_controller()}}, trace);
  const auto rows = timeseries(log, 3s);
  REQUIRE(rows.size() == 1);
  const auto s = summarize(log, trace, 0.03, SimTime{0});
  REQUIRE(s);
  CHECK(rows[0].throughput_mbps == doctest::Approx(s->avg_throughput_mbps));
  CHECK(*rows[0].rtt_ms_avg == doctest::Approx(s->avg_delay_s * 1e3));
  CHECK(s->utilization <= 1.0 + 1e-9);
}

}  // TEST_SUITE
