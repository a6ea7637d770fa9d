#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "reminis/netsim.hpp"
#include "reminis/trace.hpp"

using namespace reminis;
using namespace std::chrono_literals;

TEST_SUITE("trace") {

TEST_CASE("parse a three-line trace") {
  const auto t = TraceSchedule::parse("1\n2\n3");
  CHECK(t.size() == 3);
  CHECK(t.loop_ms() == 3);
  CHECK(t.mean_rate_mbps() == doctest::Approx(12.0));
}

TEST_CASE("repeated timestamps are a burst spread over the millisecond") {
  const auto t = TraceSchedule::parse("5\n5\n5\n");
  REQUIRE(t.size() == 3);
  const auto ops = t.opportunities();
  CHECK(ops[0] == 5000us);
  CHECK(ops[1] == 5333us);
  CHECK(ops[2] == 5666us);
}

TEST_CASE("parse errors carry the line") {
  try {
    TraceSchedule::parse("2\n1\n");
    FAIL("expected a parse error");
  } catch (const TraceParseError& e) {
    CHECK(e.kind() == TraceParseError::Kind::kDecreasing);
    CHECK(e.line() == 2);
  }
  try {
    TraceSchedule::parse("1\nabc\n");
    FAIL("expected a parse error");
  } catch (const TraceParseError& e) {
    CHECK(e.kind() == TraceParseError::Kind::kNotInteger);
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(TraceSchedule::parse("\n\n"), TraceParseError);
  CHECK_THROWS_AS(TraceSchedule::parse("0\n0\n"), TraceParseError);
  CHECK_THROWS_AS(TraceSchedule::parse("-4\n"), TraceParseError);
}

TEST_CASE("blank lines and CRLF are tolerated") {
  const auto t = TraceSchedule::parse("1\r\n\r\n2\r\n");
  CHECK(t.size() == 2);
  CHECK(t.loop_ms() == 2);
}

TEST_CASE("constant synthesis") {
  CHECK(TraceSchedule::synth_constant(12.0, 1.0).size() == 1000);
  CHECK(TraceSchedule::synth_constant(720.0, 1.0).size() == 60000);
  CHECK(TraceSchedule::synth_constant(0.012, 1.0).size() == 1);
  CHECK_THROWS_AS(TraceSchedule::synth_constant(0.001, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TraceSchedule::synth_constant(-5.0, 1.0), std::invalid_argument);

  const auto t = TraceSchedule::synth_constant(300.0, 1.0);
  CHECK(t.loop_ms() == 1000);
  CHECK(t.mean_rate_mbps() == doctest::Approx(300.0));
  // 25 opportunities per millisecond, no implicit one at t = 0.
  CHECK(t.count_between(0us, 1ms) == 0);
  CHECK(t.count_between(1ms, 2ms) == 25);
}

TEST_CASE("step synthesis") {
  const auto up = TraceSchedule::synth_step({{300, 20}, {600, 20}});
  CHECK(up.loop_ms() == 40'000);
  CHECK(up.count_between(1s, 2s) == 25'000);
  CHECK(up.count_between(21s, 22s) == 50'000);

  const auto single = TraceSchedule::synth_step({{100, 1}});
  CHECK(single == TraceSchedule::synth_constant(100, 1));

  const auto down = TraceSchedule::synth_step({{720, 20}, {100, 20}});
  CHECK(down.count_between(19s, 20s) == 60'000);
  // Millisecond 20000 still carries the last 720 Mbps burst.
  CHECK(down.count_between(20s, 21s) == 8'385);
  CHECK(down.count_between(21s, 22s) == 8'333);
}

TEST_CASE("synthetic spec strings") {
  CHECK(synth_from_spec("constant:12:1") == TraceSchedule::synth_constant(12, 1));
  CHECK(synth_from_spec("step:300x20,600x20") ==
        TraceSchedule::synth_step({{300, 20}, {600, 20}}));
  CHECK_THROWS_AS(synth_from_spec("constant:12"), std::invalid_argument);
  CHECK_THROWS_AS(synth_from_spec("ramp:1:2"), std::invalid_argument);
  CHECK_THROWS_AS(synth_from_spec("step:300"), std::invalid_argument);
}

TEST_CASE("capacity over half-open windows") {
  const auto t = TraceSchedule::parse("1\n2\n3");
  CHECK(capacity_delivered(t, 0us, 3ms) == 2 * 1500);
  CHECK(capacity_delivered(t, 0us, 0us) == 0);
  // Opportunities sit at 1, 2, 3 ms and then 4, 5, 6 ms of the replay, so
  // [0, 6 ms) holds five of them.
  CHECK(capacity_delivered(t, 0us, 6ms) == 5 * 1500);
  CHECK(t.count_between(1ms, 7ms) == 2 * t.size());
}

TEST_CASE("property: replay is periodic and counting is consistent") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::int64_t> ts;
    std::int64_t t = std::uniform_int_distribution<int>(0, 3)(gen);
    const int n = std::uniform_int_distribution<int>(1, 40)(gen);
    for (int i = 0; i < n; ++i) {
      t += std::uniform_int_distribution<int>(0, 4)(gen);
      ts.push_back(t);
    }
    if (ts.back() == 0) ts.back() = 1;
    const TraceSchedule trace(ts, ts.back());
    const auto loop = trace.loop_length();
    for (int q = 0; q < 500; ++q) {
      // The last millisecond's burst spills past the loop length, so windows
      // are only periodic once that first spill is behind them.
      const SimTime a{std::uniform_int_distribution<std::int64_t>(1'000, 200'000)(gen)};
      const SimTime b = a + SimTime{std::uniform_int_distribution<std::int64_t>(0, 50'000)(gen)};
      // Shifting a window by one loop never changes its count.
      REQUIRE(trace.count_between(a, b) == trace.count_between(a + loop, b + loop));
      REQUIRE(trace.count_between(a, b) >= 0);
    }
    // The cursor never runs backwards across loop boundaries.
    TraceCursor cursor(trace);
    SimTime prev{0};
    for (std::int64_t k = 0; k < 3 * static_cast<std::int64_t>(trace.size()); ++k) {
      const SimTime at = cursor.next();
      REQUIRE(at >= prev);
      prev = at;
    }
  }
}

TEST_CASE("render and parse round trip") {
  const auto t = TraceSchedule::synth_step({{12, 1}, {24, 1}});
  CHECK(TraceSchedule::parse(t.render()) == t);

  const auto path = std::filesystem::temp_directory_path() / "reminis_trace_rt.trace";
  {
    std::ofstream out(path);
    out << t.render();
  }
  CHECK(TraceSchedule::load(path) == t);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(TraceSchedule::load(path), std::filesystem::filesystem_error);
}

}  // TEST_SUITE
