#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "reminis/guardian.hpp"

using namespace reminis;

namespace {

RttTracker tracker_with(double mrtt, std::initializer_list<double> si) {
  RttTracker t;
  t.record(mrtt);
  t.clear_si();
  for (double s : si) t.record(s);
  return t;
}

GuardianConfig fixed_dtt(double seconds) {
  GuardianConfig c;
  c.dtt_policy = FixedDtt{seconds};
  return c;
}

}  // namespace

TEST_SUITE("guardian") {

TEST_CASE("safe zone endpoints") {
  CHECK(safe_zone(0.020, 0.020, 0.030) == doctest::Approx(1.0));
  CHECK(safe_zone(0.030, 0.020, 0.030) == doctest::Approx(0.0));
  CHECK(safe_zone(0.040, 0.020, 0.030) == doctest::Approx(-1.0));
}

TEST_CASE("sigmoid values") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::abs(sigmoid(50.0) - 1.0) <= 1e-15);
  CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786).epsilon(1e-10));
  // Stable for large negative inputs instead of 0/0.
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(-30.0) > 0.0);
}

TEST_CASE("zone classification") {
  CHECK(classify_zone(0.025, -0.1, 0.030) == Zone::kZone1);
  CHECK(classify_zone(0.025, 0.1, 0.030) == Zone::kZone2);
  CHECK(classify_zone(0.035, -0.5, 0.030) == Zone::kZone3);
  CHECK(classify_zone(0.025, 0.0, 0.030) == Zone::kNeutral);
  CHECK(classify_zone(0.030, 0.0, 0.030) == Zone::kNeutral);  // d == DTT is not Zone 3
}

TEST_CASE("exploration multiplier") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double m = nde_multiplier(0.0, rng);
    CHECK(m > 1.0);
    CHECK(m < 2.0);
  }
  CHECK(std::abs(nde_multiplier(100.0, rng) - 2.0) < 1e-6);
  CHECK(nde_variance(1.0) == 0.25);
  CHECK(nde_variance(-2.0) == 0.5);
  CHECK(nde_variance(0.0) == 1e-6);
  CHECK(deterministic_nde_multiplier(1.0) ==
        doctest::Approx(std::exp2(0.7310585786300049)));

  SUBCASE("same seed, same draws") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(nde_multiplier(0.7, a) == nde_multiplier(0.7, b));
  }
}

TEST_CASE("proactive slowdown multiplier") {
  CHECK(ps_multiplier(0.022, 0.1, 0.020, 0.020, 0.030) == 1.0);
  CHECK(ps_multiplier(0.028, 0.2, 0.020, 0.020, 0.030) ==
        doctest::Approx(0.8705505632961241));
  CHECK(ps_multiplier(0.030, 0.5, 0.020, 0.020, 0.030) == doctest::Approx(0.5));
}

TEST_CASE("catastrophe mitigation multiplier") {
  CHECK(cm_multiplier(-1.0) == doctest::Approx(0.25));
  CHECK(cm_multiplier(-0.001) == doctest::Approx(0.49965354649522625));
  CHECK(cm_multiplier(-3.0) == doctest::Approx(0.0625));
}

TEST_CASE("DTT resolution") {
  GuardianConfig c;
  CHECK(resolve_dtt(c, 0.020).seconds == doctest::Approx(0.030));
  CHECK_FALSE(resolve_dtt(c, 0.020).raised);

  CHECK(resolve_dtt(fixed_dtt(0.040), 0.020).seconds == doctest::Approx(0.040));
  CHECK_FALSE(resolve_dtt(fixed_dtt(0.040), 0.020).raised);

  const auto low = resolve_dtt(fixed_dtt(0.010), 0.020);
  CHECK(low.seconds == doctest::Approx(0.022));
  CHECK(low.raised);
}

TEST_CASE("config validation names the field") {
  GuardianConfig c;
  c.cwnd_floor = 0.5;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("cwnd_floor"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(validate(fixed_dtt(-1.0)), doctest::Contains("dtt"),
                       std::invalid_argument);
  GuardianConfig m;
  m.dtt_policy = MrttMultiplierDtt{0.9};
  CHECK_THROWS_AS(validate(m), std::invalid_argument);
}

TEST_CASE("tick with zero derivative does nothing") {
  GuardianState s{0.020, 1.0, 0.0, 0.020};
  auto rtt = tracker_with(0.020, {0.020, 0.020});
  CwndState cwnd;
  cwnd.cwnd = 100.0;
  Rng rng(1);
  const auto rec = guardian_tick(s, rtt, cwnd, 0.020, rng, fixed_dtt(0.030));
  CHECK(rec.derivative == 0.0);
  CHECK(rec.zone == Zone::kNeutral);
  CHECK(rec.adjustment.source == AdjustmentSource::kNone);
  CHECK(cwnd.cwnd == 100.0);
  CHECK(s.mu == 1.0);
}

TEST_CASE("tick above DTT mitigates") {
  GuardianState s{0.020, 1.0, 0.0, 0.020};
  auto rtt = tracker_with(0.020, {0.034, 0.038});
  CwndState cwnd;
  cwnd.cwnd = 100.0;
  Rng rng(1);
  const auto rec = guardian_tick(s, rtt, cwnd, 0.020, rng, fixed_dtt(0.030));
  CHECK(rec.d_now == doctest::Approx(0.036));
  CHECK(rec.zone == Zone::kZone3);
  CHECK(rec.adjustment.source == AdjustmentSource::kCm);
  CHECK(rec.adjustment.multiplier == doctest::Approx(0.32987697769322355));
  CHECK(cwnd.cwnd == doctest::Approx(32.987697769322355));
}

TEST_CASE("tick with falling delay explores around the updated mean") {
  GuardianState s{0.024, 0.9, 0.0, 0.020};
  auto rtt = tracker_with(0.020, {0.022});
  CwndState cwnd;
  cwnd.cwnd = 100.0;
  Rng rng(3);
  Rng mirror(3);
  const auto rec = guardian_tick(s, rtt, cwnd, 0.020, rng, fixed_dtt(0.030));
  CHECK(rec.derivative == doctest::Approx(-0.1));
  CHECK(rec.mu == doctest::Approx(1.0));
  CHECK(rec.zone == Zone::kZone1);
  CHECK(rec.adjustment.source == AdjustmentSource::kNde);
  // Same draw as N(1, 0.25) from an identically seeded generator.
  std::normal_distribution<double> g(rec.mu, std::sqrt(0.25));
  CHECK(rec.adjustment.multiplier == doctest::Approx(std::exp2(sigmoid(g(mirror)))));
  CHECK(cwnd.cwnd == doctest::Approx(100.0 * rec.adjustment.multiplier));
}

TEST_CASE("tick with rising delay predicts the next SI") {
  GuardianState s{0.024, 1.0, 0.0, 0.020};
  auto rtt = tracker_with(0.020, {0.028});
  CwndState cwnd;
  cwnd.cwnd = 100.0;
  Rng rng(1);
  const auto rec = guardian_tick(s, rtt, cwnd, 0.020, rng, fixed_dtt(0.030));
  CHECK(rec.derivative == doctest::Approx(0.2));
  CHECK(rec.zone == Zone::kZone2);
  CHECK(rec.adjustment.multiplier == doctest::Approx(0.8705505632961241));
  CHECK(rec.mu == doctest::Approx(0.8));
}

TEST_CASE("empty SI is neutral and keeps mu") {
  GuardianState s{0.025, 0.4, 0.0, 0.020};
  auto rtt = tracker_with(0.020, {});
  CwndState cwnd;
  cwnd.cwnd = 50.0;
  Rng rng(1);
  const auto rec = guardian_tick(s, rtt, cwnd, 0.020, rng, fixed_dtt(0.030));
  CHECK(rec.empty_si);
  CHECK(rec.zone == Zone::kNeutral);
  CHECK(rec.d_now == 0.025);
  CHECK(s.mu == 0.4);
  CHECK(cwnd.cwnd == 50.0);
}

TEST_CASE("ablations silence their module") {
  GuardianConfig c = fixed_dtt(0.030);
  c.catastrophe_mitigation = false;
  GuardianState s{0.020, 1.0, 0.0, 0.020};
  auto rtt = tracker_with(0.020, {0.040});
  CwndState cwnd;
  cwnd.cwnd = 80.0;
  Rng rng(1);
  const auto rec = guardian_tick(s, rtt, cwnd, 0.020, rng, c);
  CHECK(rec.zone == Zone::kZone3);
  CHECK(rec.adjustment.source == AdjustmentSource::kNone);
  CHECK(cwnd.cwnd == 80.0);
}

TEST_CASE("cwnd never drops below the floor") {
  GuardianState s{0.020, 1.0, 0.0, 0.020};
  auto rtt = tracker_with(0.020, {0.500});
  CwndState cwnd;
  cwnd.cwnd = 3.0;
  Rng rng(1);
  guardian_tick(s, rtt, cwnd, 0.020, rng, fixed_dtt(0.030));
  CHECK(cwnd.cwnd == kDefaultCwndFloor);
}

TEST_CASE("guardian starts from the empty-queue reference") {
  Guardian g(fixed_dtt(0.040));
  RttTracker rtt;
  rtt.record(0.020);
  rtt.record(0.045);
  g.activate(1.0, rtt);
  CHECK(g.active());
  CHECK(g.state().d_prev == 0.020);
  CHECK(g.state().mu == 1.0);
  CHECK(g.next_tick_time() == doctest::Approx(1.020));
  CHECK(rtt.si_samples().empty());
}

TEST_CASE("property: multiplier ranges and safe zone identities") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> mu_dist(-20.0, 20.0);
  std::uniform_real_distribution<double> ms(1.0, 200.0);
  Rng rng(5);
  long failures = 0;
  for (int i = 0; i < 100'000; ++i) {
    const double nde = nde_multiplier(mu_dist(gen), rng);
    if (!(nde > 1.0 && nde < 2.0)) ++failures;

    const double mrtt = ms(gen) / 1e3;
    const double dtt = mrtt * (1.05 + std::uniform_real_distribution<double>(0, 3)(gen));
    const double d = ms(gen) / 1e3;
    const double der = std::uniform_real_distribution<double>(0.0, 5.0)(gen);
    const double ps = ps_multiplier(d, der, mrtt, mrtt, dtt);
    if (!(ps > 0.0 && ps <= 1.0)) ++failures;

    const double d_high = dtt + std::uniform_real_distribution<double>(1e-6, 0.2)(gen);
    const double cm = cm_multiplier(safe_zone(d_high, mrtt, dtt));
    if (!(cm > 0.0 && cm < 0.5)) ++failures;

    // Affine in d: SZ(mrtt) = 1, SZ(dtt) = 0, and equal steps give equal drops.
    if (std::abs(safe_zone(mrtt, mrtt, dtt) - 1.0) > 1e-12) ++failures;
    if (std::abs(safe_zone(dtt, mrtt, dtt)) > 1e-12) ++failures;
    const double a = safe_zone(d, mrtt, dtt) - safe_zone(d + 0.001, mrtt, dtt);
    const double b = safe_zone(d + 0.001, mrtt, dtt) - safe_zone(d + 0.002, mrtt, dtt);
    if (std::abs(a - b) > 1e-9) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("property: ticks keep cwnd at or above the floor") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> rtt_ms(20.0, 400.0);
  std::uniform_real_distribution<double> cw(1.0, 5000.0);
  Rng rng(11);
  GuardianConfig c;
  long failures = 0;
  for (int i = 0; i < 100'000; ++i) {
    GuardianState s{rtt_ms(gen) / 1e3, std::uniform_real_distribution<double>(-20, 20)(gen),
                    0.0, 0.020};
    auto rtt = tracker_with(0.020, {rtt_ms(gen) / 1e3});
    CwndState cwnd;
    cwnd.cwnd = cw(gen);
    guardian_tick(s, rtt, cwnd, 0.020, rng, c);
    if (cwnd.cwnd < c.cwnd_floor) ++failures;
  }
  CHECK(failures == 0);
}

}  // TEST_SUITE
