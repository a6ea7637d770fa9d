#include "reminis/theory.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "reminis/guardian.hpp"

namespace reminis::theory {

LinkModel LinkModel::from_link(double bw_pps, double mrtt_s) {
  if (!(bw_pps > 0.0) || !(mrtt_s > 0.0)) {
    throw std::invalid_argument("link bandwidth and mRTT must be positive");
  }
  LinkModel m;
  m.bw_pps = bw_pps;
  m.mrtt_s = mrtt_s;
  m.w1 = bw_pps * mrtt_s;
  m.w2 = 2.0 * m.w1;
  m.q_th_s = mrtt_s;
  return m;
}

LinkModel LinkModel::from_rate(double rate_mbps, double mrtt_s, int packet_size) {
  return from_link(rate_mbps * 1e6 / (packet_size * 8.0), mrtt_s);
}

double expected_sigmoid(double mu, double sigma2) {
  if (sigma2 < 0.0) throw std::invalid_argument("sigma2 must be >= 0");
  return sigmoid(mu / std::sqrt(1.0 + std::numbers::pi * sigma2 / 8.0));
}

namespace {

template <typename F>
double mc_mean(double mu, double sigma2, std::int64_t n_draws,
               std::uint64_t seed, F f) {
  if (sigma2 < 0.0) throw std::invalid_argument("sigma2 must be >= 0");
  if (n_draws <= 0) throw std::invalid_argument("n_draws must be positive");
  Rng rng(seed);
  std::normal_distribution<double> gaussian(mu, std::sqrt(sigma2));
  // Kahan summation keeps 10^6-draw means stable to well below 1e-9.
  double sum = 0.0;
  double carry = 0.0;
  for (std::int64_t i = 0; i < n_draws; ++i) {
    const double x = sigma2 == 0.0 ? mu : gaussian(rng);
    const double y = f(x) - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(n_draws);
}

}  // namespace

double mc_expected_sigmoid(double mu, double sigma2, std::int64_t n_draws,
                           std::uint64_t seed) {
  return mc_mean(mu, sigma2, n_draws, seed, [](double x) { return sigmoid(x); });
}

double mc_expected_nde_multiplier(double mu, double sigma2,
                                  std::int64_t n_draws, std::uint64_t seed) {
  if (n_draws < 10'000) throw std::invalid_argument("n_draws must be >= 10^4");
  return mc_mean(mu, sigma2, n_draws, seed,
                 [](double x) { return std::exp2(sigmoid(x)); });
}

double linearized_nde_multiplier(double mu, double sigma2) {
  return 1.0 + std::numbers::ln2 * expected_sigmoid(mu, sigma2);
}

double steady_state_delay_bound(const LinkModel& model) {
  const double x = (std::log(4.0) - 1.0) / (2.0 * model.w1);
  return (1.0 + sigmoid(x) * std::numbers::ln2) * model.q_th_s;
}

double rampup_bound(double w1) {
  if (!(w1 >= 1.0)) throw std::invalid_argument("w1 must be >= 1");
  return 4.0 * std::log(3.0 * w1);
}

int rampup_recurrence_sis(double w1, double growth) {
  if (!(growth > 1.0)) throw std::invalid_argument("growth must be > 1");
  double cwnd = 0.0;
  int n = 1;
  while (cwnd < w1) {
    cwnd = growth * (cwnd + 1.0);
    ++n;
  }
  return n;
}

}  // namespace reminis::theory
