#pragma once

// Closed forms from the convergence analysis of the Guardian and the
// Monte-Carlo estimators used to check them.

#include <cstdint>

namespace reminis::theory {

/// Fixed-capacity link under the steady-state analysis assumptions:
/// DTT = 2 x mRTT, so the queuing-delay target q_th equals mRTT.
struct LinkModel {
  double bw_pps = 0.0;
  double mrtt_s = 0.0;
  double w1 = 0.0;  // BDP in packets
  double w2 = 0.0;  // 2 x w1
  double q_th_s = 0.0;

  static LinkModel from_link(double bw_pps, double mrtt_s);
  static LinkModel from_rate(double rate_mbps, double mrtt_s,
                             int packet_size = 1500);
};

/// Probit approximation of E[S(x)], x ~ N(mu, sigma2):
/// S(mu / sqrt(1 + pi * sigma2 / 8)). Exact only for mu = 0 or sigma2 = 0.
double expected_sigmoid(double mu, double sigma2);

/// Monte-Carlo mean of S(x), x ~ N(mu, sigma2).
double mc_expected_sigmoid(double mu, double sigma2, std::int64_t n_draws,
                           std::uint64_t seed);

/// Monte-Carlo mean of the exploration multiplier 2^S(x), x ~ N(mu, sigma2).
/// Requires n_draws >= 10^4.
double mc_expected_nde_multiplier(double mu, double sigma2,
                                  std::int64_t n_draws, std::uint64_t seed);

/// First-order expansion 1 + ln2 * E[S(x)] of E[2^S(x)], with E[S(x)] from
/// the probit approximation. This is the value the ramp-up recurrence uses.
double linearized_nde_multiplier(double mu, double sigma2);

/// Steady-state queuing-delay bound (1 + S((ln4 - 1) / (2 BDP)) ln2) q_th.
double steady_state_delay_bound(const LinkModel& model);

/// Ramp-up bound 4 ln(3 w1) on the number of SIs needed to reach w1.
double rampup_bound(double w1);

/// SI index n at which cwnd_n = growth * (cwnd_{n-1} + 1), cwnd_1 = 0,
/// first reaches w1.
int rampup_recurrence_sis(double w1, double growth = 1.5);

}  // namespace reminis::theory
