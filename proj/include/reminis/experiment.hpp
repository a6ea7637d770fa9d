#pragma once

// Experiment plumbing behind the command-line tool: config resolution, run
// and sweep drivers, artifact writers.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reminis/metrics.hpp"
#include "reminis/netsim.hpp"

namespace reminis {

/// Invalid configuration; `field()` names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A referenced input file does not exist.
class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string scenario = "custom";
  std::string trace_file;                     // Mahimahi trace; wins over synth
  std::string synth = "constant:300:60";      // see synth_from_spec
  std::string buffer = "3200";                // packets, or "inf"
  double rtt_ms = 20.0;                       // intrinsic RTT
  double duration_s = 60.0;
  int packet_size = kDefaultPacketSize;
  bool per_flow_queues = false;
  std::string controller = "reminis";         // reminis | aimd
  std::string ablation = "none";
  int flows = 1;
  double stagger_s = 0.0;                     // start gap between flows
  std::optional<double> dtt_ms;               // fixed DTT; unset = multiplier
  double dtt_multiplier = 1.5;
  std::vector<std::uint64_t> seeds{1};
  double warmup_s = 5.0;
  double bin_ms = 100.0;
  std::filesystem::path output_dir;           // empty = <root>/<scenario>
};

struct ResolvedExperiment {
  SimConfig sim;
  std::vector<FlowSpec> flows;
  TraceSchedule trace;
  double dtt_s = 0.0;  // DTT used for D3, resolved against the intrinsic RTT
};

/// Throws ConfigError or MissingInputError.
ResolvedExperiment resolve(const ExperimentConfig& config, std::uint64_t seed);

Ablation parse_ablation(const std::string& name);
std::string to_string(Ablation ablation);

/// Output root: $REMINIS_OUT_ROOT if set, else "results".
std::filesystem::path output_root();
std::filesystem::path output_dir(const ExperimentConfig& config);

struct RunResult {
  std::uint64_t seed = 0;
  ExperimentLog log;
  std::optional<MetricsSummary> summary;
  double dtt_s = 0.0;
};

RunResult run_once(const ExperimentConfig& config, std::uint64_t seed);

/// Writes <dir>/timeseries.csv and <dir>/summary.json, each atomically.
void write_run_artifacts(const std::filesystem::path& dir,
                         const ExperimentConfig& config,
                         const RunResult& result);

/// Called once per finished run, never concurrently.
using RunObserver = std::function<void(const RunResult&)>;

/// One run per seed, artifacts under output_dir(config)/seed-<n>. Returns
/// the summaries in seed order; logs are dropped once observed.
std::vector<std::optional<MetricsSummary>> run_seeds(
    const ExperimentConfig& config, int jobs = 1,
    const RunObserver& observe = {});

enum class SweepAxis { kBuffer, kDtt, kIntrinsicRtt };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

/// Applies one sweep value. Intrinsic-RTT sweeps also set DTT to 1.5x the
/// value and the buffer to one BDP at the trace's mean rate.
ExperimentConfig apply_sweep_value(ExperimentConfig config, SweepAxis axis,
                                   double value);

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  std::optional<MetricsSummary> summary;
};

/// Runs every (value, seed) pair, in parallel when jobs > 1, and writes
/// <output_dir>/sweep.csv. Rows come back in (value, seed) order.
std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            const std::vector<double>& values, int jobs = 1);

/// Defaults for the three-flow fairness scenario: 30 s gaps, 120 s run.
ExperimentConfig fairness_preset(ExperimentConfig base);

/// Jain index over [duration - 30 s, duration) per seed, written to
/// <output_dir>/fairness.csv next to the per-seed run directories.
std::vector<double> fairness(const ExperimentConfig& config, int jobs = 1);

// CSV with RFC-4180 quoting.
std::string csv_escape(const std::string& field);
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

inline const std::vector<std::string>& timeseries_columns() {
  static const std::vector<std::string> cols{
      "t_s",          "flow_id",  "throughput_mbps",
      "rtt_ms_avg",   "queuing_delay_ms_avg", "cwnd_pkts",
      "zone",         "guardian_multiplier",  "mu"};
  return cols;
}

void write_timeseries_csv(std::ostream& out,
                          const std::vector<TimeseriesRow>& rows);

/// Writes `content` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

struct TheoryCheck {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Lemma and bound validations. `tolerance` scales the lemma checks.
std::vector<TheoryCheck> theory_checks(double tolerance = 0.01,
                                       std::int64_t draws = 1'000'000,
                                       std::uint64_t seed = 1);

}  // namespace reminis
