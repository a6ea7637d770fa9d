#include "reminis/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "reminis/theory.hpp"

namespace reminis {

namespace {

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const auto workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)),
                                               1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

TraceSchedule resolve_trace(const ExperimentConfig& config) {
  if (!config.trace_file.empty()) {
    if (!std::filesystem::exists(config.trace_file)) {
      throw MissingInputError("trace file not found: " + config.trace_file);
    }
    try {
      return TraceSchedule::load(config.trace_file);
    } catch (const TraceParseError& e) {
      throw ConfigError("trace", e.what());
    }
  }
  try {
    return synth_from_spec(config.synth, config.packet_size);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("synth", e.what());
  }
}

std::int64_t parse_buffer(const std::string& text) {
  if (text == "inf") return kInfiniteBuffer;
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || value < 1) {
    throw ConfigError("buffer", "expected a packet count >= 1 or 'inf', got '" +
                                    text + "'");
  }
  return value;
}

}  // namespace

Ablation parse_ablation(const std::string& name) {
  if (name == "none") return Ablation::kNone;
  if (name == "nde-off") return Ablation::kNdeOff;
  if (name == "ps-off") return Ablation::kPsOff;
  if (name == "cm-off") return Ablation::kCmOff;
  if (name == "ps-cm-off") return Ablation::kPsCmOff;
  if (name == "aimd-off") return Ablation::kAimdOff;
  if (name == "deterministic") return Ablation::kDeterministicExploration;
  throw ConfigError("ablation", "unknown ablation '" + name + "'");
}

std::string to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kNone: return "none";
    case Ablation::kNdeOff: return "nde-off";
    case Ablation::kPsOff: return "ps-off";
    case Ablation::kCmOff: return "cm-off";
    case Ablation::kPsCmOff: return "ps-cm-off";
    case Ablation::kAimdOff: return "aimd-off";
    case Ablation::kDeterministicExploration: return "deterministic";
  }
  return "none";
}

ResolvedExperiment resolve(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.packet_size <= 0) throw ConfigError("packet_size", "must be positive");
  if (!(config.rtt_ms > 0.0)) throw ConfigError("rtt_ms", "must be positive");
  if (!(config.duration_s > 0.0)) throw ConfigError("duration", "must be positive");
  if (config.flows < 1) throw ConfigError("flows", "need at least one flow");
  if (!(config.stagger_s >= 0.0)) throw ConfigError("stagger", "must be >= 0");
  if (!(config.warmup_s >= 0.0)) throw ConfigError("warmup", "must be >= 0");
  if (!(config.bin_ms > 0.0)) throw ConfigError("bin_ms", "must be positive");
  if (config.seeds.empty()) throw ConfigError("seeds", "need at least one seed");

  ResolvedExperiment r{SimConfig{}, {}, resolve_trace(config), 0.0};
  r.sim.buffer_capacity = parse_buffer(config.buffer);
  r.sim.one_way_delay = from_millis(config.rtt_ms / 2.0);
  r.sim.duration = from_seconds(config.duration_s);
  r.sim.packet_size = config.packet_size;
  r.sim.seed = seed;
  r.sim.per_flow_queues = config.per_flow_queues;

  GuardianConfig guardian;
  if (config.dtt_ms) {
    if (!(*config.dtt_ms > 0.0)) throw ConfigError("dtt_ms", "must be positive");
    guardian.dtt_policy = FixedDtt{*config.dtt_ms / 1000.0};
  } else {
    guardian.dtt_policy = MrttMultiplierDtt{config.dtt_multiplier};
  }
  try {
    validate(guardian);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("dtt_multiplier", e.what());
  }
  r.dtt_s = resolve_dtt(guardian, to_seconds(r.sim.intrinsic_rtt())).seconds;

  ControllerSpec controller;
  if (config.controller == "reminis") {
    controller = reminis_controller(parse_ablation(config.ablation), guardian);
  } else if (config.controller == "aimd") {
    if (config.ablation != "none") {
      throw ConfigError("ablation", "ablations apply to the reminis controller only");
    }
    controller = aimd_controller();
  } else {
    throw ConfigError("controller", "expected 'reminis' or 'aimd', got '" +
                                        config.controller + "'");
  }

  for (int i = 0; i < config.flows; ++i) {
    FlowSpec f;
    f.flow_id = static_cast<std::uint32_t>(i);
    f.start_time = from_seconds(config.stagger_s * i);
    f.controller = controller;
    if (f.start_time >= r.sim.duration) {
      throw ConfigError("stagger", "flow " + std::to_string(i) +
                                       " would start after the run ends");
    }
    r.flows.push_back(f);
  }
  try {
    validate(r.sim);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("sim", e.what());
  }
  return r;
}

std::filesystem::path output_root() {
  if (const char* env = std::getenv("REMINIS_OUT_ROOT"); env && *env) return env;
  return "results";
}

std::filesystem::path output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  return output_root() / config.scenario;
}

RunResult run_once(const ExperimentConfig& config, std::uint64_t seed) {
  auto resolved = resolve(config, seed);
  RunResult result;
  result.seed = seed;
  result.dtt_s = resolved.dtt_s;
  result.log = run(resolved.sim, resolved.flows, resolved.trace);
  result.summary = summarize(result.log, resolved.trace, resolved.dtt_s,
                             from_seconds(config.warmup_s));
  return result;
}

std::vector<std::optional<MetricsSummary>> run_seeds(
    const ExperimentConfig& config, int jobs, const RunObserver& observe) {
  resolve(config, config.seeds.front());  // fail fast on bad config
  const auto dir = output_dir(config);
  std::vector<std::optional<MetricsSummary>> summaries(config.seeds.size());
  std::mutex observe_mutex;
  parallel_for(config.seeds.size(), jobs, [&](std::size_t i) {
    const auto seed = config.seeds[i];
    const auto result = run_once(config, seed);
    write_run_artifacts(dir / ("seed-" + std::to_string(seed)), config, result);
    summaries[i] = result.summary;
    if (observe) {
      std::lock_guard lock(observe_mutex);
      observe(result);
    }
  });
  return summaries;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "buffer") return SweepAxis::kBuffer;
  if (name == "dtt") return SweepAxis::kDtt;
  if (name == "intrinsic_rtt") return SweepAxis::kIntrinsicRtt;
  throw ConfigError("axis", "expected buffer, dtt or intrinsic_rtt, got '" +
                                name + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kBuffer: return "buffer";
    case SweepAxis::kDtt: return "dtt";
    case SweepAxis::kIntrinsicRtt: return "intrinsic_rtt";
  }
  return "buffer";
}

ExperimentConfig apply_sweep_value(ExperimentConfig config, SweepAxis axis,
                                   double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError("values", "sweep values must be positive and finite");
  }
  switch (axis) {
    case SweepAxis::kBuffer:
      if (value != std::floor(value)) {
        throw ConfigError("values", "buffer sizes must be whole packets");
      }
      config.buffer = std::to_string(static_cast<std::int64_t>(value));
      break;
    case SweepAxis::kDtt:
      config.dtt_ms = value;
      break;
    case SweepAxis::kIntrinsicRtt: {
      config.rtt_ms = value;
      config.dtt_ms = 1.5 * value;
      const auto trace = resolve_trace(config);
      const double pps = trace.mean_rate_mbps(config.packet_size) * 1e6 /
                         (config.packet_size * 8.0);
      const auto bdp = std::max<std::int64_t>(
          1, std::llround(pps * value / 1000.0));
      config.buffer = std::to_string(bdp);
      break;
    }
  }
  return config;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void append_summary_fields(std::ostringstream& out,
                           const std::optional<MetricsSummary>& s) {
  if (!s) {
    out << ",,,,,,,,,";
    return;
  }
  out << ',' << fmt(s->avg_throughput_mbps) << ',' << fmt(s->utilization) << ','
      << fmt(s->avg_delay_s * 1e3) << ',' << fmt(s->p95_delay_s * 1e3) << ','
      << fmt(s->median_delay_s * 1e3) << ','
      << fmt(s->avg_queuing_delay_s * 1e3) << ','
      << fmt(s->p95_queuing_delay_s * 1e3) << ',' << fmt(s->d3) << ','
      << s->delivered_packets;
}

constexpr const char* kSummaryColumns =
    "avg_throughput_mbps,utilization,avg_rtt_ms,p95_rtt_ms,median_rtt_ms,"
    "avg_queuing_delay_ms,p95_queuing_delay_ms,d3,delivered_packets";

}  // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            const std::vector<double>& values, int jobs) {
  if (values.empty()) throw ConfigError("values", "need at least one value");
  std::vector<ExperimentConfig> variants;
  for (double v : values) {
    variants.push_back(apply_sweep_value(config, axis, v));
    resolve(variants.back(), config.seeds.front());
  }

  std::vector<SweepRow> rows(values.size() * config.seeds.size());
  parallel_for(rows.size(), jobs, [&](std::size_t k) {
    const auto vi = k / config.seeds.size();
    const auto seed = config.seeds[k % config.seeds.size()];
    auto result = run_once(variants[vi], seed);
    rows[k] = SweepRow{values[vi], seed, std::move(result.summary)};
  });

  std::ostringstream csv;
  csv << "axis,value,seed," << kSummaryColumns << '\n';
  for (const auto& row : rows) {
    csv << to_string(axis) << ',' << fmt(row.value) << ',' << row.seed;
    append_summary_fields(csv, row.summary);
    csv << '\n';
  }
  const auto dir = output_dir(config);
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "sweep.csv", csv.str());
  return rows;
}

ExperimentConfig fairness_preset(ExperimentConfig base) {
  if (base.scenario == "custom") base.scenario = "fairness";
  base.flows = 3;
  base.stagger_s = 30.0;
  base.duration_s = 120.0;
  return base;
}

std::vector<double> fairness(const ExperimentConfig& config, int jobs) {
  constexpr double kTail = 30.0;
  if (config.duration_s <= kTail) {
    throw ConfigError("duration", "fairness needs a run longer than 30 s");
  }
  std::vector<double> jain(config.seeds.size(), 0.0);
  std::vector<std::vector<double>> shares(config.seeds.size());
  run_seeds(config, jobs, [&](const RunResult& r) {
    const auto i = static_cast<std::size_t>(
        std::find(config.seeds.begin(), config.seeds.end(), r.seed) -
        config.seeds.begin());
    const auto trace = resolve_trace(config);
    const TimeWindow tail{from_seconds(config.duration_s - kTail),
                          from_seconds(config.duration_s)};
    const auto s = summarize(r.log, trace, r.dtt_s, tail);
    if (!s) throw std::runtime_error("no deliveries in the fairness window");
    for (const auto& [id, mbps] : s->per_flow_throughput_mbps) shares[i].push_back(mbps);
    jain[i] = jain_index(shares[i]);
  });

  std::ostringstream csv;
  csv << "seed,jain_index";
  for (int f = 0; f < config.flows; ++f) csv << ",flow" << f << "_mbps";
  csv << '\n';
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    csv << config.seeds[i] << ',' << fmt(jain[i]);
    for (double x : shares[i]) csv << ',' << fmt(x);
    csv << '\n';
  }
  write_file_atomic(output_dir(config) / "fairness.csv", csv.str());
  return jain;
}

std::vector<TheoryCheck> theory_checks(double tolerance, std::int64_t draws,
                                       std::uint64_t seed) {
  std::vector<TheoryCheck> checks;
  const auto within = [&](std::string name, double value, double expected,
                          double tol) {
    checks.push_back({std::move(name), value, expected, tol,
                      std::abs(value - expected) <= tol});
  };

  std::uint64_t grid_seed = seed;
  for (double mu : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    for (double s2 : {0.05, 0.25, 1.0}) {
      within("expected_sigmoid mu=" + fmt(mu) + " sigma2=" + fmt(s2),
             theory::expected_sigmoid(mu, s2),
             theory::mc_expected_sigmoid(mu, s2, draws, grid_seed++), tolerance);
    }
  }
  within("nde_multiplier_mc mu=1 sigma2=0.25",
         theory::mc_expected_nde_multiplier(1.0, 0.25, draws, seed), 1.5,
         tolerance);
  within("nde_multiplier_linearized mu=1 sigma2=0.25",
         theory::linearized_nde_multiplier(1.0, 0.25), 1.5, tolerance);

  // Reference values evaluated by hand from the closed forms.
  const auto link = theory::LinkModel::from_link(25'000.0, 0.020);
  within("steady_state_delay_bound w1=500 q_th=20ms [s]",
         theory::steady_state_delay_bound(link), 0.0269328, 1e-6);
  within("rampup_bound w1=500", theory::rampup_bound(500.0), 29.2529, 1e-3);
  const double n = theory::rampup_recurrence_sis(500.0);
  checks.push_back({"rampup_recurrence_sis w1=500 <= rampup_bound", n,
                    theory::rampup_bound(500.0), 0.0,
                    n <= theory::rampup_bound(500.0)});
  return checks;
}

}  // namespace reminis
