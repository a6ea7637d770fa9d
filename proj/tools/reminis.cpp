// reminis: run, sweep and check Reminis experiments on the trace-driven
// bottleneck simulator.
//
// Exit codes: 0 success, 2 configuration error, 3 missing input,
// 4 theory-check failure, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reminis/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitTheory = 4;

void print_summary(std::uint64_t seed,
                   const std::optional<reminis::MetricsSummary>& s) {
  if (!s) {
    std::printf("seed %llu: no deliveries after warmup\n",
                static_cast<unsigned long long>(seed));
    return;
  }
  std::printf(
      "seed %llu: throughput %.2f Mbps, utilization %.3f, rtt avg %.2f ms "
      "p95 %.2f ms, queuing avg %.2f ms, d3 %.3f\n",
      static_cast<unsigned long long>(seed), s->avg_throughput_mbps,
      s->utilization, s->avg_delay_s * 1e3, s->p95_delay_s * 1e3,
      s->avg_queuing_delay_s * 1e3, s->d3);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reminis congestion control experiments"};
  app.set_config("--config", "", "INI/TOML file with any of the options below");
  app.require_subcommand(1);
  app.fallthrough();

  reminis::ExperimentConfig cfg;
  double dtt_ms = 0.0;
  int jobs = 1;
  std::string out_dir;

  app.add_option("--scenario", cfg.scenario, "Scenario name, used for the output directory")
      ->capture_default_str();
  app.add_option("--trace", cfg.trace_file, "Mahimahi trace file (overrides --synth)");
  app.add_option("--synth", cfg.synth,
                 "Synthetic trace: constant:<mbps>:<s> or step:<mbps>x<s>,...")
      ->capture_default_str();
  app.add_option("--buffer", cfg.buffer, "Bottleneck buffer in packets, or 'inf'")
      ->capture_default_str();
  app.add_option("--rtt-ms", cfg.rtt_ms, "Intrinsic RTT")->capture_default_str();
  app.add_option("--duration", cfg.duration_s, "Run length in seconds")
      ->capture_default_str();
  app.add_option("--packet-size", cfg.packet_size, "Bytes")->capture_default_str();
  app.add_flag("--per-flow-queues", cfg.per_flow_queues,
               "One drop-tail queue per flow, served round-robin");
  app.add_option("--controller", cfg.controller, "reminis | aimd")->capture_default_str();
  app.add_option("--ablation", cfg.ablation,
                 "none | nde-off | ps-off | cm-off | ps-cm-off | aimd-off | deterministic")
      ->capture_default_str();
  app.add_option("--flows", cfg.flows, "Number of flows")->capture_default_str();
  app.add_option("--stagger", cfg.stagger_s, "Seconds between flow starts")
      ->capture_default_str();
  auto* dtt_opt = app.add_option("--dtt-ms", dtt_ms, "Fixed DTT (default: multiplier x mRTT)");
  app.add_option("--dtt-multiplier", cfg.dtt_multiplier, "DTT as a multiple of mRTT")
      ->capture_default_str();
  app.add_option("--seeds", cfg.seeds, "Seeds, one run each")->capture_default_str();
  app.add_option("--warmup", cfg.warmup_s, "Seconds excluded from summaries")
      ->capture_default_str();
  app.add_option("--bin-ms", cfg.bin_ms, "Time-series bin width")->capture_default_str();
  app.add_option("--out", out_dir,
                 "Output directory (default: $REMINIS_OUT_ROOT or ./results, "
                 "plus the scenario name)");
  app.add_option("-j,--jobs", jobs, "Parallel runs")->capture_default_str();

  auto* run_cmd = app.add_subcommand("run", "Run the configured scenario once per seed");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one scenario across values of an axis");
  std::string axis;
  std::vector<double> values;
  sweep_cmd->add_option("--axis", axis, "buffer | dtt | intrinsic_rtt")->required();
  sweep_cmd->add_option("--values", values, "Axis values (packets or ms)")->required();

  auto* fair_cmd = app.add_subcommand("fairness", "Three flows with 30 s staggered starts");

  auto* theory_cmd = app.add_subcommand("theory-check", "Validate the closed-form results");
  double tolerance = 0.01;
  std::int64_t draws = 1'000'000;
  std::uint64_t theory_seed = 1;
  theory_cmd->add_option("--tolerance", tolerance, "Lemma tolerance")->capture_default_str();
  theory_cmd->add_option("--draws", draws, "Monte-Carlo draws")->capture_default_str();
  theory_cmd->add_option("--seed", theory_seed, "Monte-Carlo seed")->capture_default_str();

  auto* trace_cmd = app.add_subcommand("trace-gen", "Write a synthetic trace in Mahimahi format");
  std::string trace_out;
  trace_cmd->add_option("-o,--output", trace_out, "Destination file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (dtt_opt->count() > 0) cfg.dtt_ms = dtt_ms;
  if (!out_dir.empty()) cfg.output_dir = out_dir;

  try {
    if (*run_cmd) {
      const auto summaries = reminis::run_seeds(cfg, jobs);
      for (std::size_t i = 0; i < summaries.size(); ++i) {
        print_summary(cfg.seeds[i], summaries[i]);
      }
      std::cout << "artifacts: " << reminis::output_dir(cfg).string() << '\n';
    } else if (*sweep_cmd) {
      const auto rows = reminis::sweep(cfg, reminis::parse_sweep_axis(axis), values, jobs);
      for (const auto& row : rows) {
        std::printf("%s=%g ", axis.c_str(), row.value);
        print_summary(row.seed, row.summary);
      }
      std::cout << "artifacts: " << (reminis::output_dir(cfg) / "sweep.csv").string() << '\n';
    } else if (*fair_cmd) {
      const auto preset = reminis::fairness_preset(cfg);
      const auto jain = reminis::fairness(preset, jobs);
      for (std::size_t i = 0; i < jain.size(); ++i) {
        std::printf("seed %llu: jain index %.4f\n",
                    static_cast<unsigned long long>(preset.seeds[i]), jain[i]);
      }
      std::cout << "artifacts: " << reminis::output_dir(preset).string() << '\n';
    } else if (*theory_cmd) {
      bool ok = true;
      for (const auto& c : reminis::theory_checks(tolerance, draws, theory_seed)) {
        std::printf("%s  %-52s value %.6f expected %.6f tol %g\n",
                    c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.expected,
                    c.tolerance);
        ok = ok && c.pass;
      }
      return ok ? 0 : kExitTheory;
    } else if (*trace_cmd) {
      if (!cfg.trace_file.empty() && !std::filesystem::exists(cfg.trace_file)) {
        throw reminis::MissingInputError("trace file not found: " + cfg.trace_file);
      }
      const auto trace = cfg.trace_file.empty()
                             ? reminis::synth_from_spec(cfg.synth, cfg.packet_size)
                             : reminis::TraceSchedule::load(cfg.trace_file);
      reminis::write_file_atomic(trace_out, trace.render());
      std::printf("%zu opportunities, %.2f Mbps mean -> %s\n", trace.size(),
                  trace.mean_rate_mbps(cfg.packet_size), trace_out.c_str());
    }
  } catch (const reminis::MissingInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const reminis::TraceParseError& e) {
    std::cerr << "error: trace line " << e.line() << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    // ConfigError and the library's own validation errors.
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
