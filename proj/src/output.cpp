#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <thread>

#include <json.hpp>

#include "reminis/experiment.hpp"

namespace reminis {

namespace {

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
std::string opt(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, Zone>) {
    return std::string(to_string(*v));
  } else {
    return num(*v);
  }
}

nlohmann::json to_json(const MetricsSummary& s) {
  nlohmann::json per_flow = nlohmann::json::object();
  for (const auto& [id, mbps] : s.per_flow_throughput_mbps) {
    per_flow[std::to_string(id)] = mbps;
  }
  return {
      {"avg_throughput_mbps", s.avg_throughput_mbps},
      {"utilization", s.utilization},
      {"avg_delay_s", s.avg_delay_s},
      {"p95_delay_s", s.p95_delay_s},
      {"median_delay_s", s.median_delay_s},
      {"avg_queuing_delay_s", s.avg_queuing_delay_s},
      {"p95_queuing_delay_s", s.p95_queuing_delay_s},
      {"d3", s.d3},
      {"delivered_packets", s.delivered_packets},
      {"per_flow_throughput_mbps", per_flow},
  };
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = {
      {"scenario", c.scenario},
      {"trace_file", c.trace_file},
      {"synth", c.synth},
      {"buffer", c.buffer},
      {"rtt_ms", c.rtt_ms},
      {"duration_s", c.duration_s},
      {"packet_size", c.packet_size},
      {"per_flow_queues", c.per_flow_queues},
      {"controller", c.controller},
      {"ablation", c.ablation},
      {"flows", c.flows},
      {"stagger_s", c.stagger_s},
      {"dtt_multiplier", c.dtt_multiplier},
      {"warmup_s", c.warmup_s},
      {"bin_ms", c.bin_ms},
  };
  j["dtt_ms"] = c.dtt_ms ? nlohmann::json(*c.dtt_ms) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"': quoted = true; break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        break;
      case '\r': break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        any = false;
        break;
      default: field += c;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_timeseries_csv(std::ostream& out,
                          const std::vector<TimeseriesRow>& rows) {
  const auto& cols = timeseries_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << csv_escape(cols[i]);
  }
  out << '\n';
  for (const auto& r : rows) {
    out << num(r.t_s) << ',' << r.flow_id << ',' << num(r.throughput_mbps) << ','
        << opt(r.rtt_ms_avg) << ',' << opt(r.queuing_delay_ms_avg) << ','
        << opt(r.cwnd_pkts) << ',' << opt(r.zone) << ','
        << opt(r.guardian_multiplier) << ',' << opt(r.mu) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  auto tmp = path;
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::filesystem::filesystem_error(
          "cannot open for writing", tmp,
          std::make_error_code(std::errc::io_error));
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::filesystem::filesystem_error(
          "write failed", tmp, std::make_error_code(std::errc::io_error));
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_run_artifacts(const std::filesystem::path& dir,
                         const ExperimentConfig& config,
                         const RunResult& result) {
  std::filesystem::create_directories(dir);

  std::ostringstream csv;
  write_timeseries_csv(csv, timeseries(result.log, from_millis(config.bin_ms)));
  write_file_atomic(dir / "timeseries.csv", csv.str());

  nlohmann::json flows = nlohmann::json::array();
  for (const auto& f : result.log.flows) {
    flows.push_back({
        {"flow_id", f.flow_id},
        {"sent", f.sent},
        {"delivered", f.delivered},
        {"dropped", f.dropped},
        {"loss_events", f.loss_events},
        {"stall_timeouts", f.stall_timeouts},
        {"guardian_activated_s", f.guardian_activated_at == kNever
                                     ? nlohmann::json(nullptr)
                                     : nlohmann::json(to_seconds(f.guardian_activated_at))},
    });
  }
  const auto& acc = result.log.final_accounting;
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(fingerprint(result.log)));

  nlohmann::json j = {
      {"seed", result.seed},
      {"dtt_s", result.dtt_s},
      {"summary", result.summary ? to_json(*result.summary) : nlohmann::json(nullptr)},
      {"config", to_json(config)},
      {"flows", flows},
      {"opportunities_used", result.log.opportunities_used},
      {"opportunities_wasted", result.log.opportunities_wasted},
      {"max_queue_length", result.log.max_queue_length},
      {"conservation",
       {{"sent", acc.sent},
        {"delivered", acc.delivered},
        {"dropped", acc.dropped},
        {"in_queue", acc.in_queue},
        {"in_flight", acc.in_flight},
        {"holds", acc.holds()}}},
      {"fingerprint", digest},
  };
  write_file_atomic(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace reminis
