#include "reminis/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace reminis {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view token, std::string_view what) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("bad " + std::string(what) + " '" +
                                std::string(token) + "'");
  }
  return value;
}

// Opportunity count and millisecond timestamps (relative to the segment
// start) for one constant-rate segment. Opportunity i sits at
// ceil((i + 1) / pps) in milliseconds.
std::vector<std::int64_t> constant_segment(double rate_mbps, double duration_s,
                                           int packet_size) {
  if (!(rate_mbps > 0.0)) {
    throw std::invalid_argument("rate must be positive");
  }
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("duration must be positive");
  }
  if (packet_size <= 0) {
    throw std::invalid_argument("packet_size must be positive");
  }
  const long double pps =
      static_cast<long double>(rate_mbps) * 1e6L / (packet_size * 8.0L);
  const auto count =
      static_cast<std::int64_t>(std::floor(pps * duration_s + 1e-9L));
  if (count <= 0) {
    throw std::invalid_argument("rate " + std::to_string(rate_mbps) +
                                " Mbps yields no delivery opportunity in " +
                                std::to_string(duration_s) + " s");
  }
  std::vector<std::int64_t> ts;
  ts.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const long double ms = static_cast<long double>(i + 1) * 1000.0L / pps;
    ts.push_back(static_cast<std::int64_t>(std::ceil(ms - 1e-9L)));
  }
  return ts;
}

std::int64_t duration_ms(double duration_s) {
  return static_cast<std::int64_t>(std::llround(duration_s * 1000.0));
}

}  // namespace

TraceSchedule::TraceSchedule(std::vector<std::int64_t> timestamps_ms,
                             std::int64_t loop_ms)
    : timestamps_ms_(std::move(timestamps_ms)), loop_ms_(loop_ms) {
  if (timestamps_ms_.empty()) {
    throw std::invalid_argument("trace has no delivery opportunities");
  }
  if (timestamps_ms_.front() < 0) {
    throw std::invalid_argument("trace timestamps must be nonnegative");
  }
  if (!std::is_sorted(timestamps_ms_.begin(), timestamps_ms_.end())) {
    throw std::invalid_argument("trace timestamps must be nondecreasing");
  }
  if (loop_ms_ <= 0 || loop_ms_ < timestamps_ms_.back()) {
    throw std::invalid_argument(
        "trace loop length must be positive and cover the last timestamp");
  }

  opportunities_.reserve(timestamps_ms_.size());
  for (std::size_t i = 0; i < timestamps_ms_.size();) {
    std::size_t j = i;
    while (j < timestamps_ms_.size() && timestamps_ms_[j] == timestamps_ms_[i]) {
      ++j;
    }
    const auto burst = static_cast<std::int64_t>(j - i);
    for (std::int64_t k = 0; k < burst; ++k) {
      opportunities_.emplace_back(timestamps_ms_[i] * 1000 + k * 1000 / burst);
    }
    i = j;
  }
}

TraceSchedule TraceSchedule::parse(std::string_view text) {
  std::vector<std::int64_t> ts;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos
                                          ? std::string_view::npos
                                          : nl - pos);
    ++line_no;
    const auto line = trim(raw);
    if (!line.empty()) {
      std::int64_t value = 0;
      const auto* end = line.data() + line.size();
      const auto [ptr, ec] = std::from_chars(line.data(), end, value);
      if (ec != std::errc{} || ptr != end || value < 0) {
        throw TraceParseError(TraceParseError::Kind::kNotInteger, line_no,
                              "line " + std::to_string(line_no) +
                                  ": expected a nonnegative integer "
                                  "millisecond, got '" +
                                  std::string(line) + "'");
      }
      if (!ts.empty() && value < ts.back()) {
        throw TraceParseError(TraceParseError::Kind::kDecreasing, line_no,
                              "line " + std::to_string(line_no) +
                                  ": timestamp " + std::to_string(value) +
                                  " is earlier than " +
                                  std::to_string(ts.back()));
      }
      ts.push_back(value);
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (ts.empty()) {
    throw TraceParseError(TraceParseError::Kind::kEmpty, line_no,
                          "trace has no delivery opportunities");
  }
  if (ts.back() == 0) {
    throw TraceParseError(TraceParseError::Kind::kZeroLength, line_no,
                          "trace must end after millisecond 0");
  }
  const auto loop = ts.back();
  return TraceSchedule(std::move(ts), loop);
}

TraceSchedule TraceSchedule::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::filesystem::filesystem_error(
        "cannot open trace", path,
        std::make_error_code(std::errc::no_such_file_or_directory));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

TraceSchedule TraceSchedule::synth_constant(double rate_mbps, double duration_s,
                                            int packet_size) {
  auto ts = constant_segment(rate_mbps, duration_s, packet_size);
  const auto loop = std::max(duration_ms(duration_s), ts.back());
  return TraceSchedule(std::move(ts), loop);
}

TraceSchedule TraceSchedule::synth_step(const std::vector<RateSegment>& segments,
                                        int packet_size) {
  if (segments.empty()) {
    throw std::invalid_argument("step trace needs at least one segment");
  }
  std::vector<std::int64_t> ts;
  std::int64_t offset = 0;
  for (const auto& seg : segments) {
    for (auto t : constant_segment(seg.rate_mbps, seg.duration_s, packet_size)) {
      ts.push_back(offset + t);
    }
    offset += duration_ms(seg.duration_s);
  }
  const auto loop = std::max(offset, ts.back());
  return TraceSchedule(std::move(ts), loop);
}

std::string TraceSchedule::render() const {
  std::string out;
  out.reserve(timestamps_ms_.size() * 6);
  for (auto t : timestamps_ms_) {
    out += std::to_string(t);
    out += '\n';
  }
  return out;
}

std::int64_t TraceSchedule::count_before(SimTime t) const {
  const std::int64_t n = static_cast<std::int64_t>(opportunities_.size());
  const std::int64_t loop = loop_length().count();
  const std::int64_t first = opportunities_.front().count();
  const std::int64_t last = opportunities_.back().count();
  const std::int64_t target = t.count();
  if (target <= first) return 0;

  // Loops whose every opportunity lies before `target`.
  std::int64_t full = 0;
  if (target > last) full = (target - last + loop - 1) / loop;

  std::int64_t total = full * n;
  for (std::int64_t k = full; k * loop + first < target; ++k) {
    const SimTime local{target - k * loop};
    total += std::lower_bound(opportunities_.begin(), opportunities_.end(),
                              local) -
             opportunities_.begin();
  }
  return total;
}

std::int64_t TraceSchedule::count_between(SimTime t0, SimTime t1) const {
  if (t1 < t0) throw std::invalid_argument("count_between: t1 < t0");
  return count_before(t1) - count_before(t0);
}

SimTime TraceSchedule::opportunity(std::int64_t k) const {
  const std::int64_t n = static_cast<std::int64_t>(opportunities_.size());
  return loop_length() * (k / n) + opportunities_[static_cast<std::size_t>(k % n)];
}

double TraceSchedule::mean_rate_mbps(int packet_size) const {
  return static_cast<double>(size()) * packet_size * 8.0 /
         (static_cast<double>(loop_ms_) * 1e-3) / 1e6;
}

TraceSchedule synth_from_spec(std::string_view spec, int packet_size) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("synthetic trace spec needs a kind: '" +
                                std::string(spec) + "'");
  }
  const auto kind = spec.substr(0, colon);
  const auto rest = spec.substr(colon + 1);
  if (kind == "constant") {
    const auto sep = rest.find(':');
    if (sep == std::string_view::npos) {
      throw std::invalid_argument("expected constant:<mbps>:<seconds>");
    }
    return TraceSchedule::synth_constant(
        parse_double(rest.substr(0, sep), "rate"),
        parse_double(rest.substr(sep + 1), "duration"), packet_size);
  }
  if (kind == "step") {
    std::vector<RateSegment> segments;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const auto item = rest.substr(pos, comma == std::string_view::npos
                                             ? std::string_view::npos
                                             : comma - pos);
      const auto x = item.find('x');
      if (x == std::string_view::npos) {
        throw std::invalid_argument("expected <mbps>x<seconds>, got '" +
                                    std::string(item) + "'");
      }
      segments.push_back({parse_double(item.substr(0, x), "rate"),
                          parse_double(item.substr(x + 1), "duration")});
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return TraceSchedule::synth_step(segments, packet_size);
  }
  throw std::invalid_argument("unknown synthetic trace kind '" +
                              std::string(kind) + "'");
}

}  // namespace reminis
