#include "srnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "srnn/error.hpp"

namespace srnn::data {

using compute::Array2;

namespace {

WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void set_warning_handler(WarningHandler handler) { warning_handler() = std::move(handler); }
void warn(const std::string& message) {
  if (warning_handler()) warning_handler()(message);
}

std::size_t SpeedMatrix::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), 1));
}

SpeedMatrix SpeedMatrix::slice_steps(std::size_t begin, std::size_t end) const {
  if (begin > end || end > num_steps()) throw IndexError("step range out of bounds");
  SpeedMatrix out;
  out.segment_ids = segment_ids;
  out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                        timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  const std::size_t n = num_segments(), width = end - begin;
  out.values = Array2(n, width);
  out.missing.assign(n * width, 0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t t = 0; t < width; ++t) {
      out.values(v, t) = values(v, begin + t);
      out.missing[v * width + t] = missing[v * num_steps() + begin + t];
    }
  }
  return out;
}

SpeedMatrix SpeedMatrix::reorder(const std::vector<std::string>& order) const {
  if (std::set<std::string>(order.begin(), order.end()) !=
          std::set<std::string>(segment_ids.begin(), segment_ids.end()) ||
      order.size() != segment_ids.size()) {
    throw InputError("speed data segments do not match the graph nodes");
  }
  SpeedMatrix out;
  out.segment_ids = order;
  out.timestamps = timestamps;
  out.values = Array2(order.size(), num_steps());
  out.missing.assign(order.size() * num_steps(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto src = static_cast<std::size_t>(
        std::find(segment_ids.begin(), segment_ids.end(), order[r]) - segment_ids.begin());
    for (std::size_t t = 0; t < num_steps(); ++t) {
      out.values(r, t) = values(src, t);
      out.missing[r * num_steps() + t] = missing[src * num_steps() + t];
    }
  }
  return out;
}

std::size_t slot_of(std::int64_t timestamp) {
  std::int64_t sec = timestamp % kSecondsPerDay;
  if (sec < 0) sec += kSecondsPerDay;
  return static_cast<std::size_t>(sec / kCadenceSeconds);
}

std::int64_t parse_timestamp(const std::string& raw) {
  using namespace std::chrono;
  std::string text = trim(raw);
  if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) text.pop_back();
  // YYYY-MM-DDTHH:MM[:SS]
  if (text.size() != 16 && text.size() != 19) throw FormatError("bad timestamp '" + raw + "'");
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
      (text.size() == 19 && text[16] != ':')) {
    throw FormatError("bad timestamp '" + raw + "'");
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const std::string_view v(text);
  if (!parse_int(v.substr(0, 4), y) || !parse_int(v.substr(5, 2), mo) ||
      !parse_int(v.substr(8, 2), d) || !parse_int(v.substr(11, 2), h) ||
      !parse_int(v.substr(14, 2), mi) || (text.size() == 19 && !parse_int(v.substr(17, 2), s))) {
    throw FormatError("bad timestamp '" + raw + "'");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw FormatError("bad timestamp '" + raw + "'");
  const auto days = sys_days(ymd).time_since_epoch().count();
  return static_cast<std::int64_t>(days) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(std::int64_t timestamp) {
  using namespace std::chrono;
  std::int64_t days = timestamp / kSecondsPerDay;
  std::int64_t sec = timestamp % kSecondsPerDay;
  if (sec < 0) {
    sec += kSecondsPerDay;
    days -= 1;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(sec / 3600), static_cast<int>((sec / 60) % 60),
                static_cast<int>(sec % 60));
  return buf;
}

SpeedMatrix read_speed_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  struct Cell {
    std::int64_t ts;
    std::string segment;
    std::optional<double> speed;
  };
  std::vector<Cell> cells;
  std::set<std::pair<std::int64_t, std::string>> seen;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(row);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
    if (!row.empty() && row.back() == ',') fields.emplace_back();
    if (!header_seen) {
      if (fields != std::vector<std::string>{"timestamp", "segment_id", "speed_kmh"}) {
        throw ParseError("expected header 'timestamp,segment_id,speed_kmh'", lineno);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw ParseError("expected 3 fields, got " + std::to_string(fields.size()), lineno);
    }
    Cell cell;
    try {
      cell.ts = parse_timestamp(fields[0]);
    } catch (const FormatError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (cell.ts % kCadenceSeconds != 0) {
      throw FormatError("line " + std::to_string(lineno) + ": timestamp '" + fields[0] +
                        "' is not on the 15-minute grid");
    }
    if (fields[1].empty()) throw ParseError("empty segment_id", lineno);
    cell.segment = fields[1];
    if (!fields[2].empty()) {
      double speed = 0.0;
      const auto& f = fields[2];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), speed);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(speed)) {
        throw ParseError("bad speed '" + f + "'", lineno);
      }
      if (speed < 0.0) throw ParseError("negative speed '" + f + "'", lineno);
      cell.speed = speed;
    }
    if (!seen.emplace(cell.ts, cell.segment).second) {
      throw InputError("line " + std::to_string(lineno) + ": duplicate row for segment '" +
                       cell.segment + "' at " + fields[0]);
    }
    cells.push_back(std::move(cell));
  }
  if (!header_seen) throw ParseError("missing header", lineno);
  if (cells.empty()) throw InputError("speed file has no data rows");

  std::set<std::string> segments;
  std::int64_t first = cells.front().ts, last = cells.front().ts;
  for (const auto& c : cells) {
    segments.insert(c.segment);
    first = std::min(first, c.ts);
    last = std::max(last, c.ts);
  }
  SpeedMatrix m;
  m.segment_ids.assign(segments.begin(), segments.end());
  for (std::int64_t ts = first; ts <= last; ts += kCadenceSeconds) m.timestamps.push_back(ts);
  m.values = Array2(m.num_segments(), m.num_steps());
  m.missing.assign(m.num_segments() * m.num_steps(), 1);
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < m.segment_ids.size(); ++i) row_of[m.segment_ids[i]] = i;
  for (const auto& c : cells) {
    if (!c.speed) continue;
    const std::size_t v = row_of[c.segment];
    const auto t = static_cast<std::size_t>((c.ts - first) / kCadenceSeconds);
    m.values(v, t) = *c.speed;
    m.missing[v * m.num_steps() + t] = 0;
  }
  return m;
}

SpeedMatrix load_speed_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_speed_csv(in);
}

void write_speed_csv(const SpeedMatrix& m, std::ostream& out) {
  out << "timestamp,segment_id,speed_kmh\n";
  for (std::size_t t = 0; t < m.num_steps(); ++t) {
    const std::string ts = format_timestamp(m.timestamps[t]);
    for (std::size_t v = 0; v < m.num_segments(); ++v) {
      if (m.is_missing(v, t)) continue;
      out << ts << ',' << m.segment_ids[v] << ',' << format_double(m.values(v, t)) << '\n';
    }
  }
}

void save_speed_csv(const SpeedMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_speed_csv(matrix, out);
}

SpeedMatrix impute_missing(const SpeedMatrix& matrix) {
  SpeedMatrix out = matrix;
  const std::size_t steps = matrix.num_steps();
  for (std::size_t v = 0; v < matrix.num_segments(); ++v) {
    std::vector<double> sum(kSlotsPerDay, 0.0);
    std::vector<std::size_t> count(kSlotsPerDay, 0);
    for (std::size_t t = 0; t < steps; ++t) {
      if (matrix.is_missing(v, t)) continue;
      const std::size_t slot = slot_of(matrix.timestamps[t]);
      sum[slot] += matrix.values(v, t);
      count[slot] += 1;
    }
    for (std::size_t t = 0; t < steps; ++t) {
      if (!matrix.is_missing(v, t)) continue;
      const std::size_t slot = slot_of(matrix.timestamps[t]);
      if (count[slot] == 0) {
        const std::string hhmm = format_timestamp(matrix.timestamps[t]).substr(11, 5);
        throw ImputationError("no readings for segment '" + matrix.segment_ids[v] + "' at slot " +
                              hhmm + " on any day");
      }
      out.values(v, t) = sum[slot] / static_cast<double>(count[slot]);
      out.missing[v * steps + t] = 0;
    }
  }
  return out;
}

ScalingStats fit_scaling(const SpeedMatrix& train) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t v = 0; v < train.num_segments(); ++v) {
    for (std::size_t t = 0; t < train.num_steps(); ++t) {
      if (train.is_missing(v, t)) continue;
      lo = std::min(lo, train.values(v, t));
      hi = std::max(hi, train.values(v, t));
    }
  }
  if (!std::isfinite(lo)) throw ScalingError("training split has no readings");
  if (!(hi > lo)) throw ScalingError("training speeds are constant; cannot scale to [0, 1]");
  return {lo, hi};
}

SpeedMatrix scale(const SpeedMatrix& matrix, const ScalingStats& stats) {
  SpeedMatrix out = matrix;
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (out.missing[i]) continue;
    double s = stats.scale(out.values[i]);
    if (s < 0.0 || s > 1.0) {
      s = std::clamp(s, 0.0, 1.0);
      ++clamped;
    }
    out.values[i] = s;
  }
  if (clamped > 0) {
    warn(std::to_string(clamped) + " value(s) outside the training range [" +
         format_double(stats.min_kmh) + ", " + format_double(stats.max_kmh) +
         "] km/h clamped to [0, 1]");
  }
  return out;
}

std::pair<SpeedMatrix, SpeedMatrix> split_train_eval(const SpeedMatrix& matrix, double fraction,
                                                     std::size_t min_steps) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InputError("split fraction must lie in (0, 1), got " + format_double(fraction));
  }
  const std::size_t total = matrix.num_steps();
  const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(total) * fraction));
  min_steps = std::max<std::size_t>(min_steps, 1);
  if (cut < min_steps || total - cut < min_steps) {
    throw InputError("series of " + std::to_string(total) + " steps split at " + std::to_string(cut) +
                     " leaves fewer than " + std::to_string(min_steps) + " steps on one side");
  }
  return {matrix.slice_steps(0, cut), matrix.slice_steps(cut, total)};
}

std::vector<WindowSample> make_windows(const SpeedMatrix& split, std::size_t l, std::size_t stride) {
  if (l < 1) throw InputError("window length must be at least 1");
  if (stride < 1) throw InputError("window stride must be at least 1");
  if (split.missing_count() > 0) throw InputError("cannot window a series with missing values");
  const std::size_t n = split.num_segments(), steps = split.num_steps();
  std::vector<WindowSample> out;
  // Window at s needs steps s-1 .. s+l.
  for (std::size_t s = 1; s + l < steps; s += stride) {
    WindowSample w;
    w.start = s;
    w.inputs = Array2(l + 1, n);
    w.targets = Array2(l, n);
    for (std::size_t k = 0; k <= l; ++k) {
      for (std::size_t v = 0; v < n; ++v) w.inputs(k, v) = split.values(v, s - 1 + k);
    }
    for (std::size_t k = 0; k < l; ++k) {
      for (std::size_t v = 0; v < n; ++v) w.targets(k, v) = split.values(v, s + 1 + k);
    }
    out.push_back(std::move(w));
  }
  return out;
}

SpeedMatrix synth_traffic(std::size_t n_segments, std::size_t n_steps,
                          const stgraph::SpatioTemporalGraph& graph, std::uint64_t seed,
                          const SynthOptions& opt) {
  if (n_segments != graph.num_nodes()) {
    throw InputError("graph has " + std::to_string(graph.num_nodes()) + " nodes but " +
                     std::to_string(n_segments) + " segments were requested");
  }
  if (n_steps < 1) throw InputError("at least one step is required");
  if (opt.period_steps == 0) throw InputError("sinusoid period must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> base_dist(opt.base_min, opt.base_max);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<double> base(n_segments);
  for (double& b : base) b = base_dist(rng);

  SpeedMatrix m;
  m.segment_ids = graph.nodes();
  m.values = Array2(n_segments, n_steps);
  m.missing.assign(n_segments * n_steps, 0);
  for (std::size_t t = 0; t < n_steps; ++t) {
    m.timestamps.push_back(opt.start_time + static_cast<std::int64_t>(t) * kCadenceSeconds);
  }
  for (std::size_t v = 0; v < n_segments; ++v) {
    m.values(v, 0) = std::clamp(base[v] + opt.initial_offset, opt.clip_min, opt.clip_max);
  }

  const auto& edges = graph.spatial_edges();
  for (std::size_t t = 0; t + 1 < n_steps; ++t) {
    const double daily =
        opt.daily_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t + 1) /
                                       static_cast<double>(opt.period_steps));
    for (std::size_t v = 0; v < n_segments; ++v) {
      double coupling = 0.0;
      const auto& in = graph.incoming(v);
      if (!in.empty()) {
        for (std::size_t e : in) {
          const std::size_t u = edges[e].src;
          coupling += m.values(u, t) - base[u];
        }
        coupling /= static_cast<double>(in.size());
      }
      const double eps = opt.noise_sd > 0.0 ? opt.noise_sd * noise(rng) : 0.0;
      const double next = base[v] + opt.persistence * (m.values(v, t) - base[v]) +
                          opt.coupling * coupling + daily + eps;
      m.values(v, t + 1) = std::clamp(next, opt.clip_min, opt.clip_max);
    }
  }
  return m;
}

}  // namespace srnn::data
