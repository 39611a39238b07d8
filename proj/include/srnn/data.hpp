#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "srnn/compute/array.hpp"
#include "srnn/stgraph.hpp"

namespace srnn::data {

inline constexpr std::int64_t kCadenceSeconds = 15 * 60;
inline constexpr std::int64_t kSecondsPerDay = 24 * 60 * 60;
inline constexpr std::size_t kSlotsPerDay = kSecondsPerDay / kCadenceSeconds;

// Speeds on a regular 15-minute timeline. values is N×T in km/h (row =
// segment, column = step); missing cells hold 0 and are flagged in the mask.
struct SpeedMatrix {
  std::vector<std::string> segment_ids;
  std::vector<std::int64_t> timestamps;  // seconds since 1970-01-01T00:00:00Z
  compute::Array2 values;
  std::vector<std::uint8_t> missing;  // N×T, row-major like values

  std::size_t num_segments() const noexcept { return segment_ids.size(); }
  std::size_t num_steps() const noexcept { return timestamps.size(); }
  bool is_missing(std::size_t v, std::size_t t) const { return missing[v * num_steps() + t] != 0; }
  std::size_t missing_count() const;

  // Columns [begin, end).
  SpeedMatrix slice_steps(std::size_t begin, std::size_t end) const;
  // Rows permuted into `order`; InputError if the identifier sets differ.
  SpeedMatrix reorder(const std::vector<std::string>& order) const;

  bool operator==(const SpeedMatrix&) const = default;
};

// Time-of-day slot (0..95) of a timestamp.
std::size_t slot_of(std::int64_t timestamp);
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t timestamp);

// CSV with header `timestamp,segment_id,speed_kmh`. Rows may come in any
// order; absent (timestamp, segment) cells and empty speed fields are missing.
SpeedMatrix read_speed_csv(std::istream& in);
SpeedMatrix load_speed_csv(const std::filesystem::path& path);
// Writes every non-missing cell, ordered by timestamp then segment.
void write_speed_csv(const SpeedMatrix& matrix, std::ostream& out);
void save_speed_csv(const SpeedMatrix& matrix, const std::filesystem::path& path);

// Replaces each missing cell by the mean of the same segment's readings at the
// same time of day on other days.
SpeedMatrix impute_missing(const SpeedMatrix& matrix);

struct ScalingStats {
  double min_kmh = 0.0;
  double max_kmh = 1.0;

  // Unclamped affine map to [0, 1] over [min_kmh, max_kmh].
  double scale(double kmh) const { return (kmh - min_kmh) / (max_kmh - min_kmh); }
  double unscale(double unit) const { return min_kmh + unit * (max_kmh - min_kmh); }

  bool operator==(const ScalingStats&) const = default;
};

ScalingStats fit_scaling(const SpeedMatrix& train);
// Scaled copy, clamped to [0, 1]. Reports how many values were clamped
// through the warning handler.
SpeedMatrix scale(const SpeedMatrix& matrix, const ScalingStats& stats);

using WarningHandler = std::function<void(const std::string&)>;
// Default handler writes "warning: <message>" to stderr.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

// Chronological cut at floor(T * fraction). Each side must keep at least
// `min_steps` steps.
std::pair<SpeedMatrix, SpeedMatrix> split_train_eval(const SpeedMatrix& matrix,
                                                     double fraction = 0.75,
                                                     std::size_t min_steps = 1);

// inputs: (l+1)×N, row 0 is the predecessor step s-1 and rows 1..l are steps
// s..s+l-1. targets: l×N, steps s+1..s+l. `start` is s.
struct WindowSample {
  compute::Array2 inputs;
  compute::Array2 targets;
  std::size_t start = 0;
};

std::vector<WindowSample> make_windows(const SpeedMatrix& split, std::size_t l, std::size_t stride = 1);

struct SynthOptions {
  double persistence = 0.6;   // a
  double coupling = 0.3;      // b
  double noise_sd = 2.0;      // km/h
  double daily_amplitude = 1.5;
  std::size_t period_steps = kSlotsPerDay;
  double base_min = 30.0;
  double base_max = 80.0;
  double clip_min = 0.0;
  double clip_max = 120.0;
  double initial_offset = 0.0;  // x^0 = base + offset
  std::int64_t start_time = 1451606400;  // 2016-01-01T00:00:00Z
};

// Spatially coupled AR(1) traffic:
//   x_v^{t+1} = clip(mu_v + a (x_v^t - mu_v) + b mean_{u -> v}(x_u^t - mu_u)
//                    + A sin(2 pi (t+1) / P) + noise)
// with neighbours u taken from the graph's incoming spatial edges.
SpeedMatrix synth_traffic(std::size_t n_segments, std::size_t n_steps,
                          const stgraph::SpatioTemporalGraph& graph, std::uint64_t seed,
                          const SynthOptions& options = {});

}  // namespace srnn::data
