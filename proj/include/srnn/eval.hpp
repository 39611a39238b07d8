#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "srnn/compute/array.hpp"
#include "srnn/compute/params.hpp"
#include "srnn/data.hpp"
#include "srnn/stgraph.hpp"

namespace srnn::eval {

// Mean absolute error over all (segment, step) pairs, km/h.
double mae(std::span<const double> pred, std::span<const double> truth);
// Root mean squared error over all (segment, step) pairs, km/h.
double rmse(std::span<const double> pred, std::span<const double> truth);

struct SegmentMetric {
  std::string segment_id;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

struct MetricReport {
  std::string name;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;  // |V| · |T|
  std::vector<SegmentMetric> per_segment;
};

// Forecasts and ground truth as (windows × segments) in km/h.
struct Forecasts {
  compute::Array2 predicted;
  compute::Array2 truth;
};

MetricReport metric_report(const std::string& name, const Forecasts& forecasts,
                           const std::vector<std::string>& segment_ids);

// Final-step SRNN forecasts for every stride-1 window of `split_raw`.
// `scaled_windows` must be make_windows(scale(split_raw), l).
Forecasts model_forecasts(const stgraph::SpatioTemporalGraph& graph, const compute::ParamSet& params,
                          const data::ScalingStats& scaling, const data::SpeedMatrix& split_raw,
                          std::span<const data::WindowSample> scaled_windows);

// Next value equals the last observed one, over the same windows as above.
Forecasts persistence_baseline(const data::SpeedMatrix& split_raw, std::size_t l);

// Per-segment mean of the training split at each time-of-day slot.
compute::Array2 time_of_day_means(const data::SpeedMatrix& train_raw);
// Forecast = time-of-day mean for the target step's slot. Throws InputError
// if the training split never covers a needed slot.
Forecasts historical_mean_baseline(const data::SpeedMatrix& train_raw,
                                   const data::SpeedMatrix& split_raw, std::size_t l);

// Copy with every spatial edge removed; nodeRNNs then see a zero spatial
// summary. Parameter shapes are unaffected.
stgraph::SpatioTemporalGraph ablate_spatial(const stgraph::SpatioTemporalGraph& graph);

// `model,segment,mae_kmh,rmse_kmh,count`; segment is `*` for the overall row.
void write_metrics_csv(const std::vector<MetricReport>& reports, std::ostream& out,
                       bool per_segment = false);
void print_metrics_table(const std::vector<MetricReport>& reports, std::ostream& out);

}  // namespace srnn::eval
