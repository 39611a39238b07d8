#include "srnn/eval.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "srnn/error.hpp"
#include "srnn/model.hpp"

namespace srnn::eval {

using compute::Array2;

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty()) throw InputError("metrics need at least one value");
  if (pred.size() != truth.size()) {
    throw InputError("prediction and truth sizes differ (" + std::to_string(pred.size()) + " vs " +
                     std::to_string(truth.size()) + ")");
  }
}

std::size_t window_count(const data::SpeedMatrix& split, std::size_t l) {
  if (l < 1) throw InputError("window length must be at least 1");
  return split.num_steps() > l + 1 ? split.num_steps() - l - 1 : 0;
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(truth[i] - pred[i]);
  return sum / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = truth[i] - pred[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

MetricReport metric_report(const std::string& name, const Forecasts& f,
                           const std::vector<std::string>& segment_ids) {
  if (f.predicted.rows() != f.truth.rows() || f.predicted.cols() != f.truth.cols()) {
    throw InputError("forecast shape " + f.predicted.shape_string() + " differs from truth " +
                     f.truth.shape_string());
  }
  if (f.predicted.cols() != segment_ids.size()) throw InputError("segment list does not match forecasts");
  MetricReport r;
  r.name = name;
  r.mae = mae(f.predicted.values(), f.truth.values());
  r.rmse = rmse(f.predicted.values(), f.truth.values());
  r.count = f.predicted.size();
  for (std::size_t v = 0; v < segment_ids.size(); ++v) {
    std::vector<double> p(f.predicted.rows()), t(f.truth.rows());
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = f.predicted(k, v);
      t[k] = f.truth(k, v);
    }
    r.per_segment.push_back({segment_ids[v], mae(p, t), rmse(p, t), p.size()});
  }
  return r;
}

Forecasts model_forecasts(const stgraph::SpatioTemporalGraph& graph, const compute::ParamSet& params,
                          const data::ScalingStats& scaling, const data::SpeedMatrix& split_raw,
                          std::span<const data::WindowSample> scaled_windows) {
  if (scaled_windows.empty()) throw InputError("no evaluation windows");
  const std::size_t l = scaled_windows.front().targets.rows();
  const Array2 labels = model::forecast_final(graph, params, scaled_windows);
  Forecasts f{Array2(labels.rows(), labels.cols()), Array2(labels.rows(), labels.cols())};
  for (std::size_t w = 0; w < scaled_windows.size(); ++w) {
    const std::size_t target_step = scaled_windows[w].start + l;
    if (target_step >= split_raw.num_steps()) throw InputError("window runs past the split");
    for (std::size_t v = 0; v < labels.cols(); ++v) {
      f.predicted(w, v) = scaling.unscale(labels(w, v));
      f.truth(w, v) = split_raw.values(v, target_step);
    }
  }
  return f;
}

Forecasts persistence_baseline(const data::SpeedMatrix& split_raw, std::size_t l) {
  const std::size_t windows = window_count(split_raw, l);
  const std::size_t n = split_raw.num_segments();
  Forecasts f{Array2(windows, n), Array2(windows, n)};
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t target_step = w + 1 + l;
    for (std::size_t v = 0; v < n; ++v) {
      f.predicted(w, v) = split_raw.values(v, target_step - 1);
      f.truth(w, v) = split_raw.values(v, target_step);
    }
  }
  return f;
}

Array2 time_of_day_means(const data::SpeedMatrix& train_raw) {
  const std::size_t n = train_raw.num_segments();
  Array2 sums(n, data::kSlotsPerDay), counts(n, data::kSlotsPerDay);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t t = 0; t < train_raw.num_steps(); ++t) {
      if (train_raw.is_missing(v, t)) continue;
      const std::size_t slot = data::slot_of(train_raw.timestamps[t]);
      sums(v, slot) += train_raw.values(v, t);
      counts(v, slot) += 1.0;
    }
  }
  Array2 means(n, data::kSlotsPerDay, NAN);
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (counts[i] > 0.0) means[i] = sums[i] / counts[i];
  }
  return means;
}

Forecasts historical_mean_baseline(const data::SpeedMatrix& train_raw,
                                   const data::SpeedMatrix& split_raw, std::size_t l) {
  if (train_raw.segment_ids != split_raw.segment_ids) {
    throw InputError("training and evaluation splits cover different segments");
  }
  const Array2 means = time_of_day_means(train_raw);
  const std::size_t windows = window_count(split_raw, l);
  const std::size_t n = split_raw.num_segments();
  Forecasts f{Array2(windows, n), Array2(windows, n)};
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t target_step = w + 1 + l;
    const std::size_t slot = data::slot_of(split_raw.timestamps[target_step]);
    for (std::size_t v = 0; v < n; ++v) {
      const double m = means(v, slot);
      if (std::isnan(m)) {
        throw InputError("training data never covers slot " +
                         data::format_timestamp(split_raw.timestamps[target_step]).substr(11, 5) +
                         " for segment '" + split_raw.segment_ids[v] + "'");
      }
      f.predicted(w, v) = m;
      f.truth(w, v) = split_raw.values(v, target_step);
    }
  }
  return f;
}

stgraph::SpatioTemporalGraph ablate_spatial(const stgraph::SpatioTemporalGraph& graph) {
  return stgraph::SpatioTemporalGraph::from_edges(graph.nodes(), {});
}

void write_metrics_csv(const std::vector<MetricReport>& reports, std::ostream& out,
                       bool per_segment) {
  char buf[160];
  out << "model,segment,mae_kmh,rmse_kmh,count\n";
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu", r.mae, r.rmse, r.count);
    out << r.name << ",*," << buf << '\n';
    if (!per_segment) continue;
    for (const auto& s : r.per_segment) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu", s.mae, s.rmse, s.count);
      out << r.name << ',' << s.segment_id << ',' << buf << '\n';
    }
  }
}

void print_metrics_table(const std::vector<MetricReport>& reports, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-20s %12s %12s %10s\n", "model", "MAE [km/h]", "RMSE [km/h]",
                "count");
  out << buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-20s %12.4f %12.4f %10zu\n", r.name.c_str(), r.mae, r.rmse,
                  r.count);
    out << buf;
  }
}

}  // namespace srnn::eval
