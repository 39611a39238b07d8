#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "srnn/compute/adam.hpp"
#include "srnn/compute/params.hpp"
#include "srnn/data.hpp"
#include "srnn/model.hpp"
#include "srnn/stgraph.hpp"

namespace srnn::train {

struct TrainConfig {
  std::size_t l = 10;
  std::size_t batch_size = 8;
  double lr0 = 0.001;
  double lr_decay = 0.99;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  double split_fraction = 0.75;
  std::string checkpoint_dir;

  void validate() const;
  // lr0 · lr_decay^epoch, epochs counted from 0.
  double learning_rate(std::size_t epoch) const;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;  // scaled units, mean over the epoch's windows
  double eval_mae = 0.0;   // km/h
  double eval_rmse = 0.0;  // km/h
  double lr = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double wall_seconds = 0.0;

  // Equality of everything except wall-clock time.
  bool same_trajectory(const TrainReport& other) const {
    return epochs == other.epochs && best_epoch == other.best_epoch;
  }
};

// `epoch,train_mse,eval_mae,eval_rmse,lr` with round-trip precision.
void write_report_csv(const TrainReport& report, std::ostream& out);
void save_report_csv(const TrainReport& report, const std::filesystem::path& path);

// Imputed dataset split chronologically, scaled on training statistics and
// cut into stride-1 windows.
struct PreparedData {
  data::ScalingStats scaling;
  data::SpeedMatrix train_raw;
  data::SpeedMatrix eval_raw;
  std::vector<data::WindowSample> train_windows;
  std::vector<data::WindowSample> eval_windows;
};

// `dataset` rows are reordered to the graph's node order; missing cells are
// imputed first.
PreparedData prepare_data(const stgraph::SpatioTemporalGraph& graph, const data::SpeedMatrix& dataset,
                          const TrainConfig& config);

// Mutable training progress; what a resumable checkpoint stores.
struct TrainState {
  compute::ParamSet params;
  compute::AdamState optimizer;
  std::size_t next_epoch = 0;
  compute::ParamSet best_params;
  std::size_t best_epoch = 0;
  double best_rmse = 0.0;
  std::vector<EpochRecord> history;
};

struct TrainResult {
  compute::ParamSet best_params;
  TrainReport report;
  data::ScalingStats scaling;
};

// Seeded mini-batch Adam over all per-step labels, evaluating final-step
// forecasts on the evaluation split after every epoch. Returns the parameters
// of the epoch with the lowest evaluation RMSE. With a checkpoint_dir set,
// writes last.ckpt (resumable) and best.ckpt after every epoch.
TrainResult train(const stgraph::SpatioTemporalGraph& graph, const PreparedData& data,
                  const TrainConfig& config, const model::SrnnConfig& model_config);

// Continues a run from a last.ckpt up to config.epochs. All other settings must
// match the checkpoint.
TrainResult resume(const stgraph::SpatioTemporalGraph& graph, const PreparedData& data,
                   const TrainConfig& config, const std::filesystem::path& checkpoint);

}  // namespace srnn::train
