#include "srnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "srnn/checkpoint.hpp"
#include "srnn/error.hpp"
#include "srnn/eval.hpp"

namespace srnn::train {

void TrainConfig::validate() const {
  if (l < 1) throw InputError("l must be at least 1");
  if (batch_size < 1) throw InputError("batch_size must be at least 1");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw InputError("lr0 must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InputError("lr_decay must lie in (0, 1]");
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw InputError("split_fraction must lie in (0, 1)");
  }
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  return lr0 * std::pow(lr_decay, static_cast<double>(epoch));
}

void write_report_csv(const TrainReport& report, std::ostream& out) {
  out << "epoch,train_mse,eval_mae,eval_rmse,lr\n";
  char buf[200];
  for (const auto& r : report.epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_mse, r.eval_mae,
                  r.eval_rmse, r.lr);
    out << buf;
  }
}

void save_report_csv(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_report_csv(report, out);
}

PreparedData prepare_data(const stgraph::SpatioTemporalGraph& graph, const data::SpeedMatrix& dataset,
                          const TrainConfig& config) {
  config.validate();
  const data::SpeedMatrix ordered = data::impute_missing(dataset.reorder(graph.nodes()));
  auto [train_raw, eval_raw] = data::split_train_eval(ordered, config.split_fraction, config.l + 2);
  PreparedData out;
  out.scaling = data::fit_scaling(train_raw);
  out.train_windows = data::make_windows(data::scale(train_raw, out.scaling), config.l);
  out.eval_windows = data::make_windows(data::scale(eval_raw, out.scaling), config.l);
  out.train_raw = std::move(train_raw);
  out.eval_raw = std::move(eval_raw);
  if (out.train_windows.empty() || out.eval_windows.empty()) {
    throw InputError("training or evaluation split yields no windows");
  }
  return out;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void write_checkpoints(const TrainConfig& config, const model::SrnnConfig& model_config,
                       const data::ScalingStats& scaling, const TrainState& state) {
  if (config.checkpoint_dir.empty()) return;
  const std::filesystem::path dir(config.checkpoint_dir);
  std::filesystem::create_directories(dir);

  checkpoint::Checkpoint last;
  last.model = model_config;
  last.train = config;
  last.scaling = scaling;
  last.params = state.params;
  last.optimizer = state.optimizer;
  last.progress = checkpoint::Progress{state.next_epoch, state.best_params, state.best_epoch,
                                       state.best_rmse, state.history};
  checkpoint::save_checkpoint(last, dir / "last.ckpt");

  checkpoint::Checkpoint best;
  best.model = model_config;
  best.train = config;
  best.scaling = scaling;
  best.params = state.best_params;
  checkpoint::save_checkpoint(best, dir / "best.ckpt");
}

TrainResult run(const stgraph::SpatioTemporalGraph& graph, const PreparedData& data,
                const TrainConfig& config, const model::SrnnConfig& model_config, TrainState state) {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n_windows = data.train_windows.size();

  for (std::size_t epoch = state.next_epoch; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    const auto order = epoch_order(n_windows, config.seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n_windows; begin += config.batch_size) {
      const std::size_t end = std::min(n_windows, begin + config.batch_size);
      std::vector<const data::WindowSample*> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&data.train_windows[order[i]]);
      state.params.zero_grad();
      const double loss = model::loss_and_gradient(graph, state.params, batch);
      compute::adam_step(state.params, state.optimizer, lr);
      loss_sum += loss * static_cast<double>(batch.size());
    }

    const auto forecasts =
        eval::model_forecasts(graph, state.params, data.scaling, data.eval_raw, data.eval_windows);
    const auto metrics = eval::metric_report("srnn", forecasts, graph.nodes());
    if (!std::isfinite(metrics.rmse)) throw NumericError("evaluation RMSE is not finite");

    state.history.push_back(
        {epoch, loss_sum / static_cast<double>(n_windows), metrics.mae, metrics.rmse, lr});
    if (state.history.size() == 1 || metrics.rmse < state.best_rmse) {
      state.best_rmse = metrics.rmse;
      state.best_epoch = epoch;
      state.best_params = state.params;
    }
    state.next_epoch = epoch + 1;
    write_checkpoints(config, model_config, data.scaling, state);
  }

  TrainResult result;
  result.best_params = std::move(state.best_params);
  result.report.epochs = std::move(state.history);
  result.report.best_epoch = state.best_epoch;
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.scaling = data.scaling;
  return result;
}

}  // namespace

TrainResult train(const stgraph::SpatioTemporalGraph& graph, const PreparedData& data,
                  const TrainConfig& config, const model::SrnnConfig& model_config) {
  config.validate();
  if (data.train_windows.empty() || data.eval_windows.empty()) {
    throw InputError("training and evaluation windows must be nonempty");
  }
  if (data.train_windows.front().targets.rows() != config.l) {
    throw InputError("prepared windows do not have length l = " + std::to_string(config.l));
  }
  TrainState state;
  state.params = model::init_params(model_config);
  return run(graph, data, config, model_config, std::move(state));
}

TrainResult resume(const stgraph::SpatioTemporalGraph& graph, const PreparedData& data,
                   const TrainConfig& config, const std::filesystem::path& path) {
  config.validate();
  checkpoint::Checkpoint ck = checkpoint::load_checkpoint(path);
  if (!ck.optimizer || !ck.progress) {
    throw CheckpointError("'" + path.string() + "' is not a resumable checkpoint");
  }
  TrainConfig saved = ck.train;
  saved.epochs = config.epochs;
  saved.checkpoint_dir = config.checkpoint_dir;
  if (!(saved == config)) throw CheckpointError("training settings differ from the checkpoint");
  if (ck.scaling.min_kmh != data.scaling.min_kmh || ck.scaling.max_kmh != data.scaling.max_kmh) {
    throw CheckpointError("dataset scaling differs from the checkpoint");
  }
  TrainState state;
  state.params = std::move(ck.params);
  state.optimizer = std::move(*ck.optimizer);
  state.next_epoch = ck.progress->next_epoch;
  state.best_params = std::move(ck.progress->best_params);
  state.best_epoch = ck.progress->best_epoch;
  state.best_rmse = ck.progress->best_rmse;
  state.history = std::move(ck.progress->history);
  return run(graph, data, config, ck.model, std::move(state));
}

}  // namespace srnn::train
