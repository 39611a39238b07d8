#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srnn/compute/adam.hpp"
#include "srnn/compute/params.hpp"
#include "srnn/data.hpp"
#include "srnn/model.hpp"
#include "srnn/train.hpp"

namespace srnn::checkpoint {

inline constexpr int kFormatVersion = 1;

struct Progress {
  std::size_t next_epoch = 0;
  compute::ParamSet best_params;
  std::size_t best_epoch = 0;
  double best_rmse = 0.0;
  std::vector<train::EpochRecord> history;
};

struct Checkpoint {
  model::SrnnConfig model;
  train::TrainConfig train;
  data::ScalingStats scaling;
  compute::ParamSet params;
  std::optional<compute::AdamState> optimizer;
  // Present in resumable checkpoints only.
  std::optional<Progress> progress;
};

// JSON document: config echo, scaling, parameter path -> {shape, values},
// optimizer moments and training progress. Doubles are written in shortest
// round-trip form, so load(save(x)) is bit-exact.
std::string to_json(const Checkpoint& checkpoint);
Checkpoint from_json(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws CheckpointError on unreadable, truncated or inconsistent files,
// naming the offending block when shapes disagree with the config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace srnn::checkpoint
