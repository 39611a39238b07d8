#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "srnn/model.hpp"
#include "srnn/train.hpp"

namespace srnn::config {

// Everything a run needs. `seed` seeds both initialization and shuffling.
struct RunConfig {
  train::TrainConfig train;
  model::SrnnConfig model;
};

// Keys accepted in config files and as CLI flags, in canonical order.
const std::vector<std::string>& config_keys();

// Throws InputError for an unknown key or a malformed value.
void apply(RunConfig& config, const std::string& key, const std::string& value);
std::string get(const RunConfig& config, const std::string& key);

// `key = value` lines; `#` starts a comment.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
std::string to_text(const RunConfig& config);

}  // namespace srnn::config
