#include "srnn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srnn/error.hpp"

namespace srnn::checkpoint {

using compute::Array2;
using compute::ParamSet;
using nlohmann::json;

namespace {

json arrays_to_json(const std::map<std::string, Array2>& arrays) {
  json out = json::object();
  for (const auto& [path, a] : arrays) {
    out[path] = {{"shape", {a.rows(), a.cols()}},
                 {"values", std::vector<double>(a.values().begin(), a.values().end())}};
  }
  return out;
}

std::map<std::string, Array2> arrays_from_json(const json& doc) {
  std::map<std::string, Array2> out;
  for (const auto& [path, entry] : doc.items()) {
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw CheckpointError("block '" + path + "' has a malformed shape");
    auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != shape[0] * shape[1]) {
      throw CheckpointError("block '" + path + "' holds " + std::to_string(values.size()) +
                            " values for shape " + compute::shape_string(shape[0], shape[1]));
    }
    out.emplace(path, Array2(shape[0], shape[1], std::move(values)));
  }
  return out;
}

json params_to_json(const ParamSet& params) {
  std::map<std::string, Array2> arrays;
  for (const auto& [path, p] : params) arrays.emplace(path, p.value);
  return arrays_to_json(arrays);
}

ParamSet params_from_json(const json& doc, const model::SrnnConfig& config) {
  ParamSet params;
  for (auto& [path, a] : arrays_from_json(doc)) params.add(path, std::move(a));
  model::SrnnConfig dims;
  try {
    dims = model::dims_from_params(params);
  } catch (const ShapeError& e) {
    throw CheckpointError(e.what());
  }
  dims.seed = config.seed;
  if (!(dims == config)) {
    throw CheckpointError("parameter shapes do not match the model config in the checkpoint");
  }
  return params;
}

json model_to_json(const model::SrnnConfig& c) {
  return {{"node_hidden", c.node_hidden},       {"edge_hidden", c.edge_hidden},
          {"embed_dim", c.embed_dim},           {"node_input_dim", c.node_input_dim},
          {"edge_input_dim", c.edge_input_dim}, {"seed", c.seed}};
}

model::SrnnConfig model_from_json(const json& j) {
  model::SrnnConfig c;
  c.node_hidden = j.at("node_hidden").get<std::size_t>();
  c.edge_hidden = j.at("edge_hidden").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.node_input_dim = j.at("node_input_dim").get<std::size_t>();
  c.edge_input_dim = j.at("edge_input_dim").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json train_to_json(const train::TrainConfig& c) {
  return {{"l", c.l},
          {"batch_size", c.batch_size},
          {"lr0", c.lr0},
          {"lr_decay", c.lr_decay},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"split_fraction", c.split_fraction},
          {"checkpoint_dir", c.checkpoint_dir}};
}

train::TrainConfig train_from_json(const json& j) {
  train::TrainConfig c;
  c.l = j.at("l").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr0 = j.at("lr0").get<double>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.split_fraction = j.at("split_fraction").get<double>();
  c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
  return c;
}

json history_to_json(const std::vector<train::EpochRecord>& history) {
  json out = json::array();
  for (const auto& r : history) {
    out.push_back({{"epoch", r.epoch},
                   {"train_mse", r.train_mse},
                   {"eval_mae", r.eval_mae},
                   {"eval_rmse", r.eval_rmse},
                   {"lr", r.lr}});
  }
  return out;
}

std::vector<train::EpochRecord> history_from_json(const json& j) {
  std::vector<train::EpochRecord> out;
  for (const auto& r : j) {
    out.push_back({r.at("epoch").get<std::size_t>(), r.at("train_mse").get<double>(),
                   r.at("eval_mae").get<double>(), r.at("eval_rmse").get<double>(),
                   r.at("lr").get<double>()});
  }
  return out;
}

}  // namespace

std::string to_json(const Checkpoint& ck) {
  json doc;
  doc["format"] = "srnn-checkpoint";
  doc["version"] = kFormatVersion;
  doc["model"] = model_to_json(ck.model);
  doc["train"] = train_to_json(ck.train);
  doc["scaling"] = {{"min_kmh", ck.scaling.min_kmh}, {"max_kmh", ck.scaling.max_kmh}};
  doc["params"] = params_to_json(ck.params);
  if (ck.optimizer) {
    doc["optimizer"] = {{"step", ck.optimizer->step},
                        {"m", arrays_to_json(ck.optimizer->m)},
                        {"v", arrays_to_json(ck.optimizer->v)}};
  }
  if (ck.progress) {
    doc["progress"] = {{"next_epoch", ck.progress->next_epoch},
                       {"best_epoch", ck.progress->best_epoch},
                       {"best_rmse", ck.progress->best_rmse},
                       {"history", history_to_json(ck.progress->history)},
                       {"best_params", params_to_json(ck.progress->best_params)}};
  }
  return doc.dump() + "\n";
}

Checkpoint from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON (truncated?): ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "srnn-checkpoint") {
      throw CheckpointError("not an srnn checkpoint");
    }
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.model = model_from_json(doc.at("model"));
    ck.train = train_from_json(doc.at("train"));
    ck.scaling.min_kmh = doc.at("scaling").at("min_kmh").get<double>();
    ck.scaling.max_kmh = doc.at("scaling").at("max_kmh").get<double>();
    ck.params = params_from_json(doc.at("params"), ck.model);
    if (doc.contains("optimizer")) {
      compute::AdamState opt;
      opt.step = doc["optimizer"].at("step").get<std::uint64_t>();
      opt.m = arrays_from_json(doc["optimizer"].at("m"));
      opt.v = arrays_from_json(doc["optimizer"].at("v"));
      for (const auto* moments : {&opt.m, &opt.v}) {
        for (const auto& [path, a] : *moments) {
          if (!ck.params.contains(path) || ck.params.at(path).value.rows() != a.rows() ||
              ck.params.at(path).value.cols() != a.cols()) {
            throw CheckpointError("optimizer block '" + path + "' does not match the parameters");
          }
        }
      }
      ck.optimizer = std::move(opt);
    }
    if (doc.contains("progress")) {
      Progress p;
      const json& pj = doc["progress"];
      p.next_epoch = pj.at("next_epoch").get<std::size_t>();
      p.best_epoch = pj.at("best_epoch").get<std::size_t>();
      p.best_rmse = pj.at("best_rmse").get<double>();
      p.history = history_from_json(pj.at("history"));
      p.best_params = params_from_json(pj.at("best_params"), ck.model);
      ck.progress = std::move(p);
    }
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw CheckpointError("cannot write '" + tmp.string() + "'");
    out << to_json(checkpoint);
    if (!out) throw CheckpointError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace srnn::checkpoint
