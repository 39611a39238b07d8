#include "srnn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "srnn/error.hpp"

namespace srnn::config {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InputError("bad value '" + value + "' for '" + key + "'");
  }
  return out;
}

std::string format(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "l",         "batch_size", "lr0",         "lr_decay",    "epochs",         "seed",
      "split_fraction", "checkpoint_dir", "node_hidden", "edge_hidden", "embed_dim",
      "node_input_dim", "edge_input_dim"};
  return keys;
}

void apply(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "l") c.train.l = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") c.train.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "lr0") c.train.lr0 = parse_number<double>(key, value);
  else if (key == "lr_decay") c.train.lr_decay = parse_number<double>(key, value);
  else if (key == "epochs") c.train.epochs = parse_number<std::size_t>(key, value);
  else if (key == "seed") c.train.seed = c.model.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "split_fraction") c.train.split_fraction = parse_number<double>(key, value);
  else if (key == "checkpoint_dir") c.train.checkpoint_dir = value;
  else if (key == "node_hidden") c.model.node_hidden = parse_number<std::size_t>(key, value);
  else if (key == "edge_hidden") c.model.edge_hidden = parse_number<std::size_t>(key, value);
  else if (key == "embed_dim") c.model.embed_dim = parse_number<std::size_t>(key, value);
  else if (key == "node_input_dim") c.model.node_input_dim = parse_number<std::size_t>(key, value);
  else if (key == "edge_input_dim") c.model.edge_input_dim = parse_number<std::size_t>(key, value);
  else throw InputError("unknown config key '" + key + "'");
}

std::string get(const RunConfig& c, const std::string& key) {
  if (key == "l") return std::to_string(c.train.l);
  if (key == "batch_size") return std::to_string(c.train.batch_size);
  if (key == "lr0") return format(c.train.lr0);
  if (key == "lr_decay") return format(c.train.lr_decay);
  if (key == "epochs") return std::to_string(c.train.epochs);
  if (key == "seed") return std::to_string(c.train.seed);
  if (key == "split_fraction") return format(c.train.split_fraction);
  if (key == "checkpoint_dir") return c.train.checkpoint_dir;
  if (key == "node_hidden") return std::to_string(c.model.node_hidden);
  if (key == "edge_hidden") return std::to_string(c.model.edge_hidden);
  if (key == "embed_dim") return std::to_string(c.model.embed_dim);
  if (key == "node_input_dim") return std::to_string(c.model.node_input_dim);
  if (key == "edge_input_dim") return std::to_string(c.model.edge_input_dim);
  throw InputError("unknown config key '" + key + "'");
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    try {
      apply(base, trim(body.substr(0, eq)), body.substr(eq + 1));
    } catch (const InputError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  return parse_config(in, std::move(base));
}

std::string to_text(const RunConfig& config) {
  std::ostringstream out;
  for (const auto& key : config_keys()) out << key << " = " << get(config, key) << '\n';
  return out.str();
}

}  // namespace srnn::config
