#include "srnn/cli.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "srnn/checkpoint.hpp"
#include "srnn/config.hpp"
#include "srnn/data.hpp"
#include "srnn/error.hpp"
#include "srnn/eval.hpp"
#include "srnn/model.hpp"
#include "srnn/stgraph.hpp"
#include "srnn/train.hpp"

namespace srnn::cli {

namespace {

constexpr const char* kFormats = R"(File formats:
  network   one link per line: `segment_id segment_id` (# comments allowed)
  sensors   one segment identifier per line
  graph     JSON {"nodes": [...], "spatial_edges": [[u, v], ...], "temporal_edges": [[v, v], ...]}
  speeds    CSV `timestamp,segment_id,speed_kmh`, ISO-8601 timestamps on a 15-minute grid,
            e.g. 2016-01-01T00:15:00,s3,52.5
  config    `key = value` lines with keys l, batch_size, lr0, lr_decay, epochs, seed,
            split_fraction, checkpoint_dir, node_hidden, edge_hidden, embed_dim
)";

// Flags shared with the config file; only explicitly passed flags override it.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app, const std::vector<std::string>& keys) {
    app->add_option("--config", config_path, "Config file (key = value)");
    for (const auto& key : keys) {
      app->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { values[key] = v; },
          "Overrides config key '" + key + "'");
    }
  }

  config::RunConfig resolve() const {
    config::RunConfig c;
    if (!config_path.empty()) c = config::load_config(config_path);
    for (const auto& [k, v] : values) config::apply(c, k, v);
    return c;
  }
};

void echo_config(const config::RunConfig& c, std::ostream& err) {
  std::istringstream lines(config::to_text(c));
  for (std::string line; std::getline(lines, line);) err << "# " << line << '\n';
}

stgraph::SpatioTemporalGraph load_graph_or_ablate(const std::string& path, bool ablate) {
  auto g = stgraph::read_graph(path);
  return ablate ? eval::ablate_spatial(g) : g;
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    const auto r = std::stoul(text.substr(0, x));
    const auto c = std::stoul(text.substr(x + 1));
    if (r == 0 || c == 0 || r * c < 2) throw std::invalid_argument(text);
    return {r, c};
  } catch (const std::logic_error&) {
    throw InputError("grid must look like ROWSxCOLS with at least 2 segments, got '" + text + "'");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structural RNN traffic speed forecasting"};
  app.require_subcommand(1);
  app.footer(kFormats);

  const auto train_keys = config::config_keys();
  const std::vector<std::string> model_keys = {"node_hidden", "edge_hidden", "embed_dim", "seed"};

  // build-graph
  auto* build = app.add_subcommand("build-graph", "Derive the sensor graph from a road network");
  std::string network_path, sensors_path, graph_out;
  build->add_option("--network", network_path, "Road network link file")->required();
  build->add_option("--sensors", sensors_path, "Sensor segment list")->required();
  build->add_option("--out", graph_out, "Graph JSON to write")->required();
  build->footer("Example: srnn build-graph --network net.txt --sensors sensors.txt --out graph.json");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic speeds CSV over a graph");
  std::string synth_graph, synth_grid, synth_out, synth_net_out, synth_sensors_out, synth_graph_out;
  std::size_t synth_steps = 3000;
  std::uint64_t synth_seed = 0;
  data::SynthOptions synth_opt;
  auto* synth_source = synth->add_option_group("source");
  synth_source->add_option("--graph", synth_graph, "Existing graph JSON");
  synth_source->add_option("--grid", synth_grid, "Generate a ROWSxCOLS grid network, all segments sensed");
  synth_source->require_option(1);
  synth->add_option("--steps", synth_steps, "Number of 15-minute steps")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--coupling", synth_opt.coupling, "Neighbour coupling b")->capture_default_str();
  synth->add_option("--persistence", synth_opt.persistence, "AR coefficient a")->capture_default_str();
  synth->add_option("--noise-sd", synth_opt.noise_sd, "Noise sd [km/h]")->capture_default_str();
  synth->add_option("--daily-amplitude", synth_opt.daily_amplitude, "Daily forcing amplitude [km/h]")
      ->capture_default_str();
  synth->add_option("--out", synth_out, "Speeds CSV to write")->required();
  synth->add_option("--network-out", synth_net_out, "With --grid: write the network file");
  synth->add_option("--sensors-out", synth_sensors_out, "With --grid: write the sensors file");
  synth->add_option("--graph-out", synth_graph_out, "With --grid: write the graph JSON");
  synth->footer("Example: srnn synth --grid 2x5 --steps 3000 --seed 7 --out speeds.csv --graph-out graph.json");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train an SRNN and write checkpoints");
  ConfigFlags train_flags;
  train_flags.attach(train_cmd, train_keys);
  std::string train_data, train_graph, train_report, train_resume;
  bool train_ablate = false;
  train_cmd->add_option("--data", train_data, "Speeds CSV")->required();
  train_cmd->add_option("--graph", train_graph, "Graph JSON")->required();
  train_cmd->add_option("--report", train_report, "Write the per-epoch report CSV here");
  train_cmd->add_option("--resume", train_resume, "Continue from a last.ckpt");
  train_cmd->add_flag("--ablate", train_ablate, "Train without spatial edges");
  train_cmd->footer(
      "Writes <checkpoint_dir>/last.ckpt and best.ckpt after every epoch.\n"
      "Example: srnn train --config configs/default.cfg --data speeds.csv --graph graph.json "
      "--checkpoint_dir run --report run/report.csv");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint against baselines");
  std::string eval_ckpt, eval_data, eval_graph, eval_out;
  bool eval_ablate = false, eval_per_segment = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint (best.ckpt)")->required();
  eval_cmd->add_option("--data", eval_data, "Speeds CSV")->required();
  eval_cmd->add_option("--graph", eval_graph, "Graph JSON")->required();
  eval_cmd->add_option("--out", eval_out, "Metrics CSV to write");
  eval_cmd->add_flag("--ablate", eval_ablate, "Evaluate on the graph without spatial edges");
  eval_cmd->add_flag("--per-segment", eval_per_segment, "Include per-segment rows in the CSV");
  eval_cmd->footer("Metrics use the evaluation split defined by the checkpoint's split_fraction and l.");

  // predict
  auto* predict = app.add_subcommand("predict", "Forecast the next step from a window of speeds");
  std::string pred_ckpt, pred_graph, pred_window, pred_out;
  bool pred_ablate = false;
  predict->add_option("--checkpoint", pred_ckpt, "Checkpoint")->required();
  predict->add_option("--graph", pred_graph, "Graph JSON")->required();
  predict->add_option("--window", pred_window, "Speeds CSV: predecessor step plus l steps")->required();
  predict->add_option("--out", pred_out, "Write the forecast CSV here instead of stdout");
  predict->add_flag("--ablate", pred_ablate, "Use the graph without spatial edges");

  // params
  auto* params_cmd = app.add_subcommand("params", "Count trainable parameters");
  ConfigFlags params_flags;
  params_flags.attach(params_cmd, model_keys);
  params_cmd->footer("Example: srnn params --config configs/default.cfg   # prints 986753");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the model gradient");
  ConfigFlags grad_flags;
  grad_flags.attach(grad_cmd, {"node_hidden", "edge_hidden", "embed_dim", "seed", "l"});
  std::size_t grad_nodes = 2;
  compute::GradCheckOptions grad_opt;
  grad_cmd->add_option("--nodes", grad_nodes, "Chain graph size")->capture_default_str();
  grad_cmd->add_option("--eps", grad_opt.epsilon, "Central difference step")->capture_default_str();
  grad_cmd->add_option("--tol", grad_opt.tolerance, "Max relative error")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      for (auto* sub : app.get_subcommands()) out << sub->help();
      if (app.get_subcommands().empty()) out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (build->parsed()) {
      const auto graph =
          stgraph::build_spatial_graph(stgraph::read_network(network_path), stgraph::read_sensors(sensors_path));
      stgraph::write_graph(graph, graph_out);
      out << "graph: " << graph.num_nodes() << " nodes, " << graph.num_spatial_edges()
          << " spatial edges, " << graph.num_nodes() << " temporal edges -> " << graph_out << '\n';
    } else if (synth->parsed()) {
      stgraph::SpatioTemporalGraph graph;
      if (!synth_grid.empty()) {
        const auto [rows, cols] = parse_grid(synth_grid);
        const auto net = stgraph::grid_network(rows, cols);
        const std::vector<std::string> sensors(net.segments().begin(), net.segments().end());
        graph = stgraph::build_spatial_graph(net, sensors);
        if (!synth_net_out.empty()) stgraph::write_network(net, synth_net_out);
        if (!synth_sensors_out.empty()) stgraph::write_sensors(sensors, synth_sensors_out);
        if (!synth_graph_out.empty()) stgraph::write_graph(graph, synth_graph_out);
      } else {
        graph = stgraph::read_graph(synth_graph);
      }
      err << "# steps = " << synth_steps << "\n# seed = " << synth_seed << "\n# coupling = "
          << synth_opt.coupling << "\n# persistence = " << synth_opt.persistence
          << "\n# noise_sd = " << synth_opt.noise_sd << "\n# daily_amplitude = " << synth_opt.daily_amplitude
          << '\n';
      const auto speeds = data::synth_traffic(graph.num_nodes(), synth_steps, graph, synth_seed, synth_opt);
      data::save_speed_csv(speeds, synth_out);
      out << "speeds: " << speeds.num_segments() << " segments x " << speeds.num_steps() << " steps -> "
          << synth_out << '\n';
    } else if (train_cmd->parsed()) {
      const auto cfg = train_flags.resolve();
      cfg.model.validate();
      cfg.train.validate();
      echo_config(cfg, err);
      const auto graph = load_graph_or_ablate(train_graph, train_ablate);
      const auto prepared = train::prepare_data(graph, data::load_speed_csv(train_data), cfg.train);
      const auto result = train_resume.empty()
                              ? train::train(graph, prepared, cfg.train, cfg.model)
                              : train::resume(graph, prepared, cfg.train, train_resume);
      if (!train_report.empty()) train::save_report_csv(result.report, train_report);
      train::write_report_csv(result.report, out);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "best epoch %zu: eval RMSE %.4f km/h (%.1f s)\n", result.report.best_epoch,
                    result.report.epochs[result.report.best_epoch].eval_rmse, result.report.wall_seconds);
      err << buf;
    } else if (eval_cmd->parsed()) {
      const auto ck = checkpoint::load_checkpoint(eval_ckpt);
      config::RunConfig cfg{ck.train, ck.model};
      echo_config(cfg, err);
      const auto graph = load_graph_or_ablate(eval_graph, eval_ablate);
      auto train_cfg = ck.train;
      const auto ordered = data::impute_missing(data::load_speed_csv(eval_data).reorder(graph.nodes()));
      auto [train_raw, eval_raw] = data::split_train_eval(ordered, train_cfg.split_fraction, train_cfg.l + 2);
      const auto windows = data::make_windows(data::scale(eval_raw, ck.scaling), train_cfg.l);
      std::vector<eval::MetricReport> reports;
      reports.push_back(eval::metric_report(
          eval_ablate ? "srnn_ablated" : "srnn",
          eval::model_forecasts(graph, ck.params, ck.scaling, eval_raw, windows), graph.nodes()));
      reports.push_back(eval::metric_report("persistence", eval::persistence_baseline(eval_raw, train_cfg.l),
                                            graph.nodes()));
      reports.push_back(eval::metric_report(
          "historical_mean", eval::historical_mean_baseline(train_raw, eval_raw, train_cfg.l), graph.nodes()));
      eval::print_metrics_table(reports, out);
      if (!eval_out.empty()) {
        std::ofstream csv(eval_out);
        if (!csv) throw InputError("cannot write '" + eval_out + "'");
        eval::write_metrics_csv(reports, csv, eval_per_segment);
      }
    } else if (predict->parsed()) {
      const auto ck = checkpoint::load_checkpoint(pred_ckpt);
      echo_config(config::RunConfig{ck.train, ck.model}, err);
      const auto graph = load_graph_or_ablate(pred_graph, pred_ablate);
      const auto window = data::load_speed_csv(pred_window).reorder(graph.nodes());
      if (window.missing_count() > 0) throw InputError("prediction window has missing values");
      if (window.num_steps() < 2) throw InputError("prediction window needs at least 2 steps");
      compute::Array2 raw(window.num_steps(), window.num_segments());
      for (std::size_t t = 0; t < window.num_steps(); ++t) {
        for (std::size_t v = 0; v < window.num_segments(); ++v) raw(t, v) = window.values(v, t);
      }
      const auto next = model::predict_next(graph, ck.params, ck.scaling, raw);
      data::SpeedMatrix forecast;
      forecast.segment_ids = graph.nodes();
      forecast.timestamps = {window.timestamps.back() + data::kCadenceSeconds};
      forecast.values = compute::Array2(next.size(), 1, next);
      forecast.missing.assign(next.size(), 0);
      if (pred_out.empty()) {
        data::write_speed_csv(forecast, out);
      } else {
        data::save_speed_csv(forecast, pred_out);
      }
    } else if (params_cmd->parsed()) {
      const auto cfg = params_flags.resolve();
      cfg.model.validate();
      echo_config(cfg, err);
      out << model::count_params(model::zero_params(cfg.model)) << '\n';
    } else if (grad_cmd->parsed()) {
      auto cfg = grad_flags.resolve();
      if (!grad_flags.values.count("node_hidden")) cfg.model.node_hidden = 4;
      if (!grad_flags.values.count("edge_hidden")) cfg.model.edge_hidden = 4;
      if (!grad_flags.values.count("embed_dim")) cfg.model.embed_dim = 4;
      if (!grad_flags.values.count("l")) cfg.train.l = 3;
      cfg.model.validate();
      echo_config(cfg, err);
      const auto report = model::check_gradients(grad_nodes, cfg.model, cfg.train.l, grad_opt);
      char buf[200];
      for (const auto& p : report.params) {
        std::snprintf(buf, sizeof(buf), "%-28s max_rel_error %.3e %s\n", p.path.c_str(), p.max_rel_error,
                      p.pass ? "ok" : "FAIL");
        out << buf;
      }
      std::snprintf(buf, sizeof(buf), "%s: max relative error %.3e (tolerance %.1e, worst %s)\n",
                    report.pass ? "PASS" : "FAIL", report.max_rel_error, grad_opt.tolerance,
                    report.worst_path.c_str());
      out << buf;
      return report.pass ? 0 : 2;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace srnn::cli
