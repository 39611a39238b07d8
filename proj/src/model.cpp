#include "srnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "srnn/error.hpp"

namespace srnn::model {

using compute::Array2;
using compute::LstmState;
using compute::ParamSet;
using compute::Tape;
using compute::Var;
using stgraph::SpatioTemporalGraph;

void SrnnConfig::validate() const {
  if (node_hidden == 0 || edge_hidden == 0 || embed_dim == 0) {
    throw InputError("model dimensions must be positive");
  }
  if (node_input_dim != 1) throw InputError("node_input_dim must be 1 (a scalar speed)");
  if (edge_input_dim != 2) throw InputError("edge_input_dim must be 2 (a pair of speeds)");
}

std::string weight_path(std::string_view block) { return std::string(block) + ".weight"; }
std::string bias_path(std::string_view block) { return std::string(block) + ".bias"; }

namespace {

struct BlockShape {
  std::string_view name;
  std::size_t out;
  std::size_t in;
  bool lstm;
};

std::vector<BlockShape> block_shapes(const SrnnConfig& c) {
  return {
      {"spatial_edge_embed", c.embed_dim, c.edge_input_dim, false},
      {"spatial_edge_lstm", 4 * c.edge_hidden, c.embed_dim + c.edge_hidden, true},
      {"temporal_edge_embed", c.embed_dim, c.edge_input_dim, false},
      {"temporal_edge_lstm", 4 * c.edge_hidden, c.embed_dim + c.edge_hidden, true},
      {"node_embed", c.embed_dim, c.node_concat_dim(), false},
      {"node_lstm", 4 * c.node_hidden, c.embed_dim + c.node_hidden, true},
      {"output_head", 1, c.node_hidden, false},
  };
}

}  // namespace

ParamSet init_params(const SrnnConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  ParamSet params;
  auto shapes = block_shapes(config);
  std::sort(shapes.begin(), shapes.end(),
            [](const BlockShape& a, const BlockShape& b) { return a.name < b.name; });
  for (const auto& s : shapes) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Array2 bias(1, s.out);
    if (s.lstm) {
      const std::size_t hidden = s.out / 4;
      const auto forget = static_cast<std::size_t>(compute::Gate::kForget);
      for (std::size_t k = 0; k < hidden; ++k) bias[forget * hidden + k] = 1.0;
    }
    Array2 weight(s.out, s.in);
    for (double& w : weight.values()) w = dist(rng);
    params.add(bias_path(s.name), std::move(bias));
    params.add(weight_path(s.name), std::move(weight));
  }
  return params;
}

ParamSet zero_params(const SrnnConfig& config) {
  config.validate();
  ParamSet params;
  for (const auto& s : block_shapes(config)) {
    params.add(weight_path(s.name), Array2(s.out, s.in));
    params.add(bias_path(s.name), Array2(1, s.out));
  }
  return params;
}

std::size_t count_params(const ParamSet& params) { return params.scalar_count(); }

std::size_t expected_param_count(const SrnnConfig& c) {
  const std::size_t e = c.embed_dim, he = c.edge_hidden, hn = c.node_hidden;
  const std::size_t edge_branch = (e * c.edge_input_dim + e) + 4 * (he * (e + he) + he);
  const std::size_t node_branch =
      (e * c.node_concat_dim() + e) + 4 * (hn * (e + hn) + hn) + (hn + 1);
  return 2 * edge_branch + node_branch;
}

SrnnConfig dims_from_params(const ParamSet& params) {
  auto shape_of = [&](std::string_view block) -> const Array2& {
    if (!params.contains(weight_path(block)) || !params.contains(bias_path(block))) {
      throw ShapeError("parameter block '" + std::string(block) + "' is missing");
    }
    return params.at(weight_path(block)).value;
  };
  SrnnConfig c;
  c.embed_dim = shape_of("spatial_edge_embed").rows();
  c.edge_hidden = shape_of("spatial_edge_lstm").rows() / 4;
  c.node_hidden = shape_of("node_lstm").rows() / 4;
  c.edge_input_dim = shape_of("spatial_edge_embed").cols();
  c.node_input_dim = shape_of("node_embed").cols() >= 2 * c.edge_hidden
                         ? shape_of("node_embed").cols() - 2 * c.edge_hidden
                         : 0;
  c.seed = 0;
  for (const auto& s : block_shapes(c)) {
    const Array2& w = shape_of(s.name);
    const Array2& b = params.at(bias_path(s.name)).value;
    if (w.rows() != s.out || w.cols() != s.in || b.rows() != 1 || b.cols() != s.out ||
        s.out == 0 || s.in == 0) {
      throw ShapeError("parameter block '" + std::string(s.name) + "' has weight " +
                       w.shape_string() + " and bias " + b.shape_string() + ", expected " +
                       compute::shape_string(s.out, s.in) + " and " +
                       compute::shape_string(1, s.out));
    }
  }
  if (params.size() != 2 * kBlockNames.size()) {
    throw ShapeError("parameter set has unexpected blocks");
  }
  return c;
}

void RnnStateStore::reset() {
  for (auto* group : {&temporal, &spatial, &node}) {
    for (auto& s : *group) {
      std::fill(s.h.begin(), s.h.end(), 0.0);
      std::fill(s.c.begin(), s.c.end(), 0.0);
    }
  }
}

RnnStateStore init_states(const SpatioTemporalGraph& graph, const ParamSet& params) {
  const SrnnConfig dims = dims_from_params(params);
  RnnStateStore s;
  s.temporal.assign(graph.num_nodes(), LstmState::zeros(dims.edge_hidden));
  s.spatial.assign(graph.num_spatial_edges(), LstmState::zeros(dims.edge_hidden));
  s.node.assign(graph.num_nodes(), LstmState::zeros(dims.node_hidden));
  s.initialized = true;
  return s;
}

namespace {

struct Block {
  Var weight;
  Var bias;
};

struct Blocks {
  Block spatial_embed, spatial_lstm, temporal_embed, temporal_lstm, node_embed, node_lstm, head;
};

template <class Params>
Blocks bind(Tape& tape, Params& params) {
  auto block = [&](std::string_view name) {
    return Block{tape.parameter(params, weight_path(name)), tape.parameter(params, bias_path(name))};
  };
  return Blocks{block("spatial_edge_embed"), block("spatial_edge_lstm"),
                block("temporal_edge_embed"), block("temporal_edge_lstm"),
                block("node_embed"), block("node_lstm"), block("output_head")};
}

struct StateVars {
  Var temporal_h, temporal_c, spatial_h, spatial_c, node_h, node_c;
};

// Layout of B stacked copies of the graph: node rows b·N + v, spatial edge
// rows b·E + e.
struct Layout {
  std::size_t batch = 1;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::shared_ptr<const compute::RowGroups> incoming;
};

Layout make_layout(const SpatioTemporalGraph& graph, std::size_t batch) {
  Layout l;
  l.batch = batch;
  l.nodes = graph.num_nodes();
  l.edges = graph.num_spatial_edges();
  auto groups = std::make_shared<compute::RowGroups>();
  groups->input_rows = batch * l.edges;
  groups->sources.resize(batch * l.nodes);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t v = 0; v < l.nodes; ++v) {
      for (std::size_t e : graph.incoming(v)) groups->sources[b * l.nodes + v].push_back(b * l.edges + e);
    }
  }
  l.incoming = std::move(groups);
  return l;
}

void lstm(Tape& t, Var x, const Block& p, std::size_t hidden, Var& h, Var& c) {
  const Var z = t.affine(t.concat_cols({x, h}), p.weight, p.bias);
  const Var hc = t.lstm_cell(z, c);
  h = t.slice_cols(hc, 0, hidden);
  c = t.slice_cols(hc, hidden, hidden);
}

// current / previous are B×N scaled node features. Returns (B·N)×1 labels.
Var record_step(Tape& t, const SpatioTemporalGraph& graph, const Blocks& p, const SrnnConfig& dims,
                const Layout& layout, StateVars& s, const Array2& current, const Array2& previous) {
  const std::size_t n = layout.nodes, e_count = layout.edges, batch = layout.batch;
  Array2 node_x(batch * n, 1);
  Array2 temporal_x(batch * n, 2);
  Array2 spatial_x(batch * e_count, 2);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t v = 0; v < n; ++v) {
      node_x(b * n + v, 0) = current(b, v);
      temporal_x(b * n + v, 0) = previous(b, v);
      temporal_x(b * n + v, 1) = current(b, v);
    }
    for (std::size_t e = 0; e < e_count; ++e) {
      const auto& edge = graph.spatial_edges()[e];
      spatial_x(b * e_count + e, 0) = current(b, edge.src);
      spatial_x(b * e_count + e, 1) = current(b, edge.dst);
    }
  }

  const Var temporal_in =
      t.relu(t.affine(t.constant(std::move(temporal_x)), p.temporal_embed.weight, p.temporal_embed.bias));
  lstm(t, temporal_in, p.temporal_lstm, dims.edge_hidden, s.temporal_h, s.temporal_c);

  Var aggregated;
  if (e_count > 0) {
    const Var spatial_in =
        t.relu(t.affine(t.constant(std::move(spatial_x)), p.spatial_embed.weight, p.spatial_embed.bias));
    lstm(t, spatial_in, p.spatial_lstm, dims.edge_hidden, s.spatial_h, s.spatial_c);
    aggregated = t.mean_rows(s.spatial_h, layout.incoming);
  } else {
    aggregated = t.constant(Array2(batch * n, dims.edge_hidden));
  }

  const Var joined = t.concat_cols({t.constant(std::move(node_x)), s.temporal_h, aggregated});
  const Var node_in = t.relu(t.affine(joined, p.node_embed.weight, p.node_embed.bias));
  lstm(t, node_in, p.node_lstm, dims.node_hidden, s.node_h, s.node_c);
  return t.affine(s.node_h, p.head.weight, p.head.bias);
}

StateVars zero_state_vars(Tape& t, const Layout& layout, const SrnnConfig& dims) {
  StateVars s;
  s.temporal_h = t.constant(Array2(layout.batch * layout.nodes, dims.edge_hidden));
  s.temporal_c = t.constant(Array2(layout.batch * layout.nodes, dims.edge_hidden));
  s.spatial_h = t.constant(Array2(layout.batch * layout.edges, dims.edge_hidden));
  s.spatial_c = t.constant(Array2(layout.batch * layout.edges, dims.edge_hidden));
  s.node_h = t.constant(Array2(layout.batch * layout.nodes, dims.node_hidden));
  s.node_c = t.constant(Array2(layout.batch * layout.nodes, dims.node_hidden));
  return s;
}

void check_windows(const SpatioTemporalGraph& graph, std::span<const Array2* const> windows) {
  if (windows.empty()) throw InputError("no windows to evaluate");
  const std::size_t rows = windows.front()->rows();
  if (rows < 2) {
    throw InputError("window needs a predecessor step and at least one input step, got " +
                     std::to_string(rows) + " row(s)");
  }
  for (const Array2* w : windows) {
    if (w->rows() != rows || w->cols() != graph.num_nodes()) {
      throw InputError("window shape " + w->shape_string() + " does not match " +
                       compute::shape_string(rows, graph.num_nodes()));
    }
  }
}

// Row k of every window stacked into a B×N matrix.
Array2 gather_step(std::span<const Array2* const> windows, std::size_t k) {
  const std::size_t n = windows.front()->cols();
  Array2 out(windows.size(), n);
  for (std::size_t b = 0; b < windows.size(); ++b) {
    std::copy(windows[b]->row(k).begin(), windows[b]->row(k).end(), out.row(b).begin());
  }
  return out;
}

Array2 stack_states(const std::vector<LstmState>& states, bool cell, std::size_t hidden) {
  Array2 out(states.size(), hidden);
  for (std::size_t r = 0; r < states.size(); ++r) {
    const auto& src = cell ? states[r].c : states[r].h;
    if (src.size() != hidden) throw StateError("state dimension does not match the parameters");
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void unstack_states(const Array2& values, bool cell, std::vector<LstmState>& states) {
  for (std::size_t r = 0; r < states.size(); ++r) {
    auto& dst = cell ? states[r].c : states[r].h;
    std::copy(values.row(r).begin(), values.row(r).end(), dst.begin());
  }
}

// Runs windows forward without recording history; one short-lived tape per step.
// Returns per-step labels as l arrays of B×N.
std::vector<Array2> run_inference(const SpatioTemporalGraph& graph, const ParamSet& params,
                                  std::span<const Array2* const> windows) {
  check_windows(graph, windows);
  const SrnnConfig dims = dims_from_params(params);
  const Layout layout = make_layout(graph, windows.size());
  const std::size_t steps = windows.front()->rows() - 1;

  Array2 th(layout.batch * layout.nodes, dims.edge_hidden), tc = th;
  Array2 sh(layout.batch * layout.edges, dims.edge_hidden), sc = sh;
  Array2 nh(layout.batch * layout.nodes, dims.node_hidden), nc = nh;
  std::vector<Array2> out;
  out.reserve(steps);
  for (std::size_t k = 1; k <= steps; ++k) {
    Tape t(false);
    const Blocks p = bind(t, params);
    StateVars s{t.constant(std::move(th)), t.constant(std::move(tc)), t.constant(std::move(sh)),
                t.constant(std::move(sc)),  t.constant(std::move(nh)), t.constant(std::move(nc))};
    const Var y = record_step(t, graph, p, dims, layout, s, gather_step(windows, k),
                              gather_step(windows, k - 1));
    th = t.value(s.temporal_h);
    tc = t.value(s.temporal_c);
    sh = t.value(s.spatial_h);
    sc = t.value(s.spatial_c);
    nh = t.value(s.node_h);
    nc = t.value(s.node_c);
    out.emplace_back(layout.batch, layout.nodes, std::vector<double>(t.value(y).values().begin(),
                                                                     t.value(y).values().end()));
  }
  return out;
}

}  // namespace

std::vector<double> forward_step(const SpatioTemporalGraph& graph, const ParamSet& params,
                                 RnnStateStore& states, std::span<const double> x_t,
                                 std::span<const double> x_prev) {
  if (!states.initialized) throw StateError("RNN states are not initialized");
  const std::size_t n = graph.num_nodes();
  if (x_t.size() != n || x_prev.size() != n) {
    throw InputError("expected " + std::to_string(n) + " node features per step");
  }
  if (states.temporal.size() != n || states.node.size() != n ||
      states.spatial.size() != graph.num_spatial_edges()) {
    throw StateError("state store does not match the graph");
  }
  const SrnnConfig dims = dims_from_params(params);
  const Layout layout = make_layout(graph, 1);

  Tape t(false);
  const Blocks p = bind(t, params);
  StateVars s{t.constant(stack_states(states.temporal, false, dims.edge_hidden)),
              t.constant(stack_states(states.temporal, true, dims.edge_hidden)),
              t.constant(stack_states(states.spatial, false, dims.edge_hidden)),
              t.constant(stack_states(states.spatial, true, dims.edge_hidden)),
              t.constant(stack_states(states.node, false, dims.node_hidden)),
              t.constant(stack_states(states.node, true, dims.node_hidden))};
  const Var y = record_step(t, graph, p, dims, layout, s, Array2::row_vector(x_t),
                            Array2::row_vector(x_prev));
  unstack_states(t.value(s.temporal_h), false, states.temporal);
  unstack_states(t.value(s.temporal_c), true, states.temporal);
  unstack_states(t.value(s.spatial_h), false, states.spatial);
  unstack_states(t.value(s.spatial_c), true, states.spatial);
  unstack_states(t.value(s.node_h), false, states.node);
  unstack_states(t.value(s.node_c), true, states.node);
  const auto values = t.value(y).values();
  return {values.begin(), values.end()};
}

Array2 forward_window(const SpatioTemporalGraph& graph, const ParamSet& params, const Array2& window) {
  const Array2* ptr = &window;
  const auto steps = run_inference(graph, params, std::span<const Array2* const>(&ptr, 1));
  Array2 out(steps.size(), graph.num_nodes());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    std::copy(steps[k].row(0).begin(), steps[k].row(0).end(), out.row(k).begin());
  }
  return out;
}

Var record_windows(Tape& tape, const SpatioTemporalGraph& graph, ParamSet& params,
                   std::span<const Array2* const> windows) {
  check_windows(graph, windows);
  const SrnnConfig dims = dims_from_params(params);
  const Layout layout = make_layout(graph, windows.size());
  const Blocks p = bind(tape, params);
  StateVars s = zero_state_vars(tape, layout, dims);
  std::vector<Var> labels;
  for (std::size_t k = 1; k < windows.front()->rows(); ++k) {
    labels.push_back(record_step(tape, graph, p, dims, layout, s, gather_step(windows, k),
                                 gather_step(windows, k - 1)));
  }
  return tape.concat_rows(labels);
}

double loss_and_gradient(const SpatioTemporalGraph& graph, ParamSet& params,
                         std::span<const data::WindowSample* const> batch) {
  if (batch.empty()) throw InputError("empty batch");
  std::vector<const Array2*> inputs;
  for (const auto* w : batch) inputs.push_back(&w->inputs);
  const std::size_t l = batch.front()->inputs.rows() - 1;
  const std::size_t n = graph.num_nodes();
  Array2 target(l * batch.size() * n, 1);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Array2& tg = batch[b]->targets;
    if (tg.rows() != l || tg.cols() != n) {
      throw InputError("window targets " + tg.shape_string() + " do not match " +
                       compute::shape_string(l, n));
    }
    for (std::size_t k = 0; k < l; ++k) {
      for (std::size_t v = 0; v < n; ++v) target[(k * batch.size() + b) * n + v] = tg(k, v);
    }
  }
  Tape tape;
  const Var pred = record_windows(tape, graph, params, inputs);
  const Var loss = tape.mse(pred, target);
  const double value = tape.value(loss)[0];
  if (!std::isfinite(value)) throw NumericError("loss is not finite");
  tape.backward(loss);
  return value;
}

Array2 forecast_final(const SpatioTemporalGraph& graph, const ParamSet& params,
                      std::span<const data::WindowSample> windows) {
  constexpr std::size_t kChunk = 64;
  Array2 out(windows.size(), graph.num_nodes());
  for (std::size_t begin = 0; begin < windows.size(); begin += kChunk) {
    const std::size_t end = std::min(windows.size(), begin + kChunk);
    std::vector<const Array2*> chunk;
    for (std::size_t i = begin; i < end; ++i) chunk.push_back(&windows[i].inputs);
    const auto steps = run_inference(graph, params, chunk);
    const Array2& last = steps.back();
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      std::copy(last.row(b).begin(), last.row(b).end(), out.row(begin + b).begin());
    }
  }
  return out;
}

std::vector<double> predict_next(const SpatioTemporalGraph& graph, const ParamSet& params,
                                 const data::ScalingStats& scaling, const Array2& raw_window) {
  Array2 scaled = raw_window;
  std::size_t clamped = 0;
  for (double& v : scaled.values()) {
    const double s = scaling.scale(v);
    v = std::clamp(s, 0.0, 1.0);
    if (v != s) ++clamped;
  }
  if (clamped > 0) {
    data::warn(std::to_string(clamped) + " window value(s) outside the training range clamped");
  }
  const Array2 labels = forward_window(graph, params, scaled);
  std::vector<double> out(graph.num_nodes());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = scaling.unscale(labels(labels.rows() - 1, v));
  return out;
}

stgraph::SpatioTemporalGraph chain_graph(std::size_t nodes) {
  if (nodes < 2) throw InputError("a chain needs at least 2 nodes");
  stgraph::RoadNetwork net;
  std::vector<std::string> sensors;
  for (std::size_t i = 0; i < nodes; ++i) {
    sensors.push_back("s" + std::to_string(i));
    if (i > 0) net.add_link(sensors[i - 1], sensors[i]);
  }
  return stgraph::build_spatial_graph(net, sensors);
}

compute::GradCheckReport check_gradients(std::size_t nodes, const SrnnConfig& config, std::size_t l,
                                         const compute::GradCheckOptions& options) {
  if (l < 1) throw InputError("l must be at least 1");
  const auto graph = chain_graph(nodes);
  ParamSet params = init_params(config);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  data::WindowSample sample;
  sample.inputs = Array2(l + 1, nodes);
  sample.targets = Array2(l, nodes);
  for (double& v : sample.inputs.values()) v = unit(rng);
  for (double& v : sample.targets.values()) v = unit(rng);
  const data::WindowSample* batch[] = {&sample};
  return compute::finite_diff_check(
      [&](ParamSet& p) { return loss_and_gradient(graph, p, batch); }, params, options);
}

}  // namespace srnn::model
