#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srnn/compute/array.hpp"
#include "srnn/compute/gradcheck.hpp"
#include "srnn/compute/layers.hpp"
#include "srnn/compute/params.hpp"
#include "srnn/compute/tape.hpp"
#include "srnn/data.hpp"
#include "srnn/stgraph.hpp"

namespace srnn::model {

struct SrnnConfig {
  std::size_t node_hidden = 128;
  std::size_t edge_hidden = 256;
  std::size_t embed_dim = 128;
  std::size_t node_input_dim = 1;
  std::size_t edge_input_dim = 2;
  std::uint64_t seed = 0;

  // Throws InputError on a zero dimension or on input dims other than 1 / 2,
  // which are fixed by the edge and node feature definitions.
  void validate() const;
  // Width of the concatenated nodeRNN input: node feature, temporal edge
  // output and aggregated spatial edge output.
  std::size_t node_concat_dim() const { return node_input_dim + 2 * edge_hidden; }

  bool operator==(const SrnnConfig&) const = default;
};

// Parameter blocks, each holding `<block>.weight` and `<block>.bias`.
inline constexpr std::array<std::string_view, 7> kBlockNames = {
    "spatial_edge_embed", "spatial_edge_lstm", "temporal_edge_embed", "temporal_edge_lstm",
    "node_embed",         "node_lstm",         "output_head"};

std::string weight_path(std::string_view block);
std::string bias_path(std::string_view block);

// Weights uniform in ±1/sqrt(fan_in), LSTM forget-gate bias 1, other biases 0.
compute::ParamSet init_params(const SrnnConfig& config);

// Every weight and bias set to zero.
compute::ParamSet zero_params(const SrnnConfig& config);

std::size_t count_params(const compute::ParamSet& params);
// Closed form: 2·[(e·2+e) + 4(h_e(e+h_e)+h_e)] + (e(1+2h_e)+e) + 4(h_n(e+h_n)+h_n) + (h_n+1).
std::size_t expected_param_count(const SrnnConfig& config);

// Reads the dimensions back from block shapes (seed is left 0). Throws
// ShapeError naming the first block that is missing or inconsistent.
SrnnConfig dims_from_params(const compute::ParamSet& params);

// One LSTM state per temporal edge, per spatial edge and per node, aligned
// with the graph's canonical orders.
struct RnnStateStore {
  std::vector<compute::LstmState> temporal;
  std::vector<compute::LstmState> spatial;
  std::vector<compute::LstmState> node;
  bool initialized = false;

  void reset();
};

RnnStateStore init_states(const stgraph::SpatioTemporalGraph& graph, const compute::ParamSet& params);

// Advances every edge and node state by one step and returns the node labels
// (predictions of x^{t+1}) in node order. x_t and x_prev are scaled node
// features in node order.
std::vector<double> forward_step(const stgraph::SpatioTemporalGraph& graph,
                                 const compute::ParamSet& params, RnnStateStore& states,
                                 std::span<const double> x_t, std::span<const double> x_prev);

// window is (l+1)×N: the predecessor step followed by the l input steps.
// Returns the l×N per-step labels; the last row is the next-step forecast.
compute::Array2 forward_window(const stgraph::SpatioTemporalGraph& graph,
                               const compute::ParamSet& params, const compute::Array2& window);

// Records a batch of equally sized windows on `tape`. The result is an
// (l·B·N)×1 column ordered by step, then window, then node. The
// parameters become trainable leaves of the tape.
compute::Var record_windows(compute::Tape& tape, const stgraph::SpatioTemporalGraph& graph,
                            compute::ParamSet& params,
                            std::span<const compute::Array2* const> windows);

// Mean squared error over all l·N labels of every window; accumulates
// d(loss)/d(params) scaled so the gradient is that of the batch mean.
double loss_and_gradient(const stgraph::SpatioTemporalGraph& graph, compute::ParamSet& params,
                         std::span<const data::WindowSample* const> batch);

// Final-step forecasts for many windows, evaluated in chunks. Returns
// windows.size()×N scaled labels.
compute::Array2 forecast_final(const stgraph::SpatioTemporalGraph& graph,
                               const compute::ParamSet& params,
                               std::span<const data::WindowSample> windows);

// Scales a raw (m)×N km/h window (first row is the predecessor step), runs it
// and returns the next-step speeds in km/h, node order. Out-of-range inputs
// are clamped with a warning.
std::vector<double> predict_next(const stgraph::SpatioTemporalGraph& graph,
                                 const compute::ParamSet& params, const data::ScalingStats& scaling,
                                 const compute::Array2& raw_window);

// Central-difference check of the full model on a chain of `nodes` sensors
// with one random window of length l (inputs and targets uniform in [0, 1]).
compute::GradCheckReport check_gradients(std::size_t nodes, const SrnnConfig& config, std::size_t l,
                                         const compute::GradCheckOptions& options = {});

// Chain road network s0 - s1 - ... with every segment a sensor.
stgraph::SpatioTemporalGraph chain_graph(std::size_t nodes);

}  // namespace srnn::model
