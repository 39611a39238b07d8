#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "srnn/compute/array.hpp"
#include "srnn/compute/params.hpp"

namespace srnn::compute {

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  bool valid() const noexcept { return tape_id_ != 0; }

 private:
  friend class Tape;
  Var(std::uint64_t tape_id, std::size_t index) : tape_id_(tape_id), index_(index) {}
  std::uint64_t tape_id_ = 0;
  std::size_t index_ = 0;
};

// For each output row, the input rows whose mean it receives. An output row
// with no sources is zero.
struct RowGroups {
  std::size_t input_rows = 0;
  std::vector<std::vector<std::size_t>> sources;
};

// Records matrix-valued operations in evaluation order and replays them in
// reverse to accumulate gradients into the ParamSet leaves. A tape built with
// record_gradients = false only evaluates.
//
// Parameters referenced by a tape must outlive it and must not be added or
// removed while it exists.
class Tape {
 public:
  explicit Tape(bool record_gradients = true);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array2 value);
  // The same path returns the same leaf for the lifetime of the tape.
  Var parameter(ParamSet& params, const std::string& path);
  // Read-only parameter: recorded as a constant, receives no gradient.
  Var parameter(const ParamSet& params, const std::string& path);

  const Array2& value(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // x Wᵀ + b, with x (n×in), W (out×in), b (1×out).
  Var affine(Var x, Var weight, Var bias);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_cols(Var x, std::size_t start, std::size_t count);
  Var mean_rows(Var x, std::shared_ptr<const RowGroups> groups);
  // Fused LSTM cell on gate pre-activations z (n×4H, gate order i, f, g, o)
  // and the previous cell state (n×H). Returns [h' | c'] as n×2H.
  Var lstm_cell(Var gates, Var cell);
  // Mean squared difference against a constant target; 1×1.
  Var mse(Var pred, const Array2& target);

  // Seeds d(loss)/d(loss) = 1 and propagates to every parameter leaf.
  // Throws StateError when nothing was recorded or `loss` is not a 1×1 value
  // of this tape.
  void backward(Var loss);

 private:
  struct Node {
    Array2 value;
    Array2 grad;
    bool needs_grad = false;
    Parameter* param = nullptr;
    std::function<void(Tape&, std::size_t)> backprop;
  };

  std::size_t index(Var v) const;
  Var push(Array2 value, bool needs_grad, std::function<void(Tape&, std::size_t)> backprop);
  bool needs(Var v) const { return nodes_[index(v)].needs_grad; }
  Array2& grad(std::size_t i);

  bool record_;
  std::uint64_t id_;
  bool consumed_ = false;
  std::vector<Node> nodes_;
  std::vector<std::pair<const ParamSet*, std::string>> leaf_keys_;
  std::vector<std::size_t> leaf_nodes_;
};

}  // namespace srnn::compute
