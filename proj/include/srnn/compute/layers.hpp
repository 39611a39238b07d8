#pragma once

#include <span>
#include <vector>

#include "srnn/compute/array.hpp"

namespace srnn::compute {

// Hidden activation and cell state of one LSTM unit.
struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  static LstmState zeros(std::size_t hidden) {
    return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)};
  }
  bool operator==(const LstmState&) const = default;
};

// Gate rows of an LSTM weight matrix are stacked in the order input, forget,
// cell candidate, output. weight is 4H × (in + H) acting on [x, h]; bias is 1 × 4H.
enum class Gate : std::size_t { kInput = 0, kForget = 1, kCell = 2, kOutput = 3 };

// y = W x + b
std::vector<double> linear(const Array2& weight, std::span<const double> bias,
                           std::span<const double> x);
// max(0, W x + b)
std::vector<double> embed_relu(const Array2& weight, std::span<const double> bias,
                               std::span<const double> x);

LstmState lstm_step(const Array2& weight, std::span<const double> bias, std::span<const double> x,
                    const LstmState& state);

double mse(std::span<const double> pred, std::span<const double> target);

double sigmoid(double x);

}  // namespace srnn::compute
