#include "srnn/compute/layers.hpp"

#include <cmath>
#include <string>

#include "srnn/error.hpp"

namespace srnn::compute {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> linear(const Array2& weight, std::span<const double> bias,
                           std::span<const double> x) {
  if (weight.cols() != x.size() || weight.rows() != bias.size()) {
    throw ShapeError("linear: weight " + weight.shape_string() + ", bias " +
                     shape_string(1, bias.size()) + ", input " + shape_string(x.size(), 1));
  }
  std::vector<double> y(bias.begin(), bias.end());
  for (std::size_t r = 0; r < weight.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += weight(r, c) * x[c];
    y[r] += acc;
  }
  return y;
}

std::vector<double> embed_relu(const Array2& weight, std::span<const double> bias,
                               std::span<const double> x) {
  auto y = linear(weight, bias, x);
  for (double& v : y) v = v > 0.0 ? v : 0.0;
  return y;
}

LstmState lstm_step(const Array2& weight, std::span<const double> bias, std::span<const double> x,
                    const LstmState& state) {
  const std::size_t hidden = state.h.size();
  if (state.c.size() != hidden || weight.rows() != 4 * hidden ||
      weight.cols() != x.size() + hidden || bias.size() != 4 * hidden) {
    throw ShapeError("lstm_step: weight " + weight.shape_string() + " does not fit input " +
                     std::to_string(x.size()) + " and hidden " + std::to_string(hidden));
  }
  std::vector<double> joined(x.begin(), x.end());
  joined.insert(joined.end(), state.h.begin(), state.h.end());
  const auto z = linear(weight, bias, joined);

  LstmState next = LstmState::zeros(hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    const double i = sigmoid(z[k]);
    const double f = sigmoid(z[hidden + k]);
    const double g = std::tanh(z[2 * hidden + k]);
    const double o = sigmoid(z[3 * hidden + k]);
    next.c[k] = f * state.c[k] + i * g;
    next.h[k] = o * std::tanh(next.c[k]);
  }
  return next;
}

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty() || pred.size() != target.size()) {
    throw ShapeError("mse: lengths " + std::to_string(pred.size()) + " and " +
                     std::to_string(target.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

}  // namespace srnn::compute
