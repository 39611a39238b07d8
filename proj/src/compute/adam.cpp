#include "srnn/compute/adam.hpp"

#include <cmath>

#include "srnn/error.hpp"

namespace srnn::compute {

void adam_step(ParamSet& params, AdamState& state, double lr, const AdamConfig& config) {
  for (const auto& [path, p] : params) {
    if (!p.grad.all_finite()) throw NumericError("non-finite gradient in '" + path + "'");
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);

  for (auto& [path, p] : params) {
    auto [mi, m_new] = state.m.try_emplace(path, p.value.rows(), p.value.cols());
    auto [vi, v_new] = state.v.try_emplace(path, p.value.rows(), p.value.cols());
    Array2& m = mi->second;
    Array2& v = vi->second;
    if (m.size() != p.value.size() || v.size() != p.value.size()) {
      throw ShapeError("optimizer moments for '" + path + "' do not match parameter shape");
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace srnn::compute
