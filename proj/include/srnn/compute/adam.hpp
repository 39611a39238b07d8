#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "srnn/compute/array.hpp"
#include "srnn/compute/params.hpp"

namespace srnn::compute {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::map<std::string, Array2> m;
  std::map<std::string, Array2> v;
  std::uint64_t step = 0;
};

// Bias-corrected Adam update in place. Moments are created lazily for new
// paths. Throws NumericError (leaving everything untouched) if any gradient is
// not finite.
void adam_step(ParamSet& params, AdamState& state, double lr, const AdamConfig& config = {});

}  // namespace srnn::compute
