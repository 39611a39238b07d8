#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "srnn/compute/params.hpp"

namespace srnn::compute {

// Evaluates a loss at the current parameter values and accumulates its
// analytic gradient into the parameters' gradient buffers.
using LossFn = std::function<double(ParamSet&)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

struct ParamGradCheck {
  std::string path;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<ParamGradCheck> params;
  double max_rel_error = 0.0;
  std::string worst_path;
  bool pass = true;
};

// Compares the analytic gradient against central differences for every
// scalar of every parameter. Parameter values are restored afterwards.
GradCheckReport finite_diff_check(const LossFn& loss, ParamSet& params,
                                  const GradCheckOptions& options = {});

}  // namespace srnn::compute
