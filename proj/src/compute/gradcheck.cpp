#include "srnn/compute/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace srnn::compute {

GradCheckReport finite_diff_check(const LossFn& loss, ParamSet& params,
                                  const GradCheckOptions& options) {
  params.zero_grad();
  loss(params);
  std::map<std::string, Array2> analytic;
  for (const auto& [path, p] : params) analytic.emplace(path, p.grad);

  GradCheckReport report;
  for (auto& [path, p] : params) {
    ParamGradCheck entry;
    entry.path = path;
    const Array2& a = analytic.at(path);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + options.epsilon;
      const double up = loss(params);
      p.value[i] = saved - options.epsilon;
      const double down = loss(params);
      p.value[i] = saved;

      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double denom = std::max({std::abs(a[i]), std::abs(numeric), options.floor});
      const double rel = std::abs(a[i] - numeric) / denom;
      if (rel > entry.max_rel_error || std::isnan(rel)) {
        entry.max_rel_error = std::isnan(rel) ? INFINITY : rel;
        entry.worst_index = i;
        entry.analytic = a[i];
        entry.numeric = numeric;
      }
    }
    entry.pass = entry.max_rel_error < options.tolerance;
    if (report.worst_path.empty() || entry.max_rel_error > report.max_rel_error) {
      report.max_rel_error = entry.max_rel_error;
      report.worst_path = path;
    }
    report.pass = report.pass && entry.pass;
    report.params.push_back(std::move(entry));
  }
  params.zero_grad();
  return report;
}

}  // namespace srnn::compute
