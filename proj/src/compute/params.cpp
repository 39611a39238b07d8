#include "srnn/compute/params.hpp"

#include <cstring>

#include "srnn/error.hpp"

namespace srnn::compute {

Parameter& ParamSet::add(const std::string& path, Array2 value) {
  if (params_.count(path)) throw InputError("duplicate parameter path '" + path + "'");
  Array2 grad(value.rows(), value.cols());
  auto [it, ok] = params_.emplace(path, Parameter{std::move(value), std::move(grad)});
  return it->second;
}

Parameter& ParamSet::at(const std::string& path) {
  auto it = params_.find(path);
  if (it == params_.end()) throw InputError("unknown parameter path '" + path + "'");
  return it->second;
}

const Parameter& ParamSet::at(const std::string& path) const {
  auto it = params_.find(path);
  if (it == params_.end()) throw InputError("unknown parameter path '" + path + "'");
  return it->second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [path, p] : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParamSet::paths() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [path, p] : params_) out.push_back(path);
  return out;
}

void ParamSet::zero_grad() {
  for (auto& [path, p] : params_) p.grad.fill(0.0);
}

void ParamSet::scale_grad(double factor) {
  for (auto& [path, p] : params_) {
    for (double& g : p.grad.values()) g *= factor;
  }
}

bool ParamSet::same_values(const ParamSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    const Array2& x = a->second.value;
    const Array2& y = b->second.value;
    if (a->first != b->first || x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (x.size() != 0 && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace srnn::compute
