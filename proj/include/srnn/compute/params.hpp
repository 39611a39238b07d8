#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "srnn/compute/array.hpp"

namespace srnn::compute {

struct Parameter {
  Array2 value;
  Array2 grad;  // same shape as value
};

// Trainable arrays keyed by path ("block.name"), iterated in sorted path order.
// Gradients accumulate additively; callers zero them between batches.
class ParamSet {
 public:
  using Map = std::map<std::string, Parameter>;

  Parameter& add(const std::string& path, Array2 value);
  Parameter& at(const std::string& path);
  const Parameter& at(const std::string& path) const;
  bool contains(const std::string& path) const { return params_.count(path) != 0; }

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> paths() const;

  void zero_grad();
  void scale_grad(double factor);

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

  // Compares paths, shapes and values bit-for-bit; gradients are ignored.
  bool same_values(const ParamSet& other) const;

 private:
  Map params_;
};

}  // namespace srnn::compute
