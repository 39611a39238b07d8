#include "srnn/compute/array.hpp"

#include <algorithm>
#include <cmath>

#include "srnn/error.hpp"

namespace srnn::compute {

Array2::Array2(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(values.begin(), values.end()) {
  if (data_.size() != rows * cols) {
    throw ShapeError("value count " + std::to_string(data_.size()) + " does not match shape " +
                     compute::shape_string(rows, cols));
  }
}

Array2 Array2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged row list");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Array2(r, c, std::move(values));
}

Array2 Array2::row_vector(std::span<const double> values) {
  return Array2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Array2 Array2::column_vector(std::span<const double> values) {
  return Array2(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Array2::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Array2::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Array2::shape_string() const { return compute::shape_string(rows_, cols_); }

std::string shape_string(std::size_t rows, std::size_t cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

}  // namespace srnn::compute
