#include "medsel/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace medsel {

Mat64::Mat64(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw std::invalid_argument("Mat64: " + std::to_string(data_.size()) + " values for a " +
                                std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix");
}

void Mat64::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw std::invalid_argument("Mat64::append_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void KahanSum::add(double x) {
  // Neumaier's variant also handles |x| > |sum|.
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace medsel
