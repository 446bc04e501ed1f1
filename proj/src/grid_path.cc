#include "bvmdp/grid_path.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <string>

#include "bvmdp/errors.h"

namespace bvmdp {

GridPath::GridPath(std::vector<double> grid, std::vector<double> values,
                   Interpolation interpolation)
    : grid_(std::move(grid)), values_(std::move(values)), interpolation_(interpolation) {
  if (grid_.empty() || grid_.size() != values_.size()) {
    throw InvalidParameter("GridPath: grid and values must be nonempty and equal length");
  }
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!std::isfinite(grid_[i]) || !std::isfinite(values_[i])) {
      throw InvalidParameter("GridPath: non-finite grid point or value");
    }
    if (i > 0 && !(grid_[i] > grid_[i - 1])) {
      throw InvalidParameter("GridPath: grid must be strictly increasing");
    }
  }
}

bool GridPath::covers(double x) const {
  if (x < grid_.front()) return false;
  return interpolation_ == Interpolation::kStepRight || x <= grid_.back();
}

double GridPath::at(double x) const {
  if (!covers(x)) {
    throw OutOfDomain("GridPath: point " + std::to_string(x) + " outside path domain");
  }
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  const auto k = static_cast<std::size_t>(it - grid_.begin()) - 1;
  if (interpolation_ == Interpolation::kStepRight || k + 1 == grid_.size()) {
    return values_[k];
  }
  const double w = (x - grid_[k]) / (grid_[k + 1] - grid_[k]);
  return values_[k] + w * (values_[k + 1] - values_[k]);
}

double GridPath::left_limit(double x) const {
  if (interpolation_ == Interpolation::kLinear || x <= grid_.front()) return at(x);
  const auto it = std::lower_bound(grid_.begin(), grid_.end(), x);
  return values_[static_cast<std::size_t>(it - grid_.begin()) - 1];
}

double GridPath::at_grid_point(double x, double tolerance) const {
  auto it = std::lower_bound(grid_.begin(), grid_.end(), x);
  std::size_t best = grid_.size();
  if (it != grid_.end() && std::fabs(*it - x) <= tolerance) {
    best = static_cast<std::size_t>(it - grid_.begin());
  } else if (it != grid_.begin() && std::fabs(*(it - 1) - x) <= tolerance) {
    best = static_cast<std::size_t>(it - grid_.begin()) - 1;
  }
  if (best == grid_.size()) {
    throw OutOfDomain("GridPath: no grid point at " + std::to_string(x));
  }
  return values_[best];
}

void GridPath::write_csv(std::ostream& out) const {
  out << "grid,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    out << grid_[i] << ',' << values_[i] << '\n';
  }
}

}  // namespace bvmdp
