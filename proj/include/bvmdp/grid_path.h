#pragma once

#include <ostream>
#include <span>
#include <vector>

namespace bvmdp {

enum class Interpolation { kStepRight, kLinear };

// A path sampled on a strictly increasing finite grid. A step path is
// right-continuous and constant after its last grid point, so its domain is
// [grid.front(), +inf); a linear path is defined on [grid.front(), grid.back()].
class GridPath {
 public:
  GridPath(std::vector<double> grid, std::vector<double> values,
           Interpolation interpolation);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  Interpolation interpolation() const { return interpolation_; }
  std::size_t size() const { return grid_.size(); }

  double at(double x) const;
  // lim_{y -> x-} path(y); for x at the left edge of the domain this is the
  // value itself.
  double left_limit(double x) const;
  // Value at a grid point, matched within `tolerance`; throws OutOfDomain if
  // no grid point is that close.
  double at_grid_point(double x, double tolerance = 1e-12) const;
  bool covers(double x) const;

  void write_csv(std::ostream& out) const;

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
  Interpolation interpolation_;
};

}  // namespace bvmdp
