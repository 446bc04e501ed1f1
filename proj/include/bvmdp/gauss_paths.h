#pragma once

#include <span>
#include <vector>

#include "bvmdp/distribution.h"
#include "bvmdp/grid_path.h"
#include "bvmdp/rng.h"
#include "bvmdp/stats.h"

namespace bvmdp {

// Exact joint draw of a Brownian bridge at the grid points (linear path).
GridPath brownian_bridge(const std::vector<double>& grid, RngStream& stream);

// Values at `points`, drawn from the bridge law conditional on the values of
// `known` (pinned to 0 at 0 and 1 when those are not in its grid). Points
// already in the known grid return their known value. Output is aligned with
// `points`.
std::vector<double> bridge_fill_in(const GridPath& known, std::span<const double> points,
                                   RngStream& stream);

// Partial sums K(., m) = B_1 + ... + B_m of independent bridges on one grid.
class KieferSheet {
 public:
  KieferSheet(std::vector<double> grid, std::vector<std::vector<double>> bridges);

  const std::vector<double>& grid() const { return grid_; }
  std::size_t n() const { return bridges_.size(); }
  GridPath bridge(std::size_t i) const;
  // K(., m) for 0 <= m <= n.
  GridPath slice(std::size_t m) const;

 private:
  std::vector<double> grid_;
  std::vector<std::vector<double>> bridges_;
  std::vector<std::vector<double>> partial_;
};

KieferSheet kiefer(const std::vector<double>& grid, std::size_t n, RngStream& stream);

// z -> path(cdf(z)) as a step path on the cdf grid. The path must have a
// grid point at every cdf value.
GridPath compose_with_cdf(const GridPath& path, const GridPath& cdf);

// Exact sup |a - b| over the union of grid points, both one-sided limits
// included for step paths.
double sup_distance(const GridPath& a, const GridPath& b);

// P(sup |B| <= x) for a Brownian bridge B; 0 for x <= 0.
double kolmogorov_cdf(double x);

// sup_i |B(grid_i)| for `reps` independent bridges; replication r uses
// root.child(r).
std::vector<double> bridge_sup_samples(const std::vector<double>& grid, std::size_t reps,
                                       const RngStream& root, int workers = 1);

// P(sup |G| >= mean_sup + x) against exp(-x^2 / (2 sigma2)).
std::vector<TailRow> borell_check(std::span<const double> sup_samples, double sigma2,
                                  double mean_sup, std::span<const double> x_grid);

// sup_x |F_emp(x) - F0(x)| for sorted data, exact for continuous and discrete F0.
double sup_cdf_distance(std::span<const double> sorted_data, const BaseDistribution& f0);

// P(sup |F_emp - F0| > y) against 2 exp(-2 n y^2).
std::vector<TailRow> dkw_check(const BaseDistribution& f0, std::size_t n, std::size_t reps,
                               std::span<const double> y_grid, const RngStream& root,
                               int workers = 1);

}  // namespace bvmdp
