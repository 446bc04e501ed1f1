#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "bvmdp/distribution.h"
#include "bvmdp/function_classes.h"
#include "bvmdp/grid_path.h"
#include "bvmdp/rng.h"

namespace bvmdp {

inline constexpr double kDefaultTruncEps = 1e-8;

// Truncated stick-breaking draw. The mass left over after truncation sits on
// `residual_atom`; weights plus residual_mass sum to one.
struct DiscreteDistribution {
  std::vector<double> atoms;
  std::vector<double> weights;
  double residual_mass = 0.0;
  double residual_atom = 0.0;

  bool empty() const { return atoms.empty() && residual_mass == 0.0; }
  std::size_t stick_count() const { return atoms.size(); }
};

// One posterior realization V Q + (1 - V) sum_i w_i delta_{Z_i}.
class PosteriorDraw {
 public:
  PosteriorDraw(double v_n, DiscreteDistribution prior_part,
                std::vector<double> boot_weights, std::vector<double> atoms);

  double v_n() const { return v_n_; }
  const DiscreteDistribution& prior_part() const { return prior_part_; }
  const std::vector<double>& boot_weights() const { return boot_weights_; }
  const std::vector<double>& atoms() const { return atoms_; }
  std::size_t n() const { return atoms_.size(); }

  // F_n(x) = P_n(-inf, x] and F_n(x-).
  double cdf(double x) const;
  double cdf_left(double x) const;
  // Bootstrap part alone, sum_i w_i 1{Z_i <= x}.
  double bootstrap_cdf(double x) const;
  double prior_cdf(double x) const;
  double prior_cdf_left(double x) const;

  void write_csv(std::ostream& out) const;

 private:
  double v_n_;
  DiscreteDistribution prior_part_;
  std::vector<double> boot_weights_;
  std::vector<double> atoms_;
  // Sorted atoms and running weight sums, for O(log n) CDF queries.
  std::vector<double> sorted_atoms_;
  std::vector<double> cumulative_boot_;
  std::vector<double> sorted_prior_atoms_;
  std::vector<double> cumulative_prior_;
};

DiscreteDistribution dp_prior_draw(const BaseMeasureSpec& nu, double trunc_eps,
                                   RngStream& stream);

// V_n ~ Beta(|nu|, n); exactly 0 for the bootstrap.
double prior_weight_sample(const BaseMeasureSpec& nu, std::size_t n, RngStream& stream);

PosteriorDraw posterior_draw(const BaseMeasureSpec& nu, std::span<const double> data,
                             double trunc_eps, RngStream& stream);
PosteriorDraw bayesian_bootstrap_draw(std::span<const double> data, RngStream& stream);

double functional(const PosteriorDraw& draw, const FunctionSpec& g);

struct CenteredStatistic {
  double value = 0.0;
  // sqrt(n) V (Q g - sum w g) and sqrt(n) (sum w g - P_n g).
  double prior_term = 0.0;
  double bootstrap_term = 0.0;
};
CenteredStatistic centered_statistic(const PosteriorDraw& draw, const FunctionSpec& g,
                                     std::span<const double> data);

GridPath cdf_path(const PosteriorDraw& draw, const std::vector<double>& grid);

}  // namespace bvmdp
