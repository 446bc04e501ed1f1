#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bvmdp/distribution.h"
#include "bvmdp/grid_path.h"

namespace bvmdp {

// g(x) = 1{x <= threshold}: the closed-right indicator 1_{(-inf, c]}, so that
// the functional of indicator(z) under a measure is its CDF at z.
struct IndicatorFn {
  double threshold = 0.0;
};
// g(x) = sum of jumps at locations <= x; right-continuous, g(-inf) = 0.
struct PiecewiseConstantFn {
  std::vector<double> locations;
  std::vector<double> jumps;
};
// g(x) = intercept + slope * clamp(x, lo, hi). Either end may be infinite,
// in which case g is not of bounded variation (unless slope == 0).
struct AffineClampedFn {
  double slope = 1.0;
  double intercept = 0.0;
  double lo = 0.0;
  double hi = 1.0;
};
// Linear interpolation of a table; constant beyond the end knots.
struct LipschitzTableFn {
  std::vector<double> grid;
  std::vector<double> values;
};

class FunctionSpec {
 public:
  using Kind = std::variant<IndicatorFn, PiecewiseConstantFn, AffineClampedFn,
                            LipschitzTableFn>;

  FunctionSpec(Kind kind, std::string label);

  static FunctionSpec indicator(double threshold);
  static FunctionSpec piecewise_constant(std::vector<double> locations,
                                         std::vector<double> jumps);
  static FunctionSpec affine_clamped(double slope, double intercept, double lo,
                                     double hi);
  static FunctionSpec identity();
  static FunctionSpec constant(double value);
  static FunctionSpec lipschitz_table(std::vector<double> grid,
                                      std::vector<double> values);

  const Kind& kind() const { return kind_; }
  const std::string& label() const { return label_; }
  FunctionSpec with_label(std::string label) const;

  double operator()(double x) const { return evaluate(x); }
  double evaluate(double x) const;
  bool is_constant() const;
  // Points where g is non-smooth (jumps, knots, support ends).
  std::vector<double> breakpoints() const;

 private:
  Kind kind_;
  std::string label_;
};

double evaluate(const FunctionSpec& g, double x);
double total_variation(const FunctionSpec& g);

// A class of functions with a pointwise envelope G >= |g|.
class ClassSpec {
 public:
  ClassSpec(std::vector<FunctionSpec> members, FunctionSpec envelope);

  const std::vector<FunctionSpec>& members() const { return members_; }
  const FunctionSpec& envelope() const { return envelope_; }

 private:
  std::vector<FunctionSpec> members_;
  FunctionSpec envelope_;
};

// Closed-right indicators at F0 quantile levels (2k+1)/(2*count),
// k = 0..count-1, with envelope 1.
ClassSpec indicator_quantile_class(const BaseDistribution& f0, std::size_t count);

struct PointMass {
  double location = 0.0;
  double mass = 0.0;
  // True when g is left-continuous at the jump (it takes effect just after
  // `location`, as for 1_{(-inf, c]}); false for right-continuous jumps.
  bool left_continuous = false;
};

struct DensityPiece {
  double lo = 0.0;
  double hi = 0.0;
  double density = 0.0;
};

// Jordan decomposition dg = dg+ - dg-, both parts nonnegative, together with
// the constant g(-inf).
struct SignedMeasure {
  double base_value = 0.0;
  std::vector<PointMass> positive_atoms;
  std::vector<PointMass> negative_atoms;
  std::vector<DensityPiece> positive_density;
  std::vector<DensityPiece> negative_density;

  double positive_mass() const;
  double negative_mass() const;
  double total_variation() const { return positive_mass() + negative_mass(); }
  // g(-inf) + dg((-inf, x]).
  double reconstruct(double x) const;
};

SignedMeasure jordan_decompose(const FunctionSpec& g);

// -integral path d(g). At a right-continuous jump the path enters through its
// left limit, at a left-continuous jump through its value; with that
// convention sum_j g(a_j) (H(a_j) - H(a_j-)) = stieltjes_integral(H, g) for
// step paths H vanishing at both ends. Density parts are integrated exactly
// piece by piece.
double stieltjes_integral(const GridPath& path, const FunctionSpec& g);

// P0 (g - P0 g)^2.
double sigma_g_squared(const FunctionSpec& g, const BaseDistribution& f0);
// P_n (g - P_n g)^2 under the empirical measure of `data`.
double empirical_variance(const FunctionSpec& g, std::span<const double> data);

void to_json(nlohmann::json& j, const FunctionSpec& g);
FunctionSpec function_spec_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const ClassSpec& c);
ClassSpec class_spec_from_json(const nlohmann::json& j, const BaseDistribution& f0);

}  // namespace bvmdp
