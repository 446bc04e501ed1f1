#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bvmdp/rng.h"

namespace bvmdp {

struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;
};
struct NormalDist {
  double mean = 0.0;
  double sd = 1.0;
};
struct ExponentialDist {
  double rate = 1.0;
};
// Finite discrete law; weights are normalized on construction.
struct PointMassDist {
  std::vector<double> locations;
  std::vector<double> weights;
};

// A named, sampleable and CDF-evaluable distribution on the real line.
class BaseDistribution {
 public:
  using Kind = std::variant<UniformDist, NormalDist, ExponentialDist, PointMassDist>;

  explicit BaseDistribution(Kind kind);

  static BaseDistribution uniform(double lo = 0.0, double hi = 1.0);
  static BaseDistribution normal(double mean = 0.0, double sd = 1.0);
  static BaseDistribution exponential(double rate = 1.0);
  static BaseDistribution point_masses(std::vector<double> locations,
                                       std::vector<double> weights);

  const Kind& kind() const { return kind_; }
  std::string name() const;
  bool is_continuous() const;

  double sample(RngStream& stream) const;
  std::vector<double> sample(std::size_t n, RngStream& stream) const;
  double cdf(double x) const;
  // P(X < x).
  double cdf_left(double x) const;
  // Density; only for continuous kinds.
  double pdf(double x) const;
  // Generalized inverse: inf{x : F(x) >= p}.
  double quantile(double p) const;
  double mean() const;
  double variance() const;

 private:
  Kind kind_;
  // Cumulative weights for point masses, locations sorted.
  std::vector<double> cumulative_;
};

void to_json(nlohmann::json& j, const BaseDistribution& d);
BaseDistribution base_distribution_from_json(const nlohmann::json& j);

// Prior base measure: total mass and, when the mass is positive, the
// normalized distribution. Zero mass is the Bayesian bootstrap.
class BaseMeasureSpec {
 public:
  static BaseMeasureSpec bootstrap();
  BaseMeasureSpec(double total_mass, std::optional<BaseDistribution> base);

  double total_mass() const { return total_mass_; }
  bool is_bootstrap() const { return total_mass_ == 0.0; }
  const BaseDistribution& base() const;
  // nu(-inf, z].
  double measure_cdf(double z) const;

 private:
  double total_mass_;
  std::optional<BaseDistribution> base_;
};

void to_json(nlohmann::json& j, const BaseMeasureSpec& nu);
BaseMeasureSpec base_measure_from_json(const nlohmann::json& j);

}  // namespace bvmdp
