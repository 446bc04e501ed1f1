#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bvmdp/errors.h"
#include "bvmdp/function_classes.h"
#include "bvmdp/grid_path.h"
#include "bvmdp/rng.h"

namespace bvmdp {
namespace {

FunctionSpec sin_table(std::size_t points) {
  std::vector<double> grid(points), values(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(points - 1);
    values[i] = std::sin(grid[i]);
  }
  return FunctionSpec::lipschitz_table(grid, values);
}

TEST(Evaluate, Examples) {
  EXPECT_EQ(FunctionSpec::indicator(0.0)(0.0), 1.0);
  EXPECT_EQ(FunctionSpec::indicator(0.0)(0.5), 0.0);
  EXPECT_EQ(FunctionSpec::affine_clamped(1.0, 0.0, 0.0, 1.0)(0.25), 0.25);
  EXPECT_EQ(FunctionSpec::affine_clamped(1.0, 0.0, 0.0, 1.0)(7.0), 1.0);
  EXPECT_EQ(FunctionSpec::identity()(-3.5), -3.5);
  EXPECT_EQ(FunctionSpec::constant(2.0)(1e9), 2.0);
  const auto pc = FunctionSpec::piecewise_constant({0.0, 1.0}, {2.0, -1.0});
  EXPECT_EQ(pc(-1.0), 0.0);
  EXPECT_EQ(pc(0.0), 2.0);
  EXPECT_EQ(pc(1.0), 1.0);
  const auto lt = FunctionSpec::lipschitz_table({0.0, 1.0}, {0.0, 2.0});
  EXPECT_EQ(lt(0.5), 1.0);
  EXPECT_EQ(lt(-1.0), 0.0);
  EXPECT_EQ(lt(5.0), 2.0);
}

TEST(Evaluate, ConstantDetection) {
  EXPECT_TRUE(FunctionSpec::constant(3.0).is_constant());
  EXPECT_TRUE(FunctionSpec::piecewise_constant({1.0, 1.0}, {1.0, -1.0}).is_constant());
  EXPECT_FALSE(FunctionSpec::indicator(0.0).is_constant());
  EXPECT_TRUE(FunctionSpec::lipschitz_table({0.0, 1.0}, {2.0, 2.0}).is_constant());
}

TEST(Evaluate, RejectsInvalidSpecs) {
  EXPECT_THROW(FunctionSpec::piecewise_constant({0.0}, {1.0, 2.0}), InvalidParameter);
  EXPECT_THROW(FunctionSpec::affine_clamped(1.0, 0.0, 1.0, 0.0), InvalidParameter);
  EXPECT_THROW(FunctionSpec::lipschitz_table({0.0, 0.0}, {1.0, 2.0}), InvalidParameter);
  EXPECT_THROW(FunctionSpec::indicator(INFINITY), InvalidParameter);
}

TEST(TotalVariation, Examples) {
  EXPECT_EQ(total_variation(FunctionSpec::indicator(0.3)), 1.0);
  EXPECT_EQ(total_variation(FunctionSpec::piecewise_constant({0.0, 1.0, 2.0}, {2.0, -1.0, 0.5})),
            3.5);
  EXPECT_NEAR(total_variation(sin_table(10000)), 4.0, 1e-3);
  EXPECT_EQ(total_variation(FunctionSpec::affine_clamped(-2.0, 1.0, 0.0, 3.0)), 6.0);
  EXPECT_TRUE(std::isinf(total_variation(FunctionSpec::identity())));
}

TEST(Jordan, Indicator) {
  // 1_{(-inf, c]} starts at 1 and drops by 1 just after c.
  const SignedMeasure m = jordan_decompose(FunctionSpec::indicator(0.25));
  EXPECT_EQ(m.base_value, 1.0);
  EXPECT_TRUE(m.positive_atoms.empty());
  ASSERT_EQ(m.negative_atoms.size(), 1u);
  EXPECT_EQ(m.negative_atoms[0].location, 0.25);
  EXPECT_EQ(m.negative_atoms[0].mass, 1.0);
  EXPECT_TRUE(m.negative_atoms[0].left_continuous);
  EXPECT_EQ(m.total_variation(), 1.0);
}

TEST(Jordan, PiecewiseConstant) {
  const SignedMeasure m = jordan_decompose(FunctionSpec::piecewise_constant({0.0, 1.0}, {2.0, -1.0}));
  ASSERT_EQ(m.positive_atoms.size(), 1u);
  ASSERT_EQ(m.negative_atoms.size(), 1u);
  EXPECT_EQ(m.positive_atoms[0].location, 0.0);
  EXPECT_EQ(m.positive_atoms[0].mass, 2.0);
  EXPECT_EQ(m.negative_atoms[0].location, 1.0);
  EXPECT_EQ(m.negative_atoms[0].mass, 1.0);
}

TEST(Jordan, SinTable) {
  const SignedMeasure m = jordan_decompose(sin_table(10000));
  EXPECT_NEAR(m.positive_mass(), 2.0, 1e-3);
  EXPECT_NEAR(m.negative_mass(), 2.0, 1e-3);
}

TEST(Jordan, ReconstructsFunction) {
  const std::vector<FunctionSpec> gs{
      FunctionSpec::indicator(0.5), FunctionSpec::piecewise_constant({0.0, 1.0}, {2.0, -1.0}),
      FunctionSpec::affine_clamped(-2.0, 1.0, 0.0, 3.0),
      FunctionSpec::lipschitz_table({0.0, 0.5, 2.0}, {1.0, -1.0, 4.0})};
  for (const auto& g : gs) {
    const SignedMeasure m = jordan_decompose(g);
    for (double x = -1.0; x <= 4.0; x += 0.125) {
      EXPECT_NEAR(m.reconstruct(x), g(x), 1e-12) << g.label() << " x=" << x;
    }
  }
}

TEST(Jordan, UnboundedAffineUnsupported) {
  EXPECT_THROW(jordan_decompose(FunctionSpec::identity()), UnsupportedOperation);
}

TEST(Stieltjes, Examples) {
  const auto g = FunctionSpec::piecewise_constant({0.0, 1.0}, {2.0, -1.0});
  const GridPath one({-1.0}, {1.0}, Interpolation::kStepRight);
  EXPECT_NEAR(stieltjes_integral(one, g), -1.0, 1e-15);
  const GridPath zero({-1.0, 2.0}, {0.0, 0.0}, Interpolation::kStepRight);
  EXPECT_EQ(stieltjes_integral(zero, g), 0.0);
  // The indicator drops by one at 0.5, so -int path dg = path(0.5).
  const GridPath id({0.0, 1.0}, {0.0, 1.0}, Interpolation::kLinear);
  EXPECT_NEAR(stieltjes_integral(id, FunctionSpec::indicator(0.5)), 0.5, 1e-15);
  // Linear path against a density: -int_0^1 x d(2x) = -1.
  EXPECT_NEAR(stieltjes_integral(id, FunctionSpec::affine_clamped(2.0, 0.0, 0.0, 1.0)), -1.0,
              1e-15);
}

TEST(Stieltjes, OutOfDomainAtom) {
  const GridPath p({0.0, 1.0}, {0.0, 0.0}, Interpolation::kLinear);
  EXPECT_THROW(stieltjes_integral(p, FunctionSpec::indicator(2.0)), OutOfDomain);
}

// Summation by parts: sum_j g(a_j) (H(a_j) - H(a_j-)) = -int H dg for a step
// path H that vanishes before its first jump and after its last.
TEST(Stieltjes, IntegrationByPartsProperty) {
  RngStream s(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(s.uniform() * 30);
    std::vector<double> grid(k + 1);
    grid[0] = -2.0;
    for (std::size_t i = 1; i <= k; ++i) grid[i] = grid[i - 1] + 0.01 + 0.3 * s.uniform();
    std::vector<double> values(k + 1, 0.0);
    for (std::size_t i = 1; i < k; ++i) values[i] = gaussian_sample(s);
    const GridPath h(grid, values, Interpolation::kStepRight);

    std::vector<double> locs, jumps, tgrid, tvals;
    for (int j = 0; j < 4; ++j) {
      locs.push_back(-1.9 + 4.4 * s.uniform());
      jumps.push_back(gaussian_sample(s));
    }
    for (int j = 0; j < 6; ++j) {
      tgrid.push_back(-2.0 + j * 0.9 + 0.1 * s.uniform());
      tvals.push_back(gaussian_sample(s));
    }
    const std::vector<FunctionSpec> gs{
        FunctionSpec::indicator(-2.0 + 4.0 * s.uniform()),
        FunctionSpec::piecewise_constant(locs, jumps),
        FunctionSpec::affine_clamped(gaussian_sample(s), 0.3, -1.5, 1.7),
        FunctionSpec::lipschitz_table(tgrid, tvals)};
    for (const auto& g : gs) {
      double sum = 0.0, scale = 0.0;
      for (std::size_t i = 1; i <= k; ++i) {
        const double term = g(grid[i]) * (values[i] - values[i - 1]);
        sum += term;
        scale += std::fabs(term);
      }
      const double rhs = stieltjes_integral(h, g);
      EXPECT_LE(std::fabs(sum - rhs), 1e-12 * std::max(1.0, scale)) << g.label();
    }
  }
}

TEST(Variance, PopulationExamples) {
  const auto u = BaseDistribution::uniform();
  EXPECT_NEAR(sigma_g_squared(FunctionSpec::indicator(0.5), u), 0.25, 1e-15);
  EXPECT_NEAR(sigma_g_squared(FunctionSpec::identity(), u), 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(sigma_g_squared(FunctionSpec::identity(), BaseDistribution::exponential()), 1.0,
              1e-14);
  // g = 2 min(x, 1/2) on U(0,1): E g = 3/4, E g^2 = 2/3.
  EXPECT_NEAR(sigma_g_squared(FunctionSpec::affine_clamped(2.0, 0.0, 0.0, 0.5), u),
              2.0 / 3.0 - 9.0 / 16.0, 1e-10);
  EXPECT_EQ(sigma_g_squared(FunctionSpec::constant(4.0), u), 0.0);
  const auto pm = BaseDistribution::point_masses({0.0, 1.0}, {1.0, 3.0});
  EXPECT_NEAR(sigma_g_squared(FunctionSpec::identity(), pm), 3.0 / 16.0, 1e-15);
  EXPECT_NEAR(sigma_g_squared(FunctionSpec::indicator(0.0), pm), 3.0 / 16.0, 1e-15);
}

TEST(Variance, NormalThroughQuadrature) {
  // Var of clamp(X, -1, 1) for X ~ N(0,1): E X^2 1{|X|<1} + P(|X|>1).
  const double phi1 = std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
  const double p_in = std::erf(1.0 / std::numbers::sqrt2);
  const double expected = (p_in - 2.0 * phi1) + (1.0 - p_in);
  EXPECT_NEAR(sigma_g_squared(FunctionSpec::affine_clamped(1.0, 0.0, -1.0, 1.0),
                              BaseDistribution::normal()),
              expected, 1e-10);
}

TEST(Variance, EmpiricalExamples) {
  EXPECT_NEAR(empirical_variance(FunctionSpec::identity(), std::vector<double>{0.0, 1.0}), 0.25,
              1e-15);
  EXPECT_EQ(empirical_variance(FunctionSpec::constant(2.0), std::vector<double>{0.3, 9.0}), 0.0);
  EXPECT_NEAR(empirical_variance(FunctionSpec::identity(), std::vector<double>{1.0, 2.0, 3.0}),
              2.0 / 3.0, 1e-15);
}

TEST(ClassSpec, EnvelopeMustDominate) {
  EXPECT_NO_THROW(ClassSpec({FunctionSpec::indicator(0.1)}, FunctionSpec::constant(1.0)));
  EXPECT_THROW(ClassSpec({FunctionSpec::affine_clamped(2.0, 0.0, 0.0, 1.0)},
                         FunctionSpec::constant(1.0)),
               InvalidParameter);
}

TEST(ClassSpec, IndicatorQuantileGrid) {
  const ClassSpec c = indicator_quantile_class(BaseDistribution::uniform(), 21);
  ASSERT_EQ(c.members().size(), 21u);
  for (std::size_t k = 0; k < 21; ++k) {
    const double level = (2.0 * static_cast<double>(k) + 1.0) / 42.0;
    const auto& ind = std::get<IndicatorFn>(c.members()[k].kind());
    EXPECT_NEAR(ind.threshold, level, 1e-15);
  }
}

TEST(Json, RoundTrip) {
  const std::vector<FunctionSpec> gs{
      FunctionSpec::indicator(0.5), FunctionSpec::piecewise_constant({0.0, 1.0}, {2.0, -1.0}),
      FunctionSpec::affine_clamped(-2.0, 1.0, 0.0, 3.0), FunctionSpec::identity(),
      FunctionSpec::lipschitz_table({0.0, 0.5, 2.0}, {1.0, -1.0, 4.0})};
  for (const auto& g : gs) {
    const FunctionSpec back = function_spec_from_json(nlohmann::json(g));
    for (double x = -1.0; x <= 3.0; x += 0.25) EXPECT_EQ(back(x), g(x));
    EXPECT_EQ(back.label(), g.label());
  }
  const ClassSpec c = class_spec_from_json({{"kind", "indicator_grid"}, {"count", 5}},
                                           BaseDistribution::uniform());
  EXPECT_EQ(c.members().size(), 5u);
  EXPECT_THROW(function_spec_from_json({{"kind", "nope"}}), InvalidParameter);
}

}  // namespace
}  // namespace bvmdp
