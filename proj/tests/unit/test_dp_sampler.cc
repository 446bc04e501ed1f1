#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bvmdp/dp_sampler.h"
#include "bvmdp/errors.h"
#include "bvmdp/stats.h"

namespace bvmdp {
namespace {

const BaseMeasureSpec kUniformNu1(1.0, BaseDistribution::uniform());

TEST(PriorDraw, StickCountNearLogInverseEps) {
  const RngStream root(31);
  std::vector<double> counts;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    RngStream s = root.child(r);
    counts.push_back(static_cast<double>(dp_prior_draw(kUniformNu1, 1e-8, s).stick_count()));
  }
  const double expected = std::log(1e8);
  EXPECT_NEAR(mean_and_se(counts).mean, expected, 0.3 * expected);
}

TEST(PriorDraw, WeightsAndResidualSumToOne) {
  const RngStream root(32);
  for (std::uint64_t r = 0; r < 200; ++r) {
    RngStream s = root.child(r);
    const auto q = dp_prior_draw(BaseMeasureSpec(5.0, BaseDistribution::normal()), 1e-6, s);
    double total = q.residual_mass;
    for (double w : q.weights) {
      EXPECT_GT(w, 0.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
    EXPECT_LT(q.residual_mass, 1e-6);
  }
}

TEST(PriorDraw, MeanMeasureIsNormalizedBase) {
  const RngStream root(33);
  std::vector<double> qg(100000);
  for (std::size_t r = 0; r < qg.size(); ++r) {
    RngStream s = root.child(r);
    const auto q = dp_prior_draw(kUniformNu1, 1e-8, s);
    double v = q.residual_mass * q.residual_atom;
    for (std::size_t k = 0; k < q.atoms.size(); ++k) v += q.weights[k] * q.atoms[k];
    qg[r] = v;
  }
  const MeanEstimate m = mean_and_se(qg);
  EXPECT_LT(std::fabs(m.mean - 0.5), 3.0 * m.se);
}

TEST(PriorDraw, Errors) {
  RngStream s(1);
  EXPECT_THROW(dp_prior_draw(BaseMeasureSpec::bootstrap(), 1e-8, s), InvalidParameter);
  EXPECT_THROW(dp_prior_draw(kUniformNu1, 0.0, s), InvalidParameter);
  EXPECT_THROW(dp_prior_draw(kUniformNu1, 1.0, s), InvalidParameter);
  EXPECT_EQ(prior_weight_sample(BaseMeasureSpec::bootstrap(), 10, s), 0.0);
}

TEST(Posterior, BootstrapWeightIsBeta) {
  const std::vector<double> data{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const RngStream root(34);
  std::vector<double> w1(100000);
  for (std::size_t r = 0; r < w1.size(); ++r) {
    RngStream s = root.child(r);
    const auto d = posterior_draw(BaseMeasureSpec::bootstrap(), data, kDefaultTruncEps, s);
    ASSERT_EQ(d.v_n(), 0.0);
    w1[r] = d.boot_weights()[0];
  }
  // Beta(1, 9) CDF: 1 - (1 - x)^9.
  const double ks =
      ks_one_sample(w1, [](double x) { return 1.0 - std::pow(1.0 - std::clamp(x, 0.0, 1.0), 9.0); });
  EXPECT_LT(ks, 0.005);
}

TEST(Posterior, ConjugateMeanOfCdf) {
  const BaseMeasureSpec nu(2.0, BaseDistribution::uniform());
  RngStream data_stream(35);
  const std::vector<double> data = BaseDistribution::uniform().sample(20, data_stream);
  const double z = 0.5;
  const double emp =
      static_cast<double>(std::count_if(data.begin(), data.end(), [&](double x) { return x <= z; })) /
      20.0;
  const double expected = (2.0 * 0.5 + 20.0 * emp) / 22.0;
  const RngStream root(36);
  std::vector<double> f(100000);
  for (std::size_t r = 0; r < f.size(); ++r) {
    RngStream s = root.child(r);
    f[r] = posterior_draw(nu, data, kDefaultTruncEps, s).cdf(z);
  }
  const MeanEstimate m = mean_and_se(f);
  EXPECT_LT(std::fabs(m.mean - expected), 3.0 * m.se);
}

TEST(Posterior, CdfLeftAndRight) {
  const std::vector<double> data{1.0, 2.0};
  RngStream s(37);
  const auto d = posterior_draw(BaseMeasureSpec::bootstrap(), data, kDefaultTruncEps, s);
  EXPECT_EQ(d.cdf_left(1.0), 0.0);
  EXPECT_NEAR(d.cdf(1.0), d.boot_weights()[0], 1e-15);
  EXPECT_EQ(d.cdf(2.0), 1.0);
  EXPECT_NEAR(d.cdf_left(2.0), d.boot_weights()[0], 1e-15);
}

TEST(Posterior, SingleObservationIsPointMass) {
  const std::vector<double> data{0.37};
  RngStream s(38);
  const auto d = posterior_draw(BaseMeasureSpec::bootstrap(), data, kDefaultTruncEps, s);
  EXPECT_EQ(functional(d, FunctionSpec::identity()), 0.37);
  EXPECT_EQ(functional(d, FunctionSpec::indicator(0.4)), 1.0);
  EXPECT_EQ(centered_statistic(d, FunctionSpec::identity(), data).value, 0.0);
}

TEST(BayesianBootstrap, TwoPointsGiveUniformWeight) {
  const std::vector<double> data{3.0, 1.0};
  const RngStream root(39);
  std::vector<double> w(100000);
  for (std::size_t r = 0; r < w.size(); ++r) {
    RngStream s = root.child(r);
    const auto d = bayesian_bootstrap_draw(data, s);
    double total = 0.0;
    for (double x : d.boot_weights()) total += x;
    ASSERT_EQ(total, 1.0);
    w[r] = d.boot_weights()[0];
  }
  EXPECT_LT(ks_one_sample(w, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.005);
}

TEST(BayesianBootstrap, WeightsSumToOneExactly) {
  RngStream s(40);
  std::vector<double> data(57);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::sin(static_cast<double>(i));
  for (int r = 0; r < 100; ++r) {
    const auto d = bayesian_bootstrap_draw(data, s);
    EXPECT_EQ(d.cdf(10.0), 1.0);
  }
}

TEST(BayesianBootstrap, EquivalentToPosteriorWithoutPrior) {
  const std::vector<double> data{0.05, 0.2, 0.31, 0.44, 0.5, 0.52, 0.67, 0.8, 0.9, 0.95};
  const RngStream a(41), b(42);
  std::vector<double> fa(100000), fb(100000);
  for (std::size_t r = 0; r < fa.size(); ++r) {
    RngStream sa = a.child(r);
    RngStream sb = b.child(r);
    fa[r] = bayesian_bootstrap_draw(data, sa).cdf(0.5);
    fb[r] = posterior_draw(BaseMeasureSpec::bootstrap(), data, kDefaultTruncEps, sb).cdf(0.5);
  }
  EXPECT_GT(ks_two_sample(fa, fb).p_value, 0.001);
}

TEST(Functional, Examples) {
  const std::vector<double> data{0.2, 0.4, 0.9};
  RngStream s(43);
  const auto d = posterior_draw(kUniformNu1, data, kDefaultTruncEps, s);
  EXPECT_EQ(functional(d, FunctionSpec::constant(1.0)), 1.0);
  const PosteriorDraw uniform(0.0, {}, {0.25, 0.25, 0.5}, {1.0, 2.0, 4.0});
  EXPECT_DOUBLE_EQ(functional(uniform, FunctionSpec::identity()), 2.75);
}

TEST(Centered, ConstantGIsZero) {
  const std::vector<double> data{0.2, 0.4, 0.9};
  RngStream s(44);
  const auto d = posterior_draw(kUniformNu1, data, kDefaultTruncEps, s);
  const auto c = centered_statistic(d, FunctionSpec::constant(3.0), data);
  EXPECT_EQ(c.value, 0.0);
  EXPECT_EQ(c.prior_term, 0.0);
  EXPECT_EQ(c.bootstrap_term, 0.0);
}

TEST(Centered, DecompositionMatchesValue) {
  RngStream data_stream(45);
  const std::vector<double> data = BaseDistribution::normal().sample(50, data_stream);
  const RngStream root(46);
  for (std::uint64_t r = 0; r < 200; ++r) {
    RngStream s = root.child(r);
    const auto d = posterior_draw(BaseMeasureSpec(3.0, BaseDistribution::normal()), data,
                                  kDefaultTruncEps, s);
    const auto c = centered_statistic(d, FunctionSpec::affine_clamped(1.0, 0.0, -1.0, 2.0), data);
    EXPECT_NEAR(c.value, c.prior_term + c.bootstrap_term, 1e-10);
  }
}

TEST(Centered, UnbiasedUnderBootstrap) {
  RngStream data_stream(47);
  const std::vector<double> data = BaseDistribution::uniform().sample(100, data_stream);
  const RngStream root(48);
  std::vector<double> v(100000);
  for (std::size_t r = 0; r < v.size(); ++r) {
    RngStream s = root.child(r);
    const auto d = posterior_draw(BaseMeasureSpec::bootstrap(), data, kDefaultTruncEps, s);
    v[r] = centered_statistic(d, FunctionSpec::identity(), data).value;
  }
  const MeanEstimate m = mean_and_se(v);
  EXPECT_LT(std::fabs(m.mean), 3.0 * m.se);
}

TEST(CdfPath, Edges) {
  const std::vector<double> data{0.3, 0.6};
  RngStream s(49);
  const auto d = posterior_draw(kUniformNu1, data, kDefaultTruncEps, s);
  const GridPath p = cdf_path(d, {-5.0, 0.45, 5.0});
  EXPECT_EQ(p.values()[0], 0.0);
  EXPECT_EQ(p.values()[2], 1.0);
  EXPECT_EQ(p.interpolation(), Interpolation::kStepRight);
  const std::vector<double> one{0.7};
  const auto d1 = posterior_draw(BaseMeasureSpec::bootstrap(), one, kDefaultTruncEps, s);
  EXPECT_EQ(cdf_path(d1, {0.7}).values()[0], 1.0);
  EXPECT_THROW(cdf_path(d, {1.0, 0.0}), InvalidParameter);
}

}  // namespace
}  // namespace bvmdp
