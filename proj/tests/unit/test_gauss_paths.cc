#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bvmdp/errors.h"
#include "bvmdp/gauss_paths.h"
#include "bvmdp/stats.h"

namespace bvmdp {
namespace {

double sample_cov(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_and_se(a).mean;
  const double mb = mean_and_se(b).mean;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

// Alternating theta-function form, independent of the library's series.
double kolmogorov_reference(double x) {
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    s += (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
  }
  return 1.0 - 2.0 * s;
}

TEST(Bridge, PinnedEndpoints) {
  RngStream s(1);
  const GridPath b = brownian_bridge({0.0, 1.0}, s);
  EXPECT_EQ(b.values()[0], 0.0);
  EXPECT_EQ(b.values()[1], 0.0);
  EXPECT_EQ(b.interpolation(), Interpolation::kLinear);
}

TEST(Bridge, CovarianceMatchesMinMinusProduct) {
  const RngStream root(2);
  const std::size_t reps = 200000;
  std::vector<double> q1(reps), mid(reps), q3(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream s = root.child(r);
    const GridPath b = brownian_bridge({0.0, 0.25, 0.5, 0.75, 1.0}, s);
    q1[r] = b.values()[1];
    mid[r] = b.values()[2];
    q3[r] = b.values()[3];
  }
  EXPECT_NEAR(sample_cov(mid, mid), 0.25, 0.0025);
  EXPECT_NEAR(sample_cov(q1, q3), 0.0625, 0.002);
}

TEST(Bridge, RejectsBadGrid) {
  RngStream s(3);
  EXPECT_THROW(brownian_bridge({0.5, 0.2}, s), InvalidParameter);
  EXPECT_THROW(brownian_bridge({-0.1, 0.5}, s), InvalidParameter);
}

TEST(Kiefer, VarianceAndCovarianceInN) {
  const RngStream root(4);
  const std::size_t reps = 100000;
  std::vector<double> k2(reps), k4(reps), k5(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream s = root.child(r);
    const KieferSheet sheet = kiefer({0.0, 0.5, 1.0}, 5, s);
    k2[r] = sheet.slice(2).values()[1];
    k4[r] = sheet.slice(4).values()[1];
    k5[r] = sheet.slice(5).values()[1];
  }
  EXPECT_NEAR(sample_cov(k4, k4), 1.0, 0.02);
  EXPECT_NEAR(sample_cov(k2, k5), 0.5, 0.015);
}

TEST(Kiefer, SliceZeroAndPartialSums) {
  RngStream s(5);
  const KieferSheet sheet = kiefer({0.0, 0.3, 0.7, 1.0}, 3, s);
  const GridPath zero = sheet.slice(0);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    const double sum = sheet.bridge(0).values()[i] + sheet.bridge(1).values()[i] +
                       sheet.bridge(2).values()[i];
    EXPECT_NEAR(sheet.slice(3).values()[i], sum, 1e-14);
  }
  EXPECT_THROW(sheet.slice(4), InvalidParameter);
}

TEST(Compose, StepPathOnCdfGrid) {
  const GridPath path({0.0, 0.5, 1.0}, {0.0, 0.3, 0.0}, Interpolation::kLinear);
  const GridPath cdf({-1.0, 2.0}, {0.5, 1.0}, Interpolation::kStepRight);
  const GridPath c = compose_with_cdf(path, cdf);
  EXPECT_EQ(c.interpolation(), Interpolation::kStepRight);
  EXPECT_EQ(c.values()[0], 0.3);
  EXPECT_EQ(c.values()[1], 0.0);
  EXPECT_EQ(c.at(0.0), 0.3);
}

TEST(Compose, MissingGridPointThrows) {
  const GridPath path({0.0, 0.5, 1.0}, {0.0, 0.3, 0.0}, Interpolation::kLinear);
  const GridPath cdf({-1.0, 2.0}, {0.4, 1.0}, Interpolation::kStepRight);
  EXPECT_THROW(compose_with_cdf(path, cdf), OutOfDomain);
  const GridPath bad({-1.0, 2.0}, {0.5, 1.5}, Interpolation::kStepRight);
  EXPECT_THROW(compose_with_cdf(path, bad), InvalidParameter);
}

TEST(SupDistance, Examples) {
  const GridPath a({0.0, 1.0}, {0.0, 1.0}, Interpolation::kLinear);
  const GridPath b({0.0, 0.5, 1.0}, {0.0, 0.0, 1.0}, Interpolation::kLinear);
  EXPECT_DOUBLE_EQ(sup_distance(a, b), 0.5);
  EXPECT_EQ(sup_distance(a, a), 0.0);

  // The jump of a at 1 is seen through the left limit even though b jumps
  // at a different point.
  const GridPath sa({0.0, 1.0}, {0.0, 2.0}, Interpolation::kStepRight);
  const GridPath sb({0.0, 2.0}, {0.0, 2.0}, Interpolation::kStepRight);
  EXPECT_EQ(sup_distance(sa, sb), 2.0);
  EXPECT_THROW(sup_distance(a, sa), UnsupportedOperation);
}

TEST(Kolmogorov, MatchesIndependentSeries) {
  EXPECT_NEAR(kolmogorov_cdf(1.3581), 0.95, 1e-4);
  for (double x : {0.3, 0.5, 0.8, 1.0, 1.3581, 2.0, 3.0}) {
    EXPECT_NEAR(kolmogorov_cdf(x), kolmogorov_reference(x), 1e-10) << x;
  }
  EXPECT_EQ(kolmogorov_cdf(0.0), 0.0);
  EXPECT_EQ(kolmogorov_cdf(-1.0), 0.0);
}

TEST(Kolmogorov, TailBoundAndMonotone) {
  double prev = 0.0;
  for (double x = 0.05; x < 4.0; x += 0.05) {
    const double c = kolmogorov_cdf(x);
    EXPECT_GE(c, prev - 1e-15);
    EXPECT_LE(1.0 - c, 2.0 * std::exp(-2.0 * x * x) + 1e-15);
    prev = c;
  }
}

TEST(Borell, HoldsForBridgeSup) {
  std::vector<double> grid(257);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / 256.0;
  const auto sups = bridge_sup_samples(grid, 20000, RngStream(6));
  const double m = mean_and_se(sups).mean;
  // E sup |B| = sqrt(pi/2) ln 2 in the continuum limit; the grid sits below it.
  EXPECT_LT(m, std::sqrt(std::numbers::pi / 2.0) * std::log(2.0));
  EXPECT_GT(m, 0.8);
  const std::vector<double> xs{0.25, 0.5, 1.0};
  for (const auto& row : borell_check(sups, 0.25, m, xs)) {
    EXPECT_TRUE(row.pass) << row.x;
    EXPECT_LE(row.empirical, row.bound);
  }
}

TEST(Dkw, Examples) {
  const std::vector<double> y{0.1, 1.0, 1.5};
  const auto rows = dkw_check(BaseDistribution::uniform(), 100, 5000, y, RngStream(7));
  EXPECT_NEAR(rows[0].bound, 2.0 * std::exp(-2.0), 1e-12);
  EXPECT_NEAR(rows[0].bound, 0.2707, 1e-4);
  EXPECT_TRUE(rows[0].pass);
  EXPECT_EQ(rows[1].empirical, 0.0);
  EXPECT_EQ(rows[2].empirical, 0.0);

  // One uniform: sup |F_emp - F0| = max(U, 1 - U) >= 1/2.
  const std::vector<double> y1{0.4};
  const auto one = dkw_check(BaseDistribution::uniform(), 1, 2000, y1, RngStream(8));
  EXPECT_EQ(one[0].empirical, 1.0);
  EXPECT_EQ(one[0].bound, 1.0);
  EXPECT_TRUE(one[0].pass);
}

TEST(SupCdfDistance, Examples) {
  const std::vector<double> one{0.3};
  EXPECT_DOUBLE_EQ(sup_cdf_distance(one, BaseDistribution::uniform()), 0.7);
  const std::vector<double> two{0.25, 0.75};
  EXPECT_DOUBLE_EQ(sup_cdf_distance(two, BaseDistribution::uniform()), 0.25);
}

TEST(FillIn, KnownPointsAndConditionalLaw) {
  const GridPath known({0.0, 0.5, 1.0}, {0.0, 0.4, 0.0}, Interpolation::kLinear);
  const std::vector<double> pts{0.5, 0.25};
  const RngStream root(9);
  const std::size_t reps = 100000;
  std::vector<double> v(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream s = root.child(r);
    const auto out = bridge_fill_in(known, pts, s);
    ASSERT_EQ(out[0], 0.4);
    v[r] = out[1];
  }
  // Given B(0) = 0 and B(1/2) = 0.4, B(1/4) ~ N(0.2, 1/8).
  EXPECT_NEAR(mean_and_se(v).mean, 0.2, 0.005);
  EXPECT_NEAR(sample_cov(v, v), 0.125, 0.002);
}

TEST(FillIn, JointLawMatchesDirectDraw) {
  const RngStream root(10);
  const std::size_t reps = 100000;
  std::vector<double> a(reps), b(reps);
  const std::vector<double> pts{0.1, 0.9};
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream s = root.child(r);
    const GridPath coarse = brownian_bridge({0.0, 0.6, 1.0}, s);
    const auto out = bridge_fill_in(coarse, pts, s);
    a[r] = out[0];
    b[r] = out[1];
  }
  EXPECT_NEAR(sample_cov(a, a), 0.09, 0.002);
  EXPECT_NEAR(sample_cov(a, b), 0.01, 0.002);
}

TEST(SupDistance, MetricOnStepPaths) {
  RngStream s(11);
  const std::vector<double> grid{-1.0, -0.2, 0.0, 0.3, 0.9, 1.5};
  auto random_path = [&]() {
    std::vector<double> v(grid.size());
    for (double& x : v) x = gaussian_sample(s);
    return GridPath(grid, v, Interpolation::kStepRight);
  };
  for (int trial = 0; trial < 500; ++trial) {
    const GridPath a = random_path(), b = random_path(), c = random_path();
    EXPECT_EQ(sup_distance(a, b), sup_distance(b, a));
    EXPECT_LE(sup_distance(a, c), sup_distance(a, b) + sup_distance(b, c) + 1e-15);
    EXPECT_EQ(sup_distance(a, a), 0.0);
  }
}

TEST(Bridge, AgreesWithCholeskySampling) {
  std::vector<double> grid(10);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = (static_cast<double>(i) + 0.5) / 10.0;
  const std::size_t d = grid.size();
  std::vector<double> l(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = std::min(grid[i], grid[j]) - grid[i] * grid[j];
      for (std::size_t k = 0; k < j; ++k) sum -= l[i * d + k] * l[j * d + k];
      l[i * d + j] = i == j ? std::sqrt(sum) : sum / l[j * d + j];
    }
  }
  const std::size_t reps = 20000;
  std::vector<std::vector<double>> direct(d, std::vector<double>(reps));
  std::vector<std::vector<double>> chol(d, std::vector<double>(reps));
  const RngStream a(12), b(13);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream sa = a.child(r);
    const GridPath path = brownian_bridge(grid, sa);
    RngStream sb = b.child(r);
    std::vector<double> z(d);
    for (double& x : z) x = gaussian_sample(sb);
    for (std::size_t i = 0; i < d; ++i) {
      direct[i][r] = path.values()[i];
      double v = 0.0;
      for (std::size_t k = 0; k <= i; ++k) v += l[i * d + k] * z[k];
      chol[i][r] = v;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    EXPECT_GT(ks_two_sample(direct[i], chol[i]).p_value, 0.001) << i;
  }
}

TEST(Dkw, SingleObservationByEnumeration) {
  // Brute force over U on a fine midpoint grid: sup |F_emp - F0| = max(U, 1 - U).
  const int cells = 100000;
  int hits = 0;
  for (int i = 0; i < cells; ++i) {
    const double u = (i + 0.5) / cells;
    const std::vector<double> one{u};
    if (sup_cdf_distance(one, BaseDistribution::uniform()) > 0.4) ++hits;
  }
  EXPECT_EQ(hits, cells);
}

}  // namespace
}  // namespace bvmdp
