#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bvmdp/errors.h"
#include "bvmdp/rng.h"
#include "bvmdp/stats.h"

namespace bvmdp {
namespace {

TEST(RngStream, SameIdentitySameDraws) {
  RngStream a = RngStream(7).child(3).child(1);
  RngStream b = RngStream(7).child(3).child(1);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, ChildIsPureAndSplitAdvances) {
  RngStream root(11);
  const RngStream c1 = root.child(5);
  root.next_u64();
  RngStream c2 = root.child(5);
  RngStream c1_copy = c1;
  EXPECT_EQ(c1_copy.next_u64(), c2.next_u64());

  RngStream p(11);
  RngStream s1 = p.split();
  RngStream s2 = p.split();
  EXPECT_NE(s1.next_u64(), s2.next_u64());
}

TEST(RngStream, DistinctChildrenDiffer) {
  const RngStream root(3);
  RngStream a = root.child(0);
  RngStream b = root.child(1);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(RngStream, UniformIsOpenInterval) {
  RngStream s(1);
  for (int i = 0; i < 1000000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Philox, KnownAnswer) {
  // Random123 reference vector for Philox4x32-10 with zero counter and key.
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
  const auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                               {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(ones[0], 0x408f276du);
  EXPECT_EQ(ones[3], 0x6d5451fdu);
  const auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                             {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(pi[0], 0xd16cfe09u);
  EXPECT_EQ(pi[1], 0x94fdccebu);
  EXPECT_EQ(pi[2], 0x5001e420u);
  EXPECT_EQ(pi[3], 0x24126ea1u);
}

TEST(Normal, MomentsOverMillionDraws) {
  RngStream s(2);
  std::vector<double> x(1000000);
  for (auto& v : x) v = gaussian_sample(s);
  const MeanEstimate m = mean_and_se(x);
  EXPECT_LT(std::fabs(m.mean), 3.0 * m.se);
  EXPECT_NEAR(m.sd * m.sd, 1.0, 0.01);
}

TEST(Exponential, MeanAndTail) {
  RngStream s(3);
  std::vector<double> x(1000000);
  for (auto& v : x) v = exponential_sample(s);
  const MeanEstimate m = mean_and_se(x);
  EXPECT_LT(std::fabs(m.mean - 1.0), 3.0 * m.se);
  const double p = std::exp(-5.0);
  const auto hits = std::count_if(x.begin(), x.end(), [](double v) { return v > 5.0; });
  const double freq = static_cast<double>(hits) / static_cast<double>(x.size());
  EXPECT_LT(std::fabs(freq - p), 3.0 * binomial_se(p, x.size()));
}

TEST(Gamma, ShapeOneIsExponential) {
  RngStream s(4);
  std::vector<double> x(1000000);
  for (auto& v : x) v = gamma_sample(1.0, s);
  const MeanEstimate m = mean_and_se(x);
  EXPECT_LT(std::fabs(m.mean - 1.0), 3.0 * m.se);
  double ss = 0.0;
  for (double v : x) ss += (v - 1.0) * (v - 1.0);
  const double var = ss / static_cast<double>(x.size());
  // SE of the variance estimate is sqrt((mu4 - 1) / N) = sqrt(8 / N).
  EXPECT_LT(std::fabs(var - 1.0), 3.0 * std::sqrt(8.0 / static_cast<double>(x.size())));
}

TEST(Gamma, ShapeTwoMedian) {
  // Median of Gamma(2, 1) by bisection on 1 - e^{-x}(1 + x) = 1/2.
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (1.0 - std::exp(-mid) * (1.0 + mid) < 0.5 ? lo : hi) = mid;
  }
  EXPECT_NEAR(lo, 1.678, 1e-3);
  RngStream s(5);
  std::vector<double> x(1000000);
  for (auto& v : x) v = gamma_sample(2.0, s);
  EXPECT_NEAR(median(x), lo, 0.01);
}

TEST(Gamma, RejectsNonPositiveShape) {
  RngStream s(1);
  EXPECT_THROW(gamma_sample(0.0, s), InvalidParameter);
  EXPECT_THROW(gamma_sample(-1.0, s), InvalidParameter);
}

TEST(Gamma, TailInequalityHolds) {
  RngStream s(6);
  const std::vector<double> xs{2.0};
  const auto rows = gamma_tail_check(5.0, xs, 1000000, s);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.bound, std::exp(-2.0), 1e-15);
    EXPECT_TRUE(r.pass) << r.label << " " << r.empirical;
  }
}

TEST(Beta, OneOneIsUniform) {
  RngStream s(7);
  std::vector<double> x(1000000);
  for (auto& v : x) v = beta_sample(1.0, 1.0, s);
  EXPECT_LT(ks_one_sample(x, [](double u) { return std::clamp(u, 0.0, 1.0); }), 0.002);
}

TEST(Beta, MeanTwoThree) {
  RngStream s(8);
  std::vector<double> x(200000);
  for (auto& v : x) v = beta_sample(2.0, 3.0, s);
  const MeanEstimate m = mean_and_se(x);
  EXPECT_LT(std::fabs(m.mean - 0.4), 3.0 * m.se);
}

TEST(Beta, ScaledMeanOneN) {
  for (double n : {10.0, 100.0, 1000.0}) {
    RngStream s(static_cast<std::uint64_t>(n));
    std::vector<double> x(100000);
    for (auto& v : x) v = n * beta_sample(1.0, n, s);
    const MeanEstimate m = mean_and_se(x);
    EXPECT_LT(std::fabs(m.mean - n / (n + 1.0)), 3.0 * m.se);
  }
}

TEST(Dirichlet, SingleAtom) {
  RngStream s(9);
  const std::vector<double> a{1.0};
  const auto w = dirichlet_sample(a, s);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], 1.0);
}

TEST(Dirichlet, SymmetricMeans) {
  RngStream s(10);
  const std::vector<double> a{1.0, 1.0, 1.0};
  std::vector<std::vector<double>> coords(3);
  for (int r = 0; r < 100000; ++r) {
    const auto w = dirichlet_sample(a, s);
    for (int k = 0; k < 3; ++k) coords[k].push_back(w[k]);
  }
  for (const auto& c : coords) {
    const MeanEstimate m = mean_and_se(c);
    EXPECT_LT(std::fabs(m.mean - 1.0 / 3.0), 3.0 * m.se);
  }
}

TEST(Dirichlet, FirstCoordinateIsBeta) {
  RngStream s(11);
  const std::vector<double> a{2.0, 1.0};
  std::vector<double> x(100000);
  for (auto& v : x) v = dirichlet_sample(a, s)[0];
  // Beta(2, 1) CDF is u^2.
  EXPECT_LT(ks_one_sample(x, [](double u) { return std::clamp(u * u, 0.0, 1.0); }), 0.005);
}

TEST(OrderStatistics, SortedAndInRange) {
  RngStream s(12);
  const auto u = uniform_order_statistics(1000, s);
  ASSERT_EQ(u.size(), 1000u);
  EXPECT_TRUE(std::is_sorted(u.begin(), u.end()));
  EXPECT_GT(u.front(), 0.0);
  EXPECT_LT(u.back(), 1.0);
}

TEST(OrderStatistics, MarginalMeans) {
  struct Case {
    std::size_t n, k;
    double mean;
  };
  for (const Case c : {Case{1, 0, 0.5}, Case{9, 4, 0.5}, Case{99, 0, 0.01}}) {
    RngStream s(13 + c.n);
    std::vector<double> x(100000);
    for (auto& v : x) v = uniform_order_statistics(c.n, s)[c.k];
    const MeanEstimate m = mean_and_se(x);
    EXPECT_LT(std::fabs(m.mean - c.mean), 3.0 * m.se) << "n=" << c.n;
  }
}

}  // namespace
}  // namespace bvmdp
