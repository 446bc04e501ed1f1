#include "bvmdp/special.h"

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "bvmdp/errors.h"

namespace bvmdp {
namespace {

using FastPolicy = boost::math::policies::policy<
    boost::math::policies::digits10<10>,
    boost::math::policies::promote_double<false>>;

// Acklam's rational approximation, relative error ~1e-9.
double acklam(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - kLow) return -acklam(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    throw InvalidParameter("normal_quantile: p outside [0, 1]");
  }
  double x = acklam(p);
  // One Halley refinement.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double beta_cdf(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

double beta_sf(double a, double b, double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  return boost::math::ibetac(a, b, x);
}

double beta_quantile(double a, double b, double p) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw InvalidParameter("beta_quantile: parameters must be positive");
  }
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  return boost::math::ibeta_inv(a, b, p);
}

double beta_quantile_from_normal(double a, double b, double z) {
  // Work in the lower tail of the normal: for z > 0 reflect, Beta(a,b) at
  // Phi(z) equals 1 - Beta(b,a) at Phi(-z).
  if (z > 0.0) return 1.0 - beta_quantile_from_normal(b, a, -z);
  const double p = normal_cdf(z);
  if (p <= 0.0) return 0.0;
  if (a == 1.0 && b == 1.0) return p;
  if (b == 1.0) return std::exp(std::log(p) / a);
  if (a == 1.0) return -std::expm1(std::log1p(-p) / b);
  if (a == 2.0 && b == 2.0) {
    // CDF 3x^2 - 2x^3; with x = 1/2 + sin(theta), sin(3 theta) = 2p - 1.
    return 0.5 + std::sin(std::asin(2.0 * p - 1.0) / 3.0);
  }
  try {
    return boost::math::ibeta_inv(a, b, p, FastPolicy());
  } catch (const std::exception&) {
    // Root finder fails far in the lower tail; use I_x(a, b) ~ x^a / (a B(a, b)).
    return std::exp((std::log(p) + std::log(a) + std::lgamma(a) + std::lgamma(b) -
                     std::lgamma(a + b)) /
                    a);
  }
}

double gamma_cdf(double a, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(a, x);
}

}  // namespace bvmdp
