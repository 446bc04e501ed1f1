#pragma once

namespace bvmdp {

double normal_cdf(double x);
// Accurate to full double precision after one Halley step.
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b) and its complement.
double beta_cdf(double a, double b, double x);
double beta_sf(double a, double b, double x);
// Inverse of I_x(a, b) = p.
double beta_quantile(double a, double b, double p);

// Beta(a, b) quantile at Phi(z), computed from whichever tail of the normal
// is smaller so that extreme z keep their precision. Closed forms are used
// when a or b equals 1 and for a = b = 2.
double beta_quantile_from_normal(double a, double b, double z);

// Regularized lower incomplete gamma P(a, x).
double gamma_cdf(double a, double x);

}  // namespace bvmdp
