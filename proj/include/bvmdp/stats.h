#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bvmdp {

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
};

MeanEstimate mean_and_se(std::span<const double> xs);
double median(std::vector<double> xs);
// Linear-interpolated sample quantile (type 7).
double sample_quantile(std::vector<double> xs, double p);

// Standard error of a proportion p estimated from n trials.
double binomial_se(double p, std::size_t n);

// sup_x |F_emp(x) - F(x)| for the empirical CDF of xs.
double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);

struct KsTwoSample {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b);

// Mean of exp(log_values) computed in log space, with the standard error of
// the mean. A replication with a non-finite log value throws SaturationError.
struct ExpMeanEstimate {
  double estimate = 0.0;
  double se = 0.0;
};
ExpMeanEstimate exp_mean(std::span<const double> log_values);

// One row of an empirical tail-bound check: the bound holds when the observed
// frequency is at most bound + 3 binomial standard errors.
struct TailRow {
  std::string label;
  double x = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double se = 0.0;
  bool pass = true;
};
TailRow make_tail_row(std::string label, double x, std::size_t hits, std::size_t trials,
                      double bound);

}  // namespace bvmdp
