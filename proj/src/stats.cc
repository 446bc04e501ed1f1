#include "bvmdp/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bvmdp/errors.h"
#include "bvmdp/gauss_paths.h"

namespace bvmdp {

MeanEstimate mean_and_se(std::span<const double> xs) {
  if (xs.empty()) throw InvalidParameter("mean_and_se: empty sample");
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  MeanEstimate out;
  out.mean = mean;
  if (xs.size() > 1) {
    out.sd = std::sqrt(m2 / static_cast<double>(xs.size() - 1));
    out.se = out.sd / std::sqrt(static_cast<double>(xs.size()));
  }
  return out;
}

double median(std::vector<double> xs) { return sample_quantile(std::move(xs), 0.5); }

double sample_quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw InvalidParameter("sample_quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double binomial_se(double p, std::size_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw InvalidParameter("ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidParameter("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  // Stephens' small-sample correction of the asymptotic Kolmogorov law.
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  return {d, lambda > 0.0 ? 1.0 - kolmogorov_cdf(lambda) : 1.0};
}

ExpMeanEstimate exp_mean(std::span<const double> log_values) {
  if (log_values.empty()) throw InvalidParameter("exp_mean: empty sample");
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < log_values.size(); ++r) {
    if (std::isnan(log_values[r]) || log_values[r] == INFINITY) {
      throw SaturationError("exponent not finite at replication " + std::to_string(r), r);
    }
    top = std::max(top, log_values[r]);
  }
  std::vector<double> scaled(log_values.size());
  for (std::size_t r = 0; r < log_values.size(); ++r) {
    scaled[r] = std::exp(log_values[r] - top);
  }
  const MeanEstimate m = mean_and_se(scaled);
  const double scale = std::exp(top);
  if (!std::isfinite(scale * m.mean)) {
    std::size_t worst = static_cast<std::size_t>(
        std::max_element(log_values.begin(), log_values.end()) - log_values.begin());
    throw SaturationError(
        "exp mean overflows; largest exponent at replication " + std::to_string(worst),
        worst);
  }
  return {scale * m.mean, scale * m.se};
}

TailRow make_tail_row(std::string label, double x, std::size_t hits, std::size_t trials,
                      double bound) {
  if (trials == 0) throw InvalidParameter("make_tail_row: no trials");
  TailRow row;
  row.label = std::move(label);
  row.x = x;
  row.empirical = static_cast<double>(hits) / static_cast<double>(trials);
  row.bound = bound;
  // Binomial SE evaluated at p = bound.
  row.se = binomial_se(std::min(bound, 1.0), trials);
  row.pass = row.empirical <= bound + 3.0 * row.se;
  return row;
}

}  // namespace bvmdp
