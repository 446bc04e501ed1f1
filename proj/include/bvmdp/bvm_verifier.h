#pragma once

#include <span>
#include <string>
#include <vector>

#include "bvmdp/distribution.h"
#include "bvmdp/dp_sampler.h"
#include "bvmdp/function_classes.h"
#include "bvmdp/rng.h"

namespace bvmdp {

struct LaplaceOptions {
  int workers = 1;
  double trunc_eps = kDefaultTruncEps;
  // Largest |t| accepted when |nu| > 0.
  double t_window = 1.0;
};

struct LaplaceEstimate {
  double estimate = 1.0;
  double se = 0.0;
};

// MC estimate of E[exp(t sqrt(n)(P_n g - P_emp g)) | data]; replication r
// draws its posterior from root.child(r).
LaplaceEstimate conditional_laplace(std::span<const double> data, const FunctionSpec& g,
                                    double t, const BaseMeasureSpec& nu, std::size_t reps,
                                    const RngStream& root, const LaplaceOptions& options = {});

struct LaplaceRow {
  std::string label;
  double t = 0.0;
  double estimate = 1.0;
  double se = 0.0;
  double target = 1.0;
  double gap = 0.0;
};

struct LaplaceSweepResult {
  std::vector<LaplaceRow> rows;
  std::vector<double> t_grid;
  // Largest gap over members, per t.
  std::vector<double> sup_gap;
  double max_gap() const;
};

// All members and all t share the same posterior draws. Targets are
// exp(t^2 sigma_g^2 / 2) under f0.
LaplaceSweepResult uniformity_sweep(const ClassSpec& cls, std::span<const double> t_grid,
                                    std::span<const double> data, const BaseDistribution& f0,
                                    const BaseMeasureSpec& nu, std::size_t reps,
                                    const RngStream& root, const LaplaceOptions& options = {});

struct BvLaplaceResult {
  LaplaceSweepResult sweep;
  // Per member: KS distance of the sampled W_n g = -int B(F_emp) dg against
  // N(0, P_emp (g - P_emp g)^2).
  std::vector<double> wn_ks;
};

// As uniformity_sweep without the t window; members must have finite total
// variation.
BvLaplaceResult bv_laplace_check(const ClassSpec& cls, std::span<const double> t_grid,
                                 std::span<const double> data, const BaseDistribution& f0,
                                 const BaseMeasureSpec& nu, std::size_t reps,
                                 std::size_t wn_reps, const RngStream& root,
                                 const LaplaceOptions& options = {});

// W_n g samples for fixed data; replication r uses root.child(r).
std::vector<double> bridge_functional_samples(const FunctionSpec& g,
                                              std::span<const double> data, std::size_t reps,
                                              const RngStream& root, int workers = 1);

// KS distance of the centered statistic's MC sample to N(0, sigma_g^2).
double distributional_check(std::span<const double> data, const FunctionSpec& g,
                            const BaseDistribution& f0, const BaseMeasureSpec& nu,
                            std::size_t reps, const RngStream& root,
                            const LaplaceOptions& options = {});

enum class MomentEstimator {
  // U = n V drawn from Gamma(|nu|, rate 1 - t), weighted by the likelihood ratio.
  kImportance,
  // exp(n t V) averaged over V ~ Beta(|nu|, n).
  kPlain,
};

struct MomentCheckResult {
  std::string name;
  std::vector<std::size_t> n_grid;
  std::vector<double> estimates;
  std::vector<double> se;
  std::vector<double> targets;
  double tolerance = 0.0;
  std::vector<bool> verdicts;
  bool pass() const;
};

// E exp(n t V_n), V_n ~ Beta(nu_mass, n), against (1 - t)^{-nu_mass}.
MomentCheckResult beta_moment_check(double nu_mass, double t,
                                    const std::vector<std::size_t>& n_grid, std::size_t reps,
                                    const RngStream& root,
                                    MomentEstimator estimator = MomentEstimator::kImportance,
                                    double rel_tolerance = 0.02);

struct EnvelopeRow {
  std::size_t n = 0;
  double t = 0.0;
  double estimate = 1.0;
  double se = 0.0;
  // First-half and full-run means disagree by more than 4 standard errors.
  bool divergent = false;
};

// E exp(t sqrt(n) V_n Q G) per (n, t).
std::vector<EnvelopeRow> envelope_moment_check(const BaseMeasureSpec& nu, const FunctionSpec& G,
                                               std::span<const double> t_grid,
                                               const std::vector<std::size_t>& n_grid,
                                               std::size_t reps, const RngStream& root,
                                               const LaplaceOptions& options = {});

struct MaximaRow {
  std::size_t n = 0;
  double ratio = 0.0;
};
struct MaximaResult {
  std::vector<MaximaRow> rows;
  bool pass = false;
};

// One sample path of max_{i <= n} |Z_i| / n^{1/r} along an increasing n_grid.
MaximaResult maxima_check(const BaseDistribution& f0, double r,
                          const std::vector<std::size_t>& n_grid, RngStream& stream,
                          double threshold);

double lindeberg_h(double u);
double lindeberg_h0(double u);

struct LindebergResult {
  double bound = 0.0;
  double epsilon = 0.0;
  // n^{-1} sum E X_i^2 1{|X_i| > eps sqrt(n)}.
  double truncated_moment = 0.0;
  double lindeberg_term = 0.0;
  // n^{-1} sum E X_i^2.
  double variance = 0.0;
  double h0_term = 0.0;
};

// Unit-constant right side of the bounded-Lipschitz CLT bound for
// X_i = (W_i - 1)(g(Z_i) - P_emp g), W_i unit exponentials.
LindebergResult lindeberg_diagnostic(std::span<const double> data, const FunctionSpec& g,
                                     double epsilon);

}  // namespace bvmdp
