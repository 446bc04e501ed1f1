#include "bvmdp/bvm_verifier.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bvmdp/errors.h"
#include "bvmdp/gauss_paths.h"
#include "bvmdp/parallel.h"
#include "bvmdp/special.h"
#include "bvmdp/stats.h"

namespace bvmdp {
namespace {

constexpr std::uint64_t kBridgeFunctionalBranch =
    std::numeric_limits<std::uint64_t>::max() - 1;

// g over the sorted data, measured from g at the smallest data point.
struct MemberCache {
  const FunctionSpec* g = nullptr;
  bool indicator = false;
  double threshold = 0.0;
  double empirical_cdf = 0.0;
  double ref = 0.0;
  std::vector<double> values;
  double mean = 0.0;
};

MemberCache make_cache(const FunctionSpec& g, const std::vector<double>& sorted) {
  MemberCache c;
  c.g = &g;
  if (const auto* ind = std::get_if<IndicatorFn>(&g.kind())) {
    c.indicator = true;
    c.threshold = ind->threshold;
    const auto k = std::upper_bound(sorted.begin(), sorted.end(), c.threshold) - sorted.begin();
    c.empirical_cdf = static_cast<double>(k) / static_cast<double>(sorted.size());
    return c;
  }
  c.ref = g(sorted.front());
  c.values.resize(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) c.values[i] = g(sorted[i]) - c.ref;
  for (double v : c.values) c.mean += v;
  c.mean /= static_cast<double>(sorted.size());
  return c;
}

double member_statistic(const PosteriorDraw& draw, const MemberCache& c, double root_n) {
  if (c.indicator) return root_n * (draw.cdf(c.threshold) - c.empirical_cdf);
  const auto& w = draw.boot_weights();
  double boot = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) boot += w[i] * c.values[i];
  if (draw.v_n() == 0.0) return root_n * (boot - c.mean);
  const DiscreteDistribution& q = draw.prior_part();
  const FunctionSpec& g = *c.g;
  double prior = q.residual_mass * (g(q.residual_atom) - c.ref);
  for (std::size_t j = 0; j < q.atoms.size(); ++j) prior += q.weights[j] * (g(q.atoms[j]) - c.ref);
  return root_n * ((boot - c.mean) + draw.v_n() * (prior - boot));
}

std::vector<double> sorted_copy(std::span<const double> data) {
  if (data.empty()) throw InvalidParameter("verifier: empty data");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

// stats[m][r] for member m and replication r, common draws across members.
std::vector<std::vector<double>> sample_statistics(const std::vector<const FunctionSpec*>& members,
                                                   const std::vector<double>& sorted,
                                                   const BaseMeasureSpec& nu, std::size_t reps,
                                                   const RngStream& root,
                                                   const LaplaceOptions& options) {
  if (reps == 0) throw InvalidParameter("verifier: reps must be >= 1");
  std::vector<MemberCache> caches;
  caches.reserve(members.size());
  for (const auto* g : members) caches.push_back(make_cache(*g, sorted));
  const double root_n = std::sqrt(static_cast<double>(sorted.size()));
  std::vector<std::vector<double>> stats(members.size(), std::vector<double>(reps));
  parallel_for(reps, options.workers, [&](std::size_t r) {
    RngStream stream = root.child(r);
    const PosteriorDraw draw = posterior_draw(nu, sorted, options.trunc_eps, stream);
    for (std::size_t m = 0; m < caches.size(); ++m) {
      stats[m][r] = member_statistic(draw, caches[m], root_n);
    }
  });
  return stats;
}

LaplaceEstimate laplace_from_stats(const std::vector<double>& stats, double t) {
  std::vector<double> logs(stats.size());
  for (std::size_t r = 0; r < stats.size(); ++r) logs[r] = t * stats[r];
  const ExpMeanEstimate e = exp_mean(logs);
  return {e.estimate, e.se};
}

void check_window(const BaseMeasureSpec& nu, std::span<const double> t_grid,
                  const LaplaceOptions& options) {
  if (nu.is_bootstrap()) return;
  for (double t : t_grid) {
    if (std::fabs(t) > options.t_window) {
      throw InvalidParameter("laplace: |t| = " + std::to_string(std::fabs(t)) +
                             " exceeds the configured window " +
                             std::to_string(options.t_window) + " for |nu| > 0");
    }
  }
}

LaplaceSweepResult sweep(const ClassSpec& cls, std::span<const double> t_grid,
                         std::span<const double> data, const BaseDistribution& f0,
                         const BaseMeasureSpec& nu, std::size_t reps, const RngStream& root,
                         const LaplaceOptions& options) {
  const std::vector<double> sorted = sorted_copy(data);
  std::vector<const FunctionSpec*> members;
  for (const auto& g : cls.members()) members.push_back(&g);
  const auto stats = sample_statistics(members, sorted, nu, reps, root, options);
  LaplaceSweepResult out;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  out.sup_gap.assign(t_grid.size(), 0.0);
  std::vector<double> sigma2(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) sigma2[m] = sigma_g_squared(*members[m], f0);
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    for (std::size_t m = 0; m < members.size(); ++m) {
      const LaplaceEstimate e = laplace_from_stats(stats[m], t);
      LaplaceRow row;
      row.label = members[m]->label();
      row.t = t;
      row.estimate = e.estimate;
      row.se = e.se;
      row.target = std::exp(0.5 * t * t * sigma2[m]);
      row.gap = std::fabs(row.estimate - row.target);
      out.sup_gap[k] = std::max(out.sup_gap[k], row.gap);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace

double LaplaceSweepResult::max_gap() const {
  double m = 0.0;
  for (double g : sup_gap) m = std::max(m, g);
  return m;
}

LaplaceEstimate conditional_laplace(std::span<const double> data, const FunctionSpec& g,
                                    double t, const BaseMeasureSpec& nu, std::size_t reps,
                                    const RngStream& root, const LaplaceOptions& options) {
  const double ts[] = {t};
  check_window(nu, ts, options);
  const std::vector<double> sorted = sorted_copy(data);
  const auto stats = sample_statistics({&g}, sorted, nu, reps, root, options);
  return laplace_from_stats(stats[0], t);
}

LaplaceSweepResult uniformity_sweep(const ClassSpec& cls, std::span<const double> t_grid,
                                    std::span<const double> data, const BaseDistribution& f0,
                                    const BaseMeasureSpec& nu, std::size_t reps,
                                    const RngStream& root, const LaplaceOptions& options) {
  check_window(nu, t_grid, options);
  return sweep(cls, t_grid, data, f0, nu, reps, root, options);
}

std::vector<double> bridge_functional_samples(const FunctionSpec& g,
                                              std::span<const double> data, std::size_t reps,
                                              const RngStream& root, int workers) {
  const std::vector<double> sorted = sorted_copy(data);
  if (reps == 0) throw InvalidParameter("bridge_functional_samples: reps must be >= 1");
  const std::size_t n = sorted.size();
  double lo = sorted.front();
  for (double b : g.breakpoints()) {
    if (std::isfinite(b)) lo = std::min(lo, b);
  }
  // Step path of F_emp: 0 before the data, k/n from the k-th distinct point.
  std::vector<double> grid{lo - 1.0};
  std::vector<std::size_t> counts{0};
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n && sorted[i + 1] == sorted[i]) continue;
    grid.push_back(sorted[i]);
    counts.push_back(i + 1);
  }
  std::vector<double> unit(n + 1);
  for (std::size_t k = 0; k <= n; ++k) unit[k] = static_cast<double>(k) / static_cast<double>(n);
  std::vector<double> out(reps);
  parallel_for(reps, workers, [&](std::size_t r) {
    RngStream stream = root.child(r);
    const GridPath bridge = brownian_bridge(unit, stream);
    std::vector<double> values(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) values[j] = bridge.values()[counts[j]];
    out[r] = stieltjes_integral(GridPath(grid, std::move(values), Interpolation::kStepRight), g);
  });
  return out;
}

BvLaplaceResult bv_laplace_check(const ClassSpec& cls, std::span<const double> t_grid,
                                 std::span<const double> data, const BaseDistribution& f0,
                                 const BaseMeasureSpec& nu, std::size_t reps,
                                 std::size_t wn_reps, const RngStream& root,
                                 const LaplaceOptions& options) {
  for (const auto& g : cls.members()) {
    if (!std::isfinite(total_variation(g))) {
      throw InvalidParameter("bv_laplace_check: member '" + g.label() +
                             "' has infinite total variation");
    }
  }
  BvLaplaceResult out;
  out.sweep = sweep(cls, t_grid, data, f0, nu, reps, root, options);
  if (wn_reps > 0) {
    const RngStream wn_root = root.child(kBridgeFunctionalBranch);
    for (const auto& g : cls.members()) {
      const std::vector<double> w = bridge_functional_samples(g, data, wn_reps, wn_root,
                                                              options.workers);
      const double sd = std::sqrt(empirical_variance(g, data));
      if (sd == 0.0) {
        const bool all_zero = std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
        out.wn_ks.push_back(all_zero ? 0.0 : 1.0);
        continue;
      }
      out.wn_ks.push_back(ks_one_sample(w, [sd](double x) { return normal_cdf(x / sd); }));
    }
  }
  return out;
}

double distributional_check(std::span<const double> data, const FunctionSpec& g,
                            const BaseDistribution& f0, const BaseMeasureSpec& nu,
                            std::size_t reps, const RngStream& root,
                            const LaplaceOptions& options) {
  const double sigma2 = sigma_g_squared(g, f0);
  if (!(sigma2 > 0.0)) {
    throw DegenerateLimit("distributional_check: sigma_g^2 = 0 for '" + g.label() + "'");
  }
  const std::vector<double> sorted = sorted_copy(data);
  const auto stats = sample_statistics({&g}, sorted, nu, reps, root, options);
  const double sd = std::sqrt(sigma2);
  return ks_one_sample(stats[0], [sd](double x) { return normal_cdf(x / sd); });
}

bool MomentCheckResult::pass() const {
  return !verdicts.empty() &&
         std::all_of(verdicts.begin(), verdicts.end(), [](bool v) { return v; });
}

MomentCheckResult beta_moment_check(double nu_mass, double t,
                                    const std::vector<std::size_t>& n_grid, std::size_t reps,
                                    const RngStream& root, MomentEstimator estimator,
                                    double rel_tolerance) {
  if (!(t >= 0.0 && t < 1.0)) throw InvalidParameter("t must satisfy 0 ≤ t < 1");
  if (!(nu_mass >= 0.0) || !std::isfinite(nu_mass)) {
    throw InvalidParameter("beta_moment_check: |nu| must be finite and nonnegative");
  }
  if (reps == 0) throw InvalidParameter("beta_moment_check: reps must be >= 1");
  if (n_grid.empty()) throw InvalidParameter("beta_moment_check: empty n grid");
  MomentCheckResult out;
  out.name = "beta-moments";
  out.n_grid = n_grid;
  out.tolerance = rel_tolerance;
  const double target = std::pow(1.0 - t, -nu_mass);
  const bool importance = estimator == MomentEstimator::kImportance && t > 0.0 && nu_mass > 0.0;
  for (std::size_t n : n_grid) {
    if (n == 0) throw InvalidParameter("beta_moment_check: n must be >= 1");
    const double dn = static_cast<double>(n);
    std::vector<double> logs(reps, 0.0);
    if (nu_mass > 0.0) {
      const double log_norm = -nu_mass * std::log(dn) - std::lgamma(dn) +
                              std::lgamma(nu_mass + dn) - nu_mass * std::log1p(-t);
      for (std::size_t r = 0; r < reps; ++r) {
        RngStream stream = root.child(r);
        if (importance) {
          const double u = gamma_sample(nu_mass, stream) / (1.0 - t);
          logs[r] = u >= dn ? -std::numeric_limits<double>::infinity()
                            : (dn - 1.0) * std::log1p(-u / dn) + u + log_norm;
        } else {
          logs[r] = dn * t * beta_sample(nu_mass, dn, stream);
        }
      }
    }
    const ExpMeanEstimate e = exp_mean(logs);
    out.estimates.push_back(e.estimate);
    out.se.push_back(e.se);
    out.targets.push_back(target);
    out.verdicts.push_back(std::fabs(e.estimate - target) <= rel_tolerance * target);
  }
  return out;
}

std::vector<EnvelopeRow> envelope_moment_check(const BaseMeasureSpec& nu, const FunctionSpec& G,
                                               std::span<const double> t_grid,
                                               const std::vector<std::size_t>& n_grid,
                                               std::size_t reps, const RngStream& root,
                                               const LaplaceOptions& options) {
  if (reps < 2) throw InvalidParameter("envelope_moment_check: reps must be >= 2");
  std::vector<double> probes = G.breakpoints();
  probes.insert(probes.end(), {-1e6, 0.0, 1e6});
  for (double x : probes) {
    if (G(x) < 0.0) throw InvalidParameter("envelope_moment_check: envelope must be >= 0");
  }
  std::vector<EnvelopeRow> rows;
  if (nu.is_bootstrap()) {
    for (std::size_t n : n_grid) {
      for (double t : t_grid) rows.push_back({n, t, 1.0, 0.0, false});
    }
    return rows;
  }
  // qg[r] = Q G, v[k][r] = V_n for n = n_grid[k].
  std::vector<double> qg(reps);
  std::vector<std::vector<double>> v(n_grid.size(), std::vector<double>(reps));
  parallel_for(reps, options.workers, [&](std::size_t r) {
    const RngStream rep = root.child(r);
    RngStream q_stream = rep.child(1);
    const DiscreteDistribution q = dp_prior_draw(nu, options.trunc_eps, q_stream);
    double s = q.residual_mass * G(q.residual_atom);
    for (std::size_t j = 0; j < q.atoms.size(); ++j) s += q.weights[j] * G(q.atoms[j]);
    qg[r] = s;
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      RngStream v_stream = rep.child(0);
      v[k][r] = prior_weight_sample(nu, n_grid[k], v_stream);
    }
  });
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    const double root_n = std::sqrt(static_cast<double>(n_grid[k]));
    for (double t : t_grid) {
      std::vector<double> logs(reps);
      for (std::size_t r = 0; r < reps; ++r) logs[r] = t * root_n * v[k][r] * qg[r];
      const ExpMeanEstimate full = exp_mean(logs);
      const ExpMeanEstimate half =
          exp_mean(std::span<const double>(logs.data(), reps / 2));
      EnvelopeRow row{n_grid[k], t, full.estimate, full.se, false};
      row.divergent = std::fabs(half.estimate - full.estimate) > 4.0 * half.se + 1e-12;
      rows.push_back(row);
    }
  }
  return rows;
}

MaximaResult maxima_check(const BaseDistribution& f0, double r,
                          const std::vector<std::size_t>& n_grid, RngStream& stream,
                          double threshold) {
  if (!(r > 0.0)) throw InvalidParameter("maxima_check: r must be positive");
  if (n_grid.empty()) throw InvalidParameter("maxima_check: empty n grid");
  MaximaResult out;
  double running = 0.0;
  std::size_t drawn = 0;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] == 0 || (k > 0 && n_grid[k] <= n_grid[k - 1])) {
      throw InvalidParameter("maxima_check: n grid must be positive and increasing");
    }
    for (; drawn < n_grid[k]; ++drawn) running = std::max(running, std::fabs(f0.sample(stream)));
    out.rows.push_back(
        {n_grid[k], running / std::pow(static_cast<double>(n_grid[k]), 1.0 / r)});
  }
  const double last = out.rows.back().ratio;
  out.pass = last <= threshold && (out.rows.size() == 1 || last < out.rows.front().ratio);
  return out;
}

double lindeberg_h(double u) { return u + std::cbrt(u); }

double lindeberg_h0(double u) {
  if (u <= 0.0) return 0.0;
  return std::pow(u, 0.25) * (1.0 + std::sqrt(std::fabs(std::log(u))));
}

LindebergResult lindeberg_diagnostic(std::span<const double> data, const FunctionSpec& g,
                                     double epsilon) {
  if (data.empty()) throw InvalidParameter("lindeberg_diagnostic: empty data");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidParameter("lindeberg_diagnostic: epsilon must lie in (0, 1)");
  }
  const double n = static_cast<double>(data.size());
  const double ref = g(data[0]);
  std::vector<double> d(data.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    d[i] = g(data[i]) - ref;
    mean += d[i];
  }
  mean /= n;
  double variance = 0.0;
  double truncated = 0.0;
  for (double& di : d) {
    di -= mean;
    if (di == 0.0) continue;
    variance += di * di;
    // E (W - 1)^2 1{|W - 1| > c} for W ~ Exp(1).
    const double c = epsilon * std::sqrt(n) / std::fabs(di);
    double tail = std::exp(-(1.0 + c)) * (c * c + 2.0 * c + 2.0);
    if (c < 1.0) tail += 1.0 - std::exp(c - 1.0) * (c * c - 2.0 * c + 2.0);
    truncated += di * di * tail;
  }
  LindebergResult out;
  out.epsilon = epsilon;
  out.variance = variance / n;
  out.truncated_moment = truncated / n;
  out.lindeberg_term = lindeberg_h(out.truncated_moment) / (epsilon * epsilon);
  out.h0_term = lindeberg_h0(epsilon * out.variance);
  out.bound = epsilon + out.lindeberg_term + out.h0_term;
  return out;
}

}  // namespace bvmdp
