#include "bvmdp/experiments.h"

#include <openssl/evp.h>

#include <algorithm>
#include <type_traits>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

#include "bvmdp/bvm_verifier.h"
#include "bvmdp/coupling_lab.h"
#include "bvmdp/errors.h"
#include "bvmdp/function_classes.h"
#include "bvmdp/gauss_paths.h"
#include "bvmdp/special.h"
#include "bvmdp/stats.h"

namespace bvmdp {
namespace {

using nlohmann::json;

const std::vector<ExperimentInfo> kRegistry = {
    {"laplace-uniformity",
     "Conditional Laplace transform of sqrt(n)(P_n g - P_emp g) over a function class",
     "n,member,t,estimate,se,target,gap"},
    {"bv-laplace",
     "Wide-t Laplace check for bounded-variation classes plus the bridge functional law",
     "member,t,estimate,se,target,gap"},
    {"coupling-rate", "Bridge coupling distance per n and its log-log rate",
     "backend,nu_mass,n,rep,delta,v_n,prior_term,quantile_term,grid_shift,scale_shift,"
     "discretization"},
    {"kiefer-rate", "Doubling-batch Kiefer coupling distance per n and its rate",
     "nu_mass,n,rep,delta,v_n,prior_term"},
    {"true-cdf", "Coupling indexed by the true CDF: event frequency and bridge modulus",
     "n,rep,ks,delta,bridge_delta,modulus"},
    {"tail-bounds", "Gamma, DKW, Borell and Kolmogorov tail checks",
     "check,label,x,empirical,bound,se,pass"},
    {"beta-moments", "E exp(n t V_n) for V_n ~ Beta(|nu|, n), optional envelope moments",
     "check,n,t,estimate,se,target,pass"},
    {"maxima", "Sample-path maxima max|Z_i| / n^(1/r)", "path,n,ratio"},
    {"distributional", "KS distance of the centered statistic to its Gaussian limit",
     "n,ks"},
    {"lindeberg", "Unit-constant CLT bound components",
     "n,epsilon,bound,truncated_moment,lindeberg_term,variance,h0_term"},
};

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

void csv_row(std::ostream& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

// ---- config field access; every failure names the field.

// json's get<> silently wraps negatives and truncates fractions into
// unsigned integers.
template <class T>
struct is_integer_vector : std::false_type {};
template <class U>
struct is_integer_vector<std::vector<U>> : std::is_integral<U> {};

template <class T>
bool representable(const json& v) {
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!v.is_number_integer()) return false;
    if constexpr (std::is_unsigned_v<T>) {
      return v.is_number_unsigned() || v.get<std::int64_t>() >= 0;
    }
    return true;
  } else if constexpr (is_integer_vector<T>::value) {
    if (!v.is_array()) return false;
    return std::all_of(v.begin(), v.end(),
                       [](const json& e) { return representable<typename T::value_type>(e); });
  } else {
    return true;
  }
}

template <class T>
T field(const json& j, const std::string& key, const T& fallback,
        const std::string& prefix = "") {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  if (!representable<T>(j.at(key))) {
    throw ConfigError(prefix + key, std::is_signed_v<T> ? "must be an integer"
                                                        : "must be a nonnegative integer");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(prefix + key, "has the wrong type");
  }
}

template <class T>
T required(const json& j, const std::string& key, const std::string& prefix = "") {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) {
    throw ConfigError(prefix + key, "missing required field");
  }
  return field<T>(j, key, T{}, prefix);
}

json block(const json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null()) return json::object();
  if (!j.at(key).is_object()) throw ConfigError(key, "must be an object");
  return j.at(key);
}

void require(bool ok, const std::string& fieldname, const std::string& message) {
  if (!ok) throw ConfigError(fieldname, message);
}

std::pair<double, double> window(const json& j, const std::string& key,
                                 std::pair<double, double> fallback,
                                 const std::string& prefix) {
  const auto v = field<std::vector<double>>(j, key, {fallback.first, fallback.second}, prefix);
  require(v.size() == 2 && v[0] <= v[1], prefix + key, "must be [lo, hi] with lo <= hi");
  return {v[0], v[1]};
}

template <class F>
auto wrap(const std::string& fieldname, F&& make) -> decltype(make()) {
  try {
    return make();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fieldname, e.what());
  }
}

void require_sizes(const ExperimentConfig& c, std::size_t min_n, std::size_t min_count) {
  require(c.n_list.size() >= min_count, "n_list",
          "needs at least " + std::to_string(min_count) + " sizes");
  for (std::size_t n : c.n_list) {
    require(n >= min_n, "n_list", "sizes must be >= " + std::to_string(min_n));
  }
}

void require_reps(const ExperimentConfig& c, std::size_t min_reps) {
  require(c.reps >= min_reps, "reps", "reps must be >= " + std::to_string(min_reps));
}

const BaseMeasureSpec& first_nu(const ExperimentConfig& c) { return c.nu_list.front(); }

std::size_t largest(const std::vector<std::size_t>& v) {
  return *std::max_element(v.begin(), v.end());
}

struct Outputs {
  std::ostringstream csv;
  json summary = json::object();
  std::vector<Verdict> verdicts;

  void verdict(std::string criterion, std::string target, double estimate,
               std::string tolerance, bool pass) {
    verdicts.push_back(
        {std::move(criterion), std::move(target), estimate, std::move(tolerance), pass});
  }
};

// ---- beta-moments

struct BetaParams {
  double t = 0.0;
  double nu_mass = 0.0;
  MomentEstimator estimator = MomentEstimator::kImportance;
  double tolerance = 0.02;
  std::optional<FunctionSpec> envelope;
  std::vector<double> env_t;
  std::vector<std::size_t> env_n;
  std::size_t env_reps = 0;
  double env_tolerance = 0.02;
};

BetaParams beta_params(const ExperimentConfig& c) {
  BetaParams p;
  p.t = required<double>(c.params, "t");
  require(p.t >= 0.0 && p.t < 1.0, "t", "t must satisfy 0 ≤ t < 1");
  p.nu_mass = field<double>(c.params, "nu_mass", first_nu(c).total_mass());
  require(p.nu_mass >= 0.0 && std::isfinite(p.nu_mass), "nu_mass", "must be finite and >= 0");
  require_sizes(c, 1, 1);
  require_reps(c, 1);
  const auto est = field<std::string>(c.params, "estimator", "importance");
  require(est == "importance" || est == "plain", "estimator",
          "must be 'importance' or 'plain'");
  p.estimator = est == "plain" ? MomentEstimator::kPlain : MomentEstimator::kImportance;
  p.tolerance = field<double>(block(c.params, "tolerances"), "rel_error", 0.02, "tolerances.");
  require(p.tolerance > 0.0, "tolerances.rel_error", "must be positive");
  const json env = block(c.params, "envelope");
  if (!env.empty()) {
    p.envelope = wrap("envelope.G", [&] {
      return function_spec_from_json(required<json>(env, "G", "envelope."));
    });
    p.env_t = required<std::vector<double>>(env, "t_grid", "envelope.");
    p.env_n = required<std::vector<std::size_t>>(env, "n_list", "envelope.");
    p.env_reps = required<std::size_t>(env, "reps", "envelope.");
    p.env_tolerance = field<double>(env, "tolerance", 0.02, "envelope.");
    require(p.env_reps >= 2, "envelope.reps", "must be >= 2");
    require(!p.env_n.empty() && !p.env_t.empty(), "envelope", "needs t_grid and n_list");
  }
  return p;
}

void run_beta(const ExperimentConfig& c, Outputs& o) {
  const BetaParams p = beta_params(c);
  const RngStream root(c.seed);
  const MomentCheckResult r =
      beta_moment_check(p.nu_mass, p.t, c.n_list, c.reps, root.child(0), p.estimator,
                        p.tolerance);
  csv_row(o.csv, {"check", "n", "t", "estimate", "se", "target", "pass"});
  json rows = json::array();
  for (std::size_t k = 0; k < r.n_grid.size(); ++k) {
    csv_row(o.csv, {"beta", std::to_string(r.n_grid[k]), num(p.t), num(r.estimates[k]),
                    num(r.se[k]), num(r.targets[k]), r.verdicts[k] ? "1" : "0"});
    rows.push_back({{"n", r.n_grid[k]},
                    {"estimate", r.estimates[k]},
                    {"se", r.se[k]},
                    {"target", r.targets[k]}});
    o.verdict("beta moment |nu|=" + short_num(p.nu_mass) + " t=" + short_num(p.t) +
                  " n=" + std::to_string(r.n_grid[k]),
              "(1-t)^-|nu| = " + short_num(r.targets[k]), r.estimates[k],
              "rel " + short_num(p.tolerance), r.verdicts[k]);
  }
  o.summary["beta"] = rows;
  o.summary["estimator"] = p.estimator == MomentEstimator::kPlain ? "plain" : "importance";
  if (p.envelope) {
    LaplaceOptions opts;
    opts.workers = c.workers;
    const auto env = envelope_moment_check(first_nu(c), *p.envelope, p.env_t, p.env_n,
                                           p.env_reps, root.child(1), opts);
    json erows = json::array();
    for (const auto& row : env) {
      const bool pass = std::fabs(row.estimate - 1.0) <= p.env_tolerance && !row.divergent;
      csv_row(o.csv, {"envelope", std::to_string(row.n), num(row.t), num(row.estimate),
                      num(row.se), "1", pass ? "1" : "0"});
      erows.push_back({{"n", row.n},
                       {"t", row.t},
                       {"estimate", row.estimate},
                       {"se", row.se},
                       {"divergent", row.divergent}});
      o.verdict("envelope moment n=" + std::to_string(row.n) + " t=" + short_num(row.t), "1",
                row.estimate, "abs " + short_num(p.env_tolerance) + ", no divergence", pass);
    }
    o.summary["envelope"] = erows;
  }
}

// ---- laplace-uniformity

struct UniformityParams {
  std::optional<ClassSpec> cls;
  std::optional<double> sup_gap;
  std::optional<double> rel_error;
  bool monotone = false;
  LaplaceOptions options;
};

UniformityParams uniformity_params(const ExperimentConfig& c) {
  UniformityParams p;
  const json cls = c.params.contains("class") ? c.params.at("class")
                                              : json{{"kind", "indicator_grid"}, {"count", 21}};
  p.cls = wrap("class", [&] { return class_spec_from_json(cls, c.f0); });
  for (const auto& g : p.cls->members()) {
    wrap("class", [&] { return sigma_g_squared(g, c.f0); });
  }
  require(!c.t_grid.empty(), "t_grid", "must list at least one t");
  require_sizes(c, 1, 1);
  require_reps(c, 1000);
  p.options.workers = c.workers;
  p.options.trunc_eps = field<double>(c.params, "trunc_eps", kDefaultTruncEps);
  require(p.options.trunc_eps > 0.0 && p.options.trunc_eps < 1.0, "trunc_eps",
          "must lie in (0, 1)");
  p.options.t_window = field<double>(c.params, "t_window", 1.0);
  if (!first_nu(c).is_bootstrap()) {
    for (double t : c.t_grid) {
      require(std::fabs(t) <= p.options.t_window, "t_grid",
              "|t| exceeds t_window for |nu| > 0");
    }
  }
  const json tol = block(c.params, "tolerances");
  if (tol.contains("sup_gap")) p.sup_gap = field<double>(tol, "sup_gap", 0.0, "tolerances.");
  if (tol.contains("rel_error")) {
    p.rel_error = field<double>(tol, "rel_error", 0.0, "tolerances.");
  }
  p.monotone = field<bool>(tol, "monotone", c.n_list.size() > 1, "tolerances.");
  require(!p.monotone || c.n_list.size() > 1, "tolerances.monotone", "needs two or more sizes");
  return p;
}

void run_uniformity(const ExperimentConfig& c, Outputs& o) {
  const UniformityParams p = uniformity_params(c);
  const RngStream root(c.seed);
  csv_row(o.csv, {"n", "member", "t", "estimate", "se", "target", "gap"});
  const std::size_t n_top = largest(c.n_list);
  std::vector<LaplaceSweepResult> results;
  json per_n = json::array();
  for (std::size_t n : c.n_list) {
    RngStream data_stream = root.child(0);
    const std::vector<double> data = c.f0.sample(n, data_stream);
    LaplaceSweepResult res = uniformity_sweep(*p.cls, c.t_grid, data, c.f0, first_nu(c),
                                              c.reps, root.child(1), p.options);
    for (const auto& row : res.rows) {
      csv_row(o.csv, {std::to_string(n), row.label, num(row.t), num(row.estimate), num(row.se),
                      num(row.target), num(row.gap)});
      if (p.rel_error && n == n_top) {
        const double rel = std::fabs(row.estimate / row.target - 1.0);
        o.verdict("laplace " + row.label + " t=" + short_num(row.t) + " n=" + std::to_string(n),
                  short_num(row.target), row.estimate, "rel " + short_num(*p.rel_error),
                  rel <= *p.rel_error);
      }
    }
    per_n.push_back({{"n", n}, {"t_grid", res.t_grid}, {"sup_gap", res.sup_gap}});
    if (p.sup_gap && n == n_top) {
      for (std::size_t k = 0; k < res.t_grid.size(); ++k) {
        o.verdict("sup gap t=" + short_num(res.t_grid[k]) + " n=" + std::to_string(n), "0",
                  res.sup_gap[k], "<= " + short_num(*p.sup_gap), res.sup_gap[k] <= *p.sup_gap);
      }
    }
    results.push_back(std::move(res));
  }
  o.summary["per_n"] = per_n;
  if (p.monotone) {
    for (std::size_t k = 0; k < c.t_grid.size(); ++k) {
      const double first = results.front().sup_gap[k];
      const double last = results.back().sup_gap[k];
      o.verdict("sup gap decreases n=" + std::to_string(c.n_list.front()) + "->" +
                    std::to_string(c.n_list.back()) + " t=" + short_num(c.t_grid[k]),
                "< " + short_num(first), last, "strict", last < first);
    }
  }
}

// ---- bv-laplace

struct BvParams {
  std::optional<ClassSpec> cls;
  std::size_t wn_n = 0;
  std::size_t wn_reps = 0;
  double rel_error = 0.02;
  double wn_ks = 0.01;
  LaplaceOptions options;
};

BvParams bv_params(const ExperimentConfig& c) {
  BvParams p;
  p.cls = wrap("class", [&] { return class_spec_from_json(required<json>(c.params, "class"),
                                                          c.f0); });
  for (const auto& g : p.cls->members()) {
    require(std::isfinite(total_variation(g)), "class",
            "member '" + g.label() + "' has infinite total variation");
  }
  require(!c.t_grid.empty(), "t_grid", "must list at least one t");
  require_sizes(c, 1, 1);
  require_reps(c, 1000);
  p.wn_n = field<std::size_t>(c.params, "wn_n", c.n_list.front());
  p.wn_reps = field<std::size_t>(c.params, "wn_reps", 0);
  require(p.wn_n >= 1, "wn_n", "must be >= 1");
  const json tol = block(c.params, "tolerances");
  p.rel_error = field<double>(tol, "rel_error", 0.02, "tolerances.");
  p.wn_ks = field<double>(tol, "wn_ks", 0.01, "tolerances.");
  p.options.workers = c.workers;
  p.options.trunc_eps = field<double>(c.params, "trunc_eps", kDefaultTruncEps);
  return p;
}

void bridge_functional_verdicts(const std::vector<FunctionSpec>& members, std::size_t wn_n,
                                std::size_t wn_reps, double tolerance,
                                const BaseDistribution& f0, const RngStream& root, int workers,
                                Outputs& o) {
  if (wn_reps == 0) return;
  RngStream data_stream = root.child(2);
  const std::vector<double> data = f0.sample(wn_n, data_stream);
  json rows = json::array();
  for (std::size_t m = 0; m < members.size(); ++m) {
    const std::vector<double> w =
        bridge_functional_samples(members[m], data, wn_reps, root.child(3).child(m), workers);
    const double sd = std::sqrt(empirical_variance(members[m], data));
    const double ks =
        sd > 0.0 ? ks_one_sample(w, [sd](double x) { return normal_cdf(x / sd); }) : 0.0;
    rows.push_back({{"member", members[m].label()}, {"n", wn_n}, {"ks", ks}, {"sd", sd}});
    o.verdict("bridge functional law " + members[m].label() + " n=" + std::to_string(wn_n),
              "N(0, P_n(g - P_n g)^2)", ks, "KS <= " + short_num(tolerance), ks <= tolerance);
  }
  o.summary["bridge_functional"] = rows;
}

void run_bv(const ExperimentConfig& c, Outputs& o) {
  const BvParams p = bv_params(c);
  const RngStream root(c.seed);
  const std::size_t n = c.n_list.front();
  RngStream data_stream = root.child(0);
  const std::vector<double> data = c.f0.sample(n, data_stream);
  const BvLaplaceResult res = bv_laplace_check(*p.cls, c.t_grid, data, c.f0, first_nu(c),
                                               c.reps, 0, root.child(1), p.options);
  csv_row(o.csv, {"member", "t", "estimate", "se", "target", "gap"});
  for (const auto& row : res.sweep.rows) {
    csv_row(o.csv, {row.label, num(row.t), num(row.estimate), num(row.se), num(row.target),
                    num(row.gap)});
    const double rel = std::fabs(row.estimate / row.target - 1.0);
    o.verdict("bv laplace " + row.label + " t=" + short_num(row.t) + " n=" + std::to_string(n),
              short_num(row.target), row.estimate, "rel " + short_num(p.rel_error),
              rel <= p.rel_error);
  }
  o.summary["sup_gap"] = res.sweep.sup_gap;
  o.summary["t_grid"] = res.sweep.t_grid;
  bridge_functional_verdicts(p.cls->members(), p.wn_n, p.wn_reps, p.wn_ks, c.f0, root,
                             c.workers, o);
}

// ---- distributional

struct DistParams {
  std::optional<FunctionSpec> g;
  std::optional<FunctionSpec> wn_g;
  double ks = 0.02;
  bool monotone = false;
  std::size_t wn_n = 0;
  std::size_t wn_reps = 0;
  double wn_ks = 0.01;
  LaplaceOptions options;
};

DistParams dist_params(const ExperimentConfig& c) {
  DistParams p;
  p.g = wrap("g", [&] { return function_spec_from_json(required<json>(c.params, "g")); });
  const double s2 = wrap("g", [&] { return sigma_g_squared(*p.g, c.f0); });
  require(s2 > 0.0, "g", "sigma_g^2 = 0: the Gaussian limit is degenerate");
  require_sizes(c, 1, 1);
  require_reps(c, 1);
  const json tol = block(c.params, "tolerances");
  p.ks = field<double>(tol, "ks", 0.02, "tolerances.");
  p.monotone = field<bool>(tol, "monotone", c.n_list.size() > 1, "tolerances.");
  p.wn_n = field<std::size_t>(c.params, "wn_n", c.n_list.front());
  p.wn_reps = field<std::size_t>(c.params, "wn_reps", 0);
  p.wn_ks = field<double>(tol, "wn_ks", 0.01, "tolerances.");
  p.wn_g = p.g;
  if (c.params.contains("wn_g")) {
    p.wn_g = wrap("wn_g", [&] { return function_spec_from_json(c.params.at("wn_g")); });
  }
  require(p.wn_reps == 0 || std::isfinite(total_variation(*p.wn_g)),
          c.params.contains("wn_g") ? "wn_g" : "g",
          "the bridge functional check needs finite total variation");
  p.options.workers = c.workers;
  p.options.trunc_eps = field<double>(c.params, "trunc_eps", kDefaultTruncEps);
  return p;
}

void run_distributional(const ExperimentConfig& c, Outputs& o) {
  const DistParams p = dist_params(c);
  const RngStream root(c.seed);
  csv_row(o.csv, {"n", "ks"});
  std::vector<double> ks_values;
  for (std::size_t n : c.n_list) {
    RngStream data_stream = root.child(0);
    const std::vector<double> data = c.f0.sample(n, data_stream);
    const double ks =
        distributional_check(data, *p.g, c.f0, first_nu(c), c.reps, root.child(1), p.options);
    ks_values.push_back(ks);
    csv_row(o.csv, {std::to_string(n), num(ks)});
  }
  o.summary["n_list"] = c.n_list;
  o.summary["ks"] = ks_values;
  const std::size_t top = static_cast<std::size_t>(
      std::max_element(c.n_list.begin(), c.n_list.end()) - c.n_list.begin());
  o.verdict("centered statistic KS n=" + std::to_string(c.n_list[top]), "N(0, sigma_g^2)",
            ks_values[top], "<= " + short_num(p.ks), ks_values[top] <= p.ks);
  if (p.monotone) {
    o.verdict("KS decreases n=" + std::to_string(c.n_list.front()) + "->" +
                  std::to_string(c.n_list.back()),
              "< " + short_num(ks_values.front()), ks_values.back(), "strict",
              ks_values.back() < ks_values.front());
  }
  bridge_functional_verdicts({*p.wn_g}, p.wn_n, p.wn_reps, p.wn_ks, c.f0, root, c.workers, o);
}

// ---- coupling-rate

struct CouplingParams {
  std::vector<CouplingBackend> backends;
  std::map<CouplingBackend, std::pair<double, double>> slopes;
  CouplingOptions options;
  std::optional<std::size_t> separation_n;
  double separation_factor = 3.0;
  std::vector<double> exp_t;
  std::optional<double> exp_max;
  bool fit_slope = true;
};

CouplingParams coupling_params(const ExperimentConfig& c) {
  CouplingParams p;
  const auto names =
      field<std::vector<std::string>>(c.params, "backends", {"gamma_midpoint"});
  require(!names.empty(), "backends", "must list at least one backend");
  for (const auto& name : names) {
    p.backends.push_back(wrap("backends", [&] { return backend_from_name(name); }));
  }
  p.fit_slope = field<bool>(c.params, "fit_slope", true);
  require_sizes(c, 2, p.fit_slope ? 4 : 1);
  require_reps(c, 1);
  const json slopes = block(block(c.params, "tolerances"), "slope");
  for (auto b : p.backends) {
    const auto fallback = b == CouplingBackend::kIndependent ? std::pair{-0.1, 0.1}
                                                              : std::pair{-0.6, -0.35};
    p.slopes[b] = window(slopes, backend_name(b), fallback, "tolerances.slope.");
  }
  p.options.workers = c.workers;
  p.options.fixed_data = field<bool>(c.params, "fixed_data", false);
  p.options.trunc_eps = field<double>(c.params, "trunc_eps", kDefaultTruncEps);
  require(p.options.trunc_eps > 0.0 && p.options.trunc_eps < 1.0, "trunc_eps",
          "must lie in (0, 1)");
  const json sep = block(c.params, "separation");
  if (!sep.empty()) {
    p.separation_n = required<std::size_t>(sep, "n", "separation.");
    p.separation_factor = field<double>(sep, "factor", 3.0, "separation.");
    require(std::find(c.n_list.begin(), c.n_list.end(), *p.separation_n) != c.n_list.end(),
            "separation.n", "must be one of n_list");
    require(std::find(p.backends.begin(), p.backends.end(), CouplingBackend::kIndependent) !=
                    p.backends.end() &&
                std::find(p.backends.begin(), p.backends.end(),
                          CouplingBackend::kGammaMidpoint) != p.backends.end(),
            "separation", "needs both backends");
  }
  const json em = block(c.params, "exp_moment");
  if (!em.empty()) {
    p.exp_t = required<std::vector<double>>(em, "t", "exp_moment.");
    if (em.contains("max")) p.exp_max = field<double>(em, "max", 0.0, "exp_moment.");
  }
  return p;
}

void run_coupling(const ExperimentConfig& c, Outputs& o) {
  const CouplingParams p = coupling_params(c);
  const RngStream root(c.seed);
  csv_row(o.csv, {"backend", "nu_mass", "n", "rep", "delta", "v_n", "prior_term",
                  "quantile_term", "grid_shift", "scale_shift", "discretization"});
  double worst_bookkeeping = -INFINITY;
  double worst_prior = -INFINITY;
  json fits = json::array();
  std::map<std::pair<CouplingBackend, std::size_t>, std::map<std::size_t, double>> medians;
  for (auto backend : p.backends) {
    CouplingOptions opts = p.options;
    opts.backend = backend;
    for (std::size_t v = 0; v < c.nu_list.size(); ++v) {
      const BaseMeasureSpec& nu = c.nu_list[v];
      std::vector<double> ns, meds;
      json per_n = json::array();
      for (std::size_t n : c.n_list) {
        const auto records = bridge_coupling_experiment(nu, c.f0, n, c.reps, root, opts);
        for (const auto& rec : records) {
          csv_row(o.csv, {backend_name(backend), num(nu.total_mass()), std::to_string(n),
                          std::to_string(rec.rep), num(rec.delta), num(rec.v_n),
                          num(rec.terms.at("prior_term")), num(rec.terms.at("quantile_term")),
                          num(rec.terms.at("grid_shift")), num(rec.terms.at("scale_shift")),
                          num(rec.terms.at("discretization"))});
          worst_bookkeeping = std::max(worst_bookkeeping, rec.delta - rec.term_sum());
          worst_prior = std::max(worst_prior, rec.terms.at("prior_term") -
                                                  2.0 * std::sqrt(static_cast<double>(n)) *
                                                      rec.v_n);
        }
        const NSummary s = summarize_by_n(records).front();
        ns.push_back(static_cast<double>(n));
        meds.push_back(s.median_delta);
        medians[{backend, v}][n] = s.median_delta;
        json entry = {{"n", n}, {"median_delta", s.median_delta}, {"median_terms", s.median_terms}};
        if (!p.exp_t.empty() && backend == CouplingBackend::kGammaMidpoint) {
          json em = json::array();
          for (double t : p.exp_t) {
            std::vector<double> logs;
            for (const auto& rec : records) logs.push_back(t * rec.delta);
            const ExpMeanEstimate e = exp_mean(logs);
            em.push_back({{"t", t}, {"estimate", e.estimate}, {"se", e.se}});
          }
          entry["exp_moment"] = em;
        }
        per_n.push_back(entry);
      }
      const std::string tag =
          backend_name(backend) + " |nu|=" + short_num(nu.total_mass());
      json fit_row = {{"backend", backend_name(backend)},
                      {"nu_mass", nu.total_mass()},
                      {"per_n", per_n}};
      if (p.fit_slope) {
        const RateFit fit = rate_fit(ns, meds);
        const auto [lo, hi] = p.slopes.at(backend);
        fit_row["slope"] = fit.slope;
        fit_row["slope_se"] = fit.slope_se;
        fit_row["intercept"] = fit.intercept;
        fit_row["residual"] = fit.residual;
        o.verdict("coupling slope " + tag, "[" + short_num(lo) + ", " + short_num(hi) + "]",
                  fit.slope, "window", fit.slope >= lo && fit.slope <= hi);
      }
      fits.push_back(fit_row);
      if (!p.exp_t.empty() && backend == CouplingBackend::kGammaMidpoint) {
        for (std::size_t k = 0; k < p.exp_t.size(); ++k) {
          std::vector<double> est;
          for (const auto& entry : per_n) est.push_back(entry["exp_moment"][k]["estimate"]);
          bool decreasing = true;
          for (std::size_t i = 1; i < est.size(); ++i) {
            decreasing = decreasing && std::fabs(est[i] - 1.0) < std::fabs(est[i - 1] - 1.0);
          }
          const std::string t_tag = " t=" + short_num(p.exp_t[k]);
          o.verdict("E exp(t delta) approaches 1 " + tag + t_tag, "monotone toward 1",
                    est.back(), "strict", decreasing);
          if (p.exp_max && p.exp_t[k] > 0.0) {
            o.verdict("E exp(t delta) at n=" + std::to_string(c.n_list.back()) + " " + tag + t_tag,
                      "<= " + short_num(*p.exp_max), est.back(), "bound", est.back() <= *p.exp_max);
          }
        }
      }
    }
  }
  o.summary["fits"] = fits;
  o.verdict("bookkeeping delta <= sum of terms", "<= 1e-10", worst_bookkeeping, "1e-10",
            worst_bookkeeping <= 1e-10);
  o.verdict("prior term <= 2 sqrt(n) v_n", "<= 0", worst_prior, "1e-12", worst_prior <= 1e-12);
  if (p.separation_n) {
    const double ind = medians[{CouplingBackend::kIndependent, 0}][*p.separation_n];
    const double gam = medians[{CouplingBackend::kGammaMidpoint, 0}][*p.separation_n];
    o.verdict("control separation n=" + std::to_string(*p.separation_n),
              ">= " + short_num(p.separation_factor), ind / gam, "ratio of medians",
              ind >= p.separation_factor * gam);
  }
}

// ---- kiefer-rate

struct KieferParams {
  std::pair<double, double> slope;
  CouplingOptions options;
};

KieferParams kiefer_params(const ExperimentConfig& c) {
  KieferParams p;
  require_sizes(c, 2, 4);
  for (std::size_t k = 1; k < c.n_list.size(); ++k) {
    require(c.n_list[k] == 2 * c.n_list[k - 1], "n_list", "must be strictly doubling");
  }
  require_reps(c, 1);
  p.slope = window(block(c.params, "tolerances"), "slope", {-0.45, -0.15}, "tolerances.");
  p.options.workers = c.workers;
  p.options.backend = wrap("backend", [&] {
    return backend_from_name(field<std::string>(c.params, "backend", "gamma_midpoint"));
  });
  p.options.fixed_data = field<bool>(c.params, "fixed_data", false);
  p.options.trunc_eps = field<double>(c.params, "trunc_eps", kDefaultTruncEps);
  return p;
}

void run_kiefer(const ExperimentConfig& c, Outputs& o) {
  const KieferParams p = kiefer_params(c);
  const RngStream root(c.seed);
  csv_row(o.csv, {"nu_mass", "n", "rep", "delta", "v_n", "prior_term"});
  json fits = json::array();
  for (const auto& nu : c.nu_list) {
    const auto records = kiefer_coupling_experiment(nu, c.f0, c.n_list, c.reps, root, p.options);
    for (const auto& rec : records) {
      csv_row(o.csv, {num(nu.total_mass()), std::to_string(rec.n), std::to_string(rec.rep),
                      num(rec.delta), num(rec.v_n), num(rec.terms.at("prior_term"))});
    }
    std::vector<double> ns, meds;
    json per_n = json::array();
    for (const auto& s : summarize_by_n(records)) {
      ns.push_back(static_cast<double>(s.n));
      meds.push_back(s.median_delta);
      per_n.push_back({{"n", s.n}, {"median_delta", s.median_delta}});
    }
    const RateFit fit = rate_fit(ns, meds);
    fits.push_back({{"nu_mass", nu.total_mass()},
                    {"per_n", per_n},
                    {"slope", fit.slope},
                    {"slope_se", fit.slope_se},
                    {"intercept", fit.intercept},
                    {"residual", fit.residual}});
    o.verdict("kiefer slope |nu|=" + short_num(nu.total_mass()),
              "[" + short_num(p.slope.first) + ", " + short_num(p.slope.second) + "]", fit.slope,
              "window", fit.slope >= p.slope.first && fit.slope <= p.slope.second);
  }
  o.summary["fits"] = fits;
}

// ---- true-cdf

struct TrueCdfParams {
  std::vector<double> y_list;
  std::vector<std::size_t> modulus_n;
  std::size_t modulus_reps = 0;
  std::pair<double, double> modulus_slope;
  CouplingOptions options;
};

TrueCdfParams true_cdf_params(const ExperimentConfig& c) {
  TrueCdfParams p;
  require_sizes(c, 2, 1);
  require_reps(c, 1);
  p.y_list = field<std::vector<double>>(c.params, "y_list", {0.5, 1.0, 1.5});
  require(!p.y_list.empty(), "y_list", "must list at least one y");
  for (double y : p.y_list) require(y > 0.0, "y_list", "entries must be positive");
  p.modulus_n = field<std::vector<std::size_t>>(c.params, "modulus_n_list", {});
  p.modulus_reps = field<std::size_t>(c.params, "modulus_reps", 0);
  if (!p.modulus_n.empty()) {
    require(p.modulus_n.size() >= 4, "modulus_n_list", "rate fit needs at least 4 sizes");
    for (std::size_t n : p.modulus_n) require(n >= 2, "modulus_n_list", "sizes must be >= 2");
    require(p.modulus_reps >= 1, "modulus_reps", "must be >= 1");
  }
  p.modulus_slope =
      window(block(c.params, "tolerances"), "modulus_slope", {-0.35, -0.15}, "tolerances.");
  p.options.workers = c.workers;
  p.options.trunc_eps = field<double>(c.params, "trunc_eps", kDefaultTruncEps);
  return p;
}

void run_true_cdf(const ExperimentConfig& c, Outputs& o) {
  const TrueCdfParams p = true_cdf_params(c);
  const RngStream root(c.seed);
  const std::size_t n = c.n_list.front();
  const double y_max = *std::max_element(p.y_list.begin(), p.y_list.end());
  const auto records =
      true_cdf_experiment(first_nu(c), c.f0, n, c.reps, y_max, root.child(0), p.options);
  csv_row(o.csv, {"n", "rep", "ks", "delta", "bridge_delta", "modulus"});
  double worst_triangle = -INFINITY;
  for (const auto& rec : records) {
    csv_row(o.csv, {std::to_string(rec.n), std::to_string(rec.rep), num(rec.ks), num(rec.delta),
                    num(rec.bridge_delta), num(rec.modulus)});
    worst_triangle = std::max(worst_triangle, rec.delta - rec.bridge_delta - rec.modulus);
  }
  json events = json::array();
  for (double y : p.y_list) {
    const auto hits = static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(), [y](const TrueCdfRecord& r) { return r.ks <= y; }));
    const double freq = static_cast<double>(hits) / static_cast<double>(records.size());
    const double bound = 1.0 - 2.0 * std::exp(-2.0 * y * y);
    const double se = binomial_se(std::clamp(bound, 0.0, 1.0), records.size());
    events.push_back({{"y", y}, {"frequency", freq}, {"bound", bound}, {"se", se}});
    o.verdict("P(A_n,y) n=" + std::to_string(n) + " y=" + short_num(y),
              ">= " + short_num(bound), freq, "3 SE = " + short_num(3.0 * se),
              freq >= bound - 3.0 * se);
  }
  o.summary["events"] = events;
  o.verdict("delta <= bridge delta + modulus", "<= 1e-10", worst_triangle, "1e-10",
            worst_triangle <= 1e-10);
  if (!p.modulus_n.empty()) {
    std::vector<double> ns, meds;
    json per_n = json::array();
    for (std::size_t m : p.modulus_n) {
      const auto recs = true_cdf_experiment(first_nu(c), c.f0, m, p.modulus_reps, y_max,
                                            root.child(1), p.options);
      std::vector<double> mods;
      for (const auto& r : recs) mods.push_back(r.modulus);
      const double med = median(mods);
      ns.push_back(static_cast<double>(m));
      meds.push_back(med);
      per_n.push_back({{"n", m}, {"median_modulus", med}});
    }
    const RateFit fit = rate_fit(ns, meds);
    o.summary["modulus"] = {{"per_n", per_n}, {"slope", fit.slope}, {"slope_se", fit.slope_se}};
    o.verdict("modulus slope",
              "[" + short_num(p.modulus_slope.first) + ", " + short_num(p.modulus_slope.second) +
                  "]",
              fit.slope, "window",
              fit.slope >= p.modulus_slope.first && fit.slope <= p.modulus_slope.second);
  }
}

// ---- tail-bounds

void run_tail(const ExperimentConfig& c, Outputs& o) {
  const RngStream root(c.seed);
  const json gamma = block(c.params, "gamma");
  const json dkw = block(c.params, "dkw");
  const json borell = block(c.params, "borell");
  const json kolm = block(c.params, "kolmogorov");
  csv_row(o.csv, {"check", "label", "x", "empirical", "bound", "se", "pass"});
  std::vector<std::pair<std::string, TailRow>> rows;
  if (!gamma.empty()) {
    const auto thetas = required<std::vector<double>>(gamma, "thetas", "gamma.");
    const auto xs = required<std::vector<double>>(gamma, "x", "gamma.");
    const auto draws = required<std::size_t>(gamma, "draws", "gamma.");
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      RngStream s = root.child(0).child(k);
      for (auto& r : gamma_tail_check(thetas[k], xs, draws, s)) rows.emplace_back("gamma", r);
    }
  }
  if (!dkw.empty()) {
    const auto ns = required<std::vector<std::size_t>>(dkw, "n_list", "dkw.");
    const auto ys = required<std::vector<double>>(dkw, "y", "dkw.");
    const auto reps = required<std::size_t>(dkw, "reps", "dkw.");
    for (std::size_t k = 0; k < ns.size(); ++k) {
      for (auto& r : dkw_check(c.f0, ns[k], reps, ys, root.child(1).child(k), c.workers)) {
        rows.emplace_back("dkw", r);
      }
    }
  }
  if (!borell.empty()) {
    const auto m = required<std::size_t>(borell, "grid_size", "borell.");
    const auto reps = required<std::size_t>(borell, "reps", "borell.");
    const auto xs = required<std::vector<double>>(borell, "x", "borell.");
    std::vector<double> grid(m + 1);
    for (std::size_t i = 0; i <= m; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(m);
    const auto sups = bridge_sup_samples(grid, reps, root.child(2), c.workers);
    const std::size_t half = reps / 2;
    const double mean_sup = mean_and_se(std::span<const double>(sups.data(), half)).mean;
    o.summary["borell_mean_sup"] = mean_sup;
    for (auto& r : borell_check(std::span<const double>(sups.data() + half, reps - half), 0.25,
                                mean_sup, xs)) {
      rows.emplace_back("borell", r);
    }
  }
  for (const auto& [check, r] : rows) {
    csv_row(o.csv, {check, r.label, num(r.x), num(r.empirical), num(r.bound), num(r.se),
                    r.pass ? "1" : "0"});
    o.verdict(r.label + " x=" + short_num(r.x), "<= " + short_num(r.bound), r.empirical,
              "3 SE = " + short_num(3.0 * r.se), r.pass);
  }
  if (!kolm.empty()) {
    const auto m = required<std::size_t>(kolm, "grid_size", "kolmogorov.");
    const auto reps = required<std::size_t>(kolm, "reps", "kolmogorov.");
    const double x = field<double>(kolm, "x", 1.3581, "kolmogorov.");
    const double tol = field<double>(kolm, "tolerance", 0.006, "kolmogorov.");
    std::vector<double> grid(m + 1);
    for (std::size_t i = 0; i <= m; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(m);
    const auto sups = bridge_sup_samples(grid, reps, root.child(3), c.workers);
    const double freq =
        static_cast<double>(std::count_if(sups.begin(), sups.end(),
                                          [x](double s) { return s <= x; })) /
        static_cast<double>(reps);
    const double target = kolmogorov_cdf(x);
    csv_row(o.csv, {"kolmogorov", "P(sup|B| <= x)", num(x), num(freq), num(target),
                    num(binomial_se(target, reps)), std::fabs(freq - target) <= tol ? "1" : "0"});
    o.summary["kolmogorov"] = {{"x", x}, {"frequency", freq}, {"target", target}};
    o.verdict("kolmogorov P(sup|B| <= " + short_num(x) + ")", short_num(target), freq,
              "abs " + short_num(tol), std::fabs(freq - target) <= tol);
  }
}

void validate_tail(const ExperimentConfig& c) {
  static const char* const kBlocks[] = {"gamma", "dkw", "borell", "kolmogorov"};
  bool any = false;
  for (const char* b : kBlocks) any = any || !block(c.params, b).empty();
  require(any, "tail-bounds", "needs one of gamma, dkw, borell, kolmogorov");
  const json gamma = block(c.params, "gamma");
  if (!gamma.empty()) {
    for (double th : required<std::vector<double>>(gamma, "thetas", "gamma.")) {
      require(th > 0.0, "gamma.thetas", "must be positive");
    }
    for (double x : required<std::vector<double>>(gamma, "x", "gamma.")) {
      require(x > 0.0, "gamma.x", "must be positive");
    }
    require(required<std::size_t>(gamma, "draws", "gamma.") >= 1, "gamma.draws", "must be >= 1");
  }
  const json dkw = block(c.params, "dkw");
  if (!dkw.empty()) {
    for (std::size_t n : required<std::vector<std::size_t>>(dkw, "n_list", "dkw.")) {
      require(n >= 1, "dkw.n_list", "sizes must be >= 1");
    }
    required<std::vector<double>>(dkw, "y", "dkw.");
    require(required<std::size_t>(dkw, "reps", "dkw.") >= 1, "dkw.reps", "must be >= 1");
  }
  for (const char* name : {"borell", "kolmogorov"}) {
    const json b = block(c.params, name);
    if (b.empty()) continue;
    const std::string prefix = std::string(name) + ".";
    require(required<std::size_t>(b, "grid_size", prefix) >= 2, prefix + "grid_size",
            "must be >= 2");
    require(required<std::size_t>(b, "reps", prefix) >= 2, prefix + "reps", "must be >= 2");
  }
  if (!block(c.params, "borell").empty()) {
    required<std::vector<double>>(block(c.params, "borell"), "x", "borell.");
  }
}

// ---- maxima

void validate_maxima(const ExperimentConfig& c) {
  require(required<double>(c.params, "r") > 0.0, "r", "must be positive");
  require_sizes(c, 1, 1);
  for (std::size_t k = 1; k < c.n_list.size(); ++k) {
    require(c.n_list[k] > c.n_list[k - 1], "n_list", "must be increasing");
  }
  require(field<std::size_t>(c.params, "paths", 1) >= 1, "paths", "must be >= 1");
  require(required<double>(c.params, "threshold") > 0.0, "threshold", "must be positive");
  const double frac = field<double>(c.params, "pass_fraction", 1.0);
  require(frac > 0.0 && frac <= 1.0, "pass_fraction", "must lie in (0, 1]");
}

void run_maxima(const ExperimentConfig& c, Outputs& o) {
  validate_maxima(c);
  const double r = c.params.at("r").get<double>();
  const auto paths = field<std::size_t>(c.params, "paths", 1);
  const double threshold = c.params.at("threshold").get<double>();
  const double frac = field<double>(c.params, "pass_fraction", 1.0);
  const RngStream root(c.seed);
  csv_row(o.csv, {"path", "n", "ratio"});
  std::size_t passed = 0;
  std::vector<double> last;
  for (std::size_t p = 0; p < paths; ++p) {
    RngStream s = root.child(p);
    const MaximaResult res = maxima_check(c.f0, r, c.n_list, s, threshold);
    for (const auto& row : res.rows) {
      csv_row(o.csv, {std::to_string(p), std::to_string(row.n), num(row.ratio)});
    }
    last.push_back(res.rows.back().ratio);
    passed += res.pass;
  }
  const double share = static_cast<double>(passed) / static_cast<double>(paths);
  o.summary["pass_share"] = share;
  o.summary["median_last_ratio"] = median(last);
  o.verdict("maxima ratio r=" + short_num(r) + " n=" + std::to_string(c.n_list.back()) +
                " <= " + short_num(threshold),
            ">= " + short_num(frac) + " of paths", share, "share", share >= frac);
}

// ---- lindeberg

void validate_lindeberg(const ExperimentConfig& c) {
  wrap("g", [&] { return function_spec_from_json(required<json>(c.params, "g")); });
  require_sizes(c, 1, 1);
  const auto eps = required<std::vector<double>>(c.params, "epsilons");
  require(!eps.empty(), "epsilons", "must list at least one epsilon");
  for (double e : eps) require(e > 0.0 && e < 1.0, "epsilons", "entries must lie in (0, 1)");
}

void run_lindeberg(const ExperimentConfig& c, Outputs& o) {
  validate_lindeberg(c);
  const FunctionSpec g = function_spec_from_json(c.params.at("g"));
  const auto eps = c.params.at("epsilons").get<std::vector<double>>();
  const RngStream root(c.seed);
  csv_row(o.csv, {"n", "epsilon", "bound", "truncated_moment", "lindeberg_term", "variance",
                  "h0_term"});
  json rows = json::array();
  for (std::size_t n : c.n_list) {
    RngStream s = root.child(0);
    const std::vector<double> data = c.f0.sample(n, s);
    for (double e : eps) {
      const LindebergResult r = lindeberg_diagnostic(data, g, e);
      csv_row(o.csv, {std::to_string(n), num(e), num(r.bound), num(r.truncated_moment),
                      num(r.lindeberg_term), num(r.variance), num(r.h0_term)});
      rows.push_back({{"n", n}, {"epsilon", e}, {"bound", r.bound}});
      o.verdict("lindeberg bound n=" + std::to_string(n) + " eps=" + short_num(e), "finite",
                r.bound, "diagnostic", std::isfinite(r.bound));
    }
  }
  o.summary["bounds"] = rows;
}

void validate_experiment(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  if (e == "beta-moments") {
    beta_params(c);
  } else if (e == "laplace-uniformity") {
    uniformity_params(c);
  } else if (e == "bv-laplace") {
    bv_params(c);
  } else if (e == "distributional") {
    dist_params(c);
  } else if (e == "coupling-rate") {
    coupling_params(c);
  } else if (e == "kiefer-rate") {
    kiefer_params(c);
  } else if (e == "true-cdf") {
    true_cdf_params(c);
  } else if (e == "tail-bounds") {
    validate_tail(c);
  } else if (e == "maxima") {
    validate_maxima(c);
  } else if (e == "lindeberg") {
    validate_lindeberg(c);
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FilesystemError(path.string(), "cannot open for writing");
  out << content;
  if (!out) throw FilesystemError(path.string(), "write failed");
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() { return kRegistry; }

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FilesystemError(path.string(), "cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  ExperimentConfig c;
  c.params = j;
  c.experiment = required<std::string>(j, "experiment");
  const bool known = std::any_of(kRegistry.begin(), kRegistry.end(),
                                 [&](const ExperimentInfo& i) { return i.name == c.experiment; });
  require(known, "experiment", "unknown experiment '" + c.experiment + "'");
  c.seed = field<std::uint64_t>(j, "seed", 0);
  if (j.contains("n_list")) {
    c.n_list = field<std::vector<std::size_t>>(j, "n_list", {});
  } else if (j.contains("n")) {
    c.n_list = {field<std::size_t>(j, "n", 0)};
  }
  c.reps = field<std::size_t>(j, "reps", 0);
  if (j.contains("nu_list")) {
    require(j.at("nu_list").is_array() && !j.at("nu_list").empty(), "nu_list",
            "must be a nonempty array");
    for (const auto& nu : j.at("nu_list")) {
      c.nu_list.push_back(wrap("nu_list", [&] { return base_measure_from_json(nu); }));
    }
  } else if (j.contains("nu")) {
    c.nu_list.push_back(wrap("nu", [&] { return base_measure_from_json(j.at("nu")); }));
  } else {
    c.nu_list.push_back(BaseMeasureSpec::bootstrap());
  }
  if (j.contains("F0")) {
    c.f0 = wrap("F0", [&] { return base_distribution_from_json(j.at("F0")); });
  }
  c.t_grid = field<std::vector<double>>(j, "t_grid", {});
  c.out = field<std::string>(j, "out", "out/" + c.experiment);
  c.workers = field<int>(j, "workers", 1);
  require(c.workers >= 1, "workers", "must be >= 1");
  validate_experiment(c);
  return c;
}

nlohmann::json apply_overrides(nlohmann::json j, const ConfigOverrides& o) {
  if (o.seed) j["seed"] = *o.seed;
  if (o.n) {
    j.erase("n_list");
    j["n"] = *o.n;
  }
  if (o.reps) j["reps"] = *o.reps;
  if (o.out) j["out"] = *o.out;
  if (o.workers) j["workers"] = *o.workers;
  return j;
}

bool RunManifest::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

void to_json(nlohmann::json& j, const RunManifest& m) {
  json verdicts = json::array();
  for (const auto& v : m.verdicts) {
    verdicts.push_back({{"criterion", v.criterion},
                        {"target", v.target},
                        {"estimate", v.estimate},
                        {"tolerance", v.tolerance},
                        {"pass", v.pass}});
  }
  j = {{"config", m.config},
       {"version", m.version},
       {"wall_time_seconds", m.wall_time_seconds},
       {"verdicts", verdicts},
       {"digests", m.digests},
       {"all_pass", m.all_pass()}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.config = j.value("config", json::object());
  m.version = j.value("version", std::string());
  m.wall_time_seconds = j.value("wall_time_seconds", 0.0);
  m.digests = j.value("digests", std::map<std::string, std::string>{});
  for (const auto& v : j.at("verdicts")) {
    const double estimate = v.at("estimate").is_number() ? v.at("estimate").get<double>() : NAN;
    m.verdicts.push_back({v.at("criterion").get<std::string>(), v.at("target").get<std::string>(),
                          estimate, v.at("tolerance").get<std::string>(),
                          v.at("pass").get<bool>()});
  }
  return m;
}

RunManifest run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Outputs o;
  const std::string& e = config.experiment;
  if (e == "beta-moments") {
    run_beta(config, o);
  } else if (e == "laplace-uniformity") {
    run_uniformity(config, o);
  } else if (e == "bv-laplace") {
    run_bv(config, o);
  } else if (e == "distributional") {
    run_distributional(config, o);
  } else if (e == "coupling-rate") {
    run_coupling(config, o);
  } else if (e == "kiefer-rate") {
    run_kiefer(config, o);
  } else if (e == "true-cdf") {
    run_true_cdf(config, o);
  } else if (e == "tail-bounds") {
    run_tail(config, o);
  } else if (e == "maxima") {
    run_maxima(config, o);
  } else if (e == "lindeberg") {
    run_lindeberg(config, o);
  } else {
    throw ConfigError("experiment", "unknown experiment '" + e + "'");
  }

  const std::filesystem::path dir(config.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FilesystemError(dir.string(), "cannot create output directory");
  o.summary["experiment"] = config.experiment;
  write_file(dir / "records.csv", o.csv.str());
  write_file(dir / "summary.json", o.summary.dump(2) + "\n");

  RunManifest m;
  m.config = config.params;
  m.verdicts = o.verdicts;
  m.digests["records.csv"] = sha256_file(dir / "records.csv");
  m.digests["summary.json"] = sha256_file(dir / "summary.json");
  m.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(dir / "manifest.json", json(m).dump(2) + "\n");
  return m;
}

bool Report::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.verdict.pass; });
}

Report build_report(const std::vector<std::filesystem::path>& manifests) {
  Report report;
  for (const auto& path : manifests) {
    if (!std::filesystem::exists(path)) throw FilesystemError(path.string(), "manifest not found");
    const RunManifest m = manifest_from_json(read_json_file(path));
    for (const auto& v : m.verdicts) report.rows.push_back({path.string(), v});
  }
  return report;
}

void write_report_text(std::ostream& out, const Report& report) {
  std::size_t w_crit = 9, w_target = 6, w_est = 8, w_tol = 9;
  for (const auto& r : report.rows) {
    w_crit = std::max(w_crit, r.verdict.criterion.size());
    w_target = std::max(w_target, r.verdict.target.size());
    w_est = std::max(w_est, short_num(r.verdict.estimate).size());
    w_tol = std::max(w_tol, r.verdict.tolerance.size());
  }
  auto cell = [&out](const std::string& s, std::size_t w) {
    out << std::left << std::setw(static_cast<int>(w + 2)) << s;
  };
  cell("criterion", w_crit);
  cell("target", w_target);
  cell("estimate", w_est);
  cell("tolerance", w_tol);
  out << "result\n";
  for (const auto& r : report.rows) {
    cell(r.verdict.criterion, w_crit);
    cell(r.verdict.target, w_target);
    cell(short_num(r.verdict.estimate), w_est);
    cell(r.verdict.tolerance, w_tol);
    out << (r.verdict.pass ? "pass" : "FAIL") << '\n';
  }
}

void write_report_csv(std::ostream& out, const Report& report) {
  out << "manifest,criterion,target,estimate,tolerance,pass\n";
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  for (const auto& r : report.rows) {
    out << quote(r.manifest) << ',' << quote(r.verdict.criterion) << ','
        << quote(r.verdict.target) << ',' << num(r.verdict.estimate) << ','
        << quote(r.verdict.tolerance) << ',' << (r.verdict.pass ? "pass" : "fail") << '\n';
  }
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FilesystemError(path.string(), "cannot open for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

}  // namespace bvmdp
