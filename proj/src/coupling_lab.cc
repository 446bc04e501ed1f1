#include "bvmdp/coupling_lab.h"

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

constexpr std::uint64_t kFixedDataIndex = std::numeric_limits<std::uint64_t>::max();

// Fills U(k/n) and B(k/n) for k = 0..n. Node [lo, hi) splits at
// mid = lo + floor(m / 2); the Gaussian that places B(mid / n) also sets the
// Beta(m1, m2) fraction of the mass between U(lo) and U(hi).
void dyadic_tree(std::size_t n, RngStream& stream, std::vector<double>& u,
                 std::vector<double>& b) {
  u.assign(n + 1, 0.0);
  b.assign(n + 1, 0.0);
  u[n] = 1.0;
  const double dn = static_cast<double>(n);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    const std::size_t m = hi - lo;
    if (m < 2) continue;
    const std::size_t mid = lo + m / 2;
    const double fm = static_cast<double>(m);
    const double m1 = static_cast<double>(mid - lo);
    const double m2 = static_cast<double>(hi - mid);
    const double z = gaussian_sample(stream);
    b[mid] = b[lo] + (m1 / fm) * (b[hi] - b[lo]) +
             std::sqrt((fm / dn) * (m1 / fm) * (m2 / fm)) * z;
    u[mid] = u[lo] + beta_quantile_from_normal(m1, m2, z) * (u[hi] - u[lo]);
    stack.push_back({mid, hi});
    stack.push_back({lo, mid});
  }
}

std::vector<double> unit_grid(std::size_t m) {
  std::vector<double> grid(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(m);
  }
  return grid;
}

struct PriorSide {
  double v = 0.0;
  std::vector<double> atoms;
  std::vector<double> cumulative;

  double at(double x, bool inclusive) const {
    if (atoms.empty()) return 0.0;
    const auto it = inclusive ? std::upper_bound(atoms.begin(), atoms.end(), x)
                              : std::lower_bound(atoms.begin(), atoms.end(), x);
    return cumulative[static_cast<std::size_t>(it - atoms.begin())];
  }
};

DiscreteDistribution draw_prior_part(const BaseMeasureSpec& nu, const RngStream& rep,
                                     double trunc_eps) {
  if (nu.is_bootstrap()) return {};
  RngStream q_stream = rep.child(3);
  return dp_prior_draw(nu, trunc_eps, q_stream);
}

PriorSide make_prior_side(const BaseMeasureSpec& nu, const DiscreteDistribution& q,
                          std::size_t n, const RngStream& rep) {
  PriorSide side;
  if (nu.is_bootstrap()) return side;
  RngStream v_stream = rep.child(2);
  side.v = prior_weight_sample(nu, n, v_stream);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t j = 0; j < q.atoms.size(); ++j) pts.emplace_back(q.atoms[j], q.weights[j]);
  pts.emplace_back(q.residual_atom, q.residual_mass);
  std::sort(pts.begin(), pts.end());
  side.cumulative.assign(pts.size() + 1, 0.0);
  for (std::size_t j = 0; j < pts.size(); ++j) {
    side.atoms.push_back(pts[j].first);
    side.cumulative[j + 1] = side.cumulative[j] + pts[j].second;
  }
  side.cumulative.back() = 1.0;
  return side;
}

std::vector<double> draw_sorted_data(const BaseDistribution& f0, std::size_t n,
                                     const RngStream& rep, const RngStream& root,
                                     bool fixed) {
  RngStream stream = fixed ? root.child(kFixedDataIndex) : rep.child(0);
  std::vector<double> data = f0.sample(n, stream);
  std::sort(data.begin(), data.end());
  return data;
}

// Jump points of F_n and F_emp with the counts on each side.
struct Corner {
  double x = 0.0;
  std::size_t k_le = 0;
  std::size_t k_lt = 0;
  double q_le = 0.0;
  double q_lt = 0.0;
};

std::vector<Corner> jump_corners(const std::vector<double>& sorted_data,
                                 const PriorSide& prior) {
  std::vector<double> points;
  points.reserve(sorted_data.size() + prior.atoms.size());
  std::merge(sorted_data.begin(), sorted_data.end(), prior.atoms.begin(), prior.atoms.end(),
             std::back_inserter(points));
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<Corner> corners(points.size());
  std::size_t lt = 0;
  for (std::size_t c = 0; c < points.size(); ++c) {
    const double x = points[c];
    while (lt < sorted_data.size() && sorted_data[lt] < x) ++lt;
    std::size_t le = lt;
    while (le < sorted_data.size() && sorted_data[le] == x) ++le;
    corners[c] = {x, le, lt, prior.at(x, true), prior.at(x, false)};
  }
  return corners;
}

struct Scan {
  double delta = 0.0;
  double prior_term = 0.0;
  double true_delta = 0.0;
  double modulus = 0.0;
};

// u_full[k] = U_(k) with U_(0) = 0, U_(n) = 1; bridge[k] = B(k/n).
// at_f0, when given, holds B(F0(x)) and B(F0(x-)) per corner.
Scan scan_corners(const std::vector<Corner>& corners, const std::vector<double>& u_full,
                  const std::vector<double>& bridge, double v,
                  const std::vector<double>* at_f0) {
  const std::size_t n = u_full.size() - 1;
  const double dn = static_cast<double>(n);
  const double root_n = std::sqrt(dn);
  Scan out;
  for (std::size_t c = 0; c < corners.size(); ++c) {
    for (int side = 0; side < 2; ++side) {
      const std::size_t k = side == 0 ? corners[c].k_le : corners[c].k_lt;
      const double q = side == 0 ? corners[c].q_le : corners[c].q_lt;
      const double boot = u_full[k];
      const double post = v == 0.0 ? boot : boot + v * (q - boot);
      const double centered = root_n * (post - static_cast<double>(k) / dn);
      out.delta = std::max(out.delta, std::fabs(centered - bridge[k]));
      out.prior_term = std::max(out.prior_term, root_n * std::fabs(post - boot));
      if (at_f0 != nullptr) {
        const double b0 = (*at_f0)[2 * c + static_cast<std::size_t>(side)];
        out.true_delta = std::max(out.true_delta, std::fabs(centered - b0));
        out.modulus = std::max(out.modulus, std::fabs(bridge[k] - b0));
      }
    }
  }
  return out;
}

std::vector<double> full_uniforms(const std::vector<double>& uniforms) {
  std::vector<double> u(uniforms.size() + 2);
  u.front() = 0.0;
  std::copy(uniforms.begin(), uniforms.end(), u.begin() + 1);
  u.back() = 1.0;
  return u;
}

void check_reps(std::size_t reps, const char* who) {
  if (reps == 0) throw InvalidParameter(std::string(who) + ": reps must be >= 1");
}

}  // namespace

std::string backend_name(CouplingBackend backend) {
  switch (backend) {
    case CouplingBackend::kGammaMidpoint:
      return "gamma_midpoint";
    case CouplingBackend::kIndependent:
      return "independent";
  }
  return "unknown";
}

CouplingBackend backend_from_name(const std::string& name) {
  if (name == "gamma_midpoint") return CouplingBackend::kGammaMidpoint;
  if (name == "independent") return CouplingBackend::kIndependent;
  throw InvalidParameter("unknown coupling backend '" + name + "'");
}

GridPath CoupledPair::bridge() const {
  return GridPath(unit_grid(n - 1), quantile_bridge, Interpolation::kLinear);
}

int minimal_depth(std::size_t n) {
  int depth = 0;
  while ((std::size_t{1} << depth) < n) ++depth;
  return depth;
}

CoupledPair coupled_quantile_pair(std::size_t n, int depth, RngStream& stream,
                                  CouplingBackend backend,
                                  std::span<const double> extra_points) {
  if (n < 2) throw InvalidParameter("coupled_quantile_pair: n must be >= 2");
  if (depth < 0 || (depth > 0 && depth < minimal_depth(n))) {
    throw InvalidParameter("coupled_quantile_pair: depth " + std::to_string(depth) +
                           " cannot resolve " + std::to_string(n) + " leaves");
  }
  RngStream first = stream.split();
  RngStream second = stream.split();
  RngStream fill = stream.split();
  CoupledPair pair;
  pair.n = n;
  const std::vector<double> leaf_grid = unit_grid(n);
  if (backend == CouplingBackend::kGammaMidpoint) {
    std::vector<double> u;
    dyadic_tree(n, first, u, pair.leaf_bridge);
    pair.uniforms.assign(u.begin() + 1, u.end() - 1);
  } else {
    pair.uniforms = uniform_order_statistics(n - 1, first);
    pair.leaf_bridge = brownian_bridge(leaf_grid, second).values();
  }

  const std::vector<double> q_grid = unit_grid(n - 1);
  const GridPath leaf_path(leaf_grid, pair.leaf_bridge, Interpolation::kLinear);
  pair.quantile_bridge = bridge_fill_in(leaf_path, q_grid, fill);
  if (!extra_points.empty()) {
    std::vector<std::pair<double, double>> merged;
    merged.reserve(leaf_grid.size() + q_grid.size());
    for (std::size_t i = 0; i < leaf_grid.size(); ++i) {
      merged.emplace_back(leaf_grid[i], pair.leaf_bridge[i]);
    }
    for (std::size_t i = 1; i + 1 < q_grid.size(); ++i) {
      merged.emplace_back(q_grid[i], pair.quantile_bridge[i]);
    }
    std::sort(merged.begin(), merged.end());
    std::vector<double> grid(merged.size());
    std::vector<double> values(merged.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
      grid[i] = merged[i].first;
      values[i] = merged[i].second;
    }
    pair.extra_values = bridge_fill_in(
        GridPath(std::move(grid), std::move(values), Interpolation::kLinear), extra_points,
        fill);
  }
  return pair;
}

double CouplingRecord::term_sum() const {
  double s = 0.0;
  for (const auto& [name, value] : terms) s += value;
  return s;
}

std::vector<CouplingRecord> bridge_coupling_experiment(const BaseMeasureSpec& nu,
                                                       const BaseDistribution& f0,
                                                       std::size_t n, std::size_t reps,
                                                       const RngStream& root,
                                                       const CouplingOptions& options) {
  if (n < 2) throw InvalidParameter("bridge_coupling_experiment: n must be >= 2");
  check_reps(reps, "bridge_coupling_experiment");
  std::vector<CouplingRecord> records(reps);
  parallel_for(reps, options.workers, [&](std::size_t r) {
    const RngStream rep = root.child(r);
    const std::vector<double> data = draw_sorted_data(f0, n, rep, root, options.fixed_data);
    const DiscreteDistribution q = draw_prior_part(nu, rep, options.trunc_eps);
    const PriorSide prior = make_prior_side(nu, q, n, rep);
    RngStream pair_stream = rep.child(1);
    const CoupledPair pair = coupled_quantile_pair(n, 0, pair_stream, options.backend);
    const std::vector<double> u_full = full_uniforms(pair.uniforms);
    const Scan scan =
        scan_corners(jump_corners(data, prior), u_full, pair.leaf_bridge, prior.v, nullptr);

    const double dn = static_cast<double>(n);
    const double scale = std::sqrt(dn / (dn - 1.0));
    double quantile = 0.0, grid_shift = 0.0, level = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double t = static_cast<double>(i) / (dn - 1.0);
      quantile = std::max(quantile, std::fabs(std::sqrt(dn - 1.0) * (u_full[i] - t) -
                                              pair.quantile_bridge[i]));
      grid_shift =
          std::max(grid_shift, std::fabs(pair.quantile_bridge[i] - pair.leaf_bridge[i]));
      level = std::max(level, std::fabs(pair.leaf_bridge[i]));
    }
    CouplingRecord& rec = records[r];
    rec.backend = options.backend;
    rec.n = n;
    rec.rep = r;
    rec.delta = scan.delta;
    rec.v_n = prior.v;
    rec.terms = {{"prior_term", scan.prior_term},
                 {"quantile_term", scale * quantile},
                 {"grid_shift", scale * grid_shift},
                 {"scale_shift", (scale - 1.0) * level},
                 {"discretization", 1.0 / std::sqrt(dn)}};
  });
  return records;
}

DoublingKieferCoupling::DoublingKieferCoupling(std::vector<std::size_t> n_list,
                                               const RngStream& rep, CouplingBackend backend)
    : n_list_(std::move(n_list)),
      first_batch_(rep.child(1)),
      later_batches_(rep.child(4)),
      backend_(backend) {
  if (n_list_.empty()) throw InvalidParameter("kiefer coupling: empty n_list");
  if (n_list_.front() < 2) throw InvalidParameter("kiefer coupling: n_list[0] must be >= 2");
  for (std::size_t j = 1; j < n_list_.size(); ++j) {
    if (n_list_[j] != 2 * n_list_[j - 1]) {
      throw InvalidParameter("kiefer coupling: n_list must be strictly doubling");
    }
  }
  std::size_t base = n_list_.front();
  while (base % 2 == 0 && base / 2 >= 2) base /= 2;
  for (std::size_t m = base; m <= n_list_.back(); m *= 2) chain_.push_back(m);
  const std::size_t n_max = n_list_.back();
  sheet_.assign(n_max + 1, 0.0);
  fine_grid_.resize(n_max - 1);
  for (std::size_t i = 1; i < n_max; ++i) {
    fine_grid_[i - 1] = static_cast<double>(i) / static_cast<double>(n_max);
  }
}

bool DoublingKieferCoupling::advance() {
  if (built_ == n_list_.size()) return false;
  while (chain_built_ == 0 || chain_[chain_built_ - 1] < n_list_[built_]) {
    std::size_t batch = 0;
    CoupledPair pair;
    if (chain_built_ == 0) {
      batch = chain_.front();
      RngStream stream = first_batch_;
      pair = coupled_quantile_pair(batch, 0, stream, backend_, fine_grid_);
      pooled_ = pair.uniforms;
    } else {
      batch = chain_[chain_built_ - 1];
      RngStream stream = later_batches_.child(chain_built_);
      pair = coupled_quantile_pair(batch + 1, 0, stream, backend_, fine_grid_);
      std::vector<double> merged;
      merged.reserve(pooled_.size() + pair.uniforms.size());
      std::merge(pooled_.begin(), pooled_.end(), pair.uniforms.begin(), pair.uniforms.end(),
                 std::back_inserter(merged));
      pooled_ = std::move(merged);
    }
    const double weight = std::sqrt(static_cast<double>(batch));
    for (std::size_t i = 1; i + 1 < sheet_.size(); ++i) {
      sheet_[i] += weight * pair.extra_values[i - 1];
    }
    ++chain_built_;
  }
  ++built_;
  return true;
}

double DoublingKieferCoupling::kiefer_at(std::size_t i) const {
  if (built_ == 0) throw InvalidParameter("kiefer coupling: no batch built yet");
  const std::size_t stride = n_list_.back() / n();
  if (i > n()) throw InvalidParameter("kiefer coupling: index beyond n");
  return sheet_[i * stride];
}

std::vector<CouplingRecord> kiefer_coupling_experiment(const BaseMeasureSpec& nu,
                                                       const BaseDistribution& f0,
                                                       const std::vector<std::size_t>& n_list,
                                                       std::size_t reps,
                                                       const RngStream& root,
                                                       const CouplingOptions& options) {
  check_reps(reps, "kiefer_coupling_experiment");
  // Validates n_list before any sampling.
  DoublingKieferCoupling(n_list, root, options.backend);
  const std::size_t levels = n_list.size();
  std::vector<CouplingRecord> records(reps * levels);
  parallel_for(reps, options.workers, [&](std::size_t r) {
    const RngStream rep = root.child(r);
    RngStream data_stream = options.fixed_data ? root.child(kFixedDataIndex) : rep.child(0);
    const std::vector<double> all_data = f0.sample(n_list.back(), data_stream);
    const DiscreteDistribution q = draw_prior_part(nu, rep, options.trunc_eps);
    DoublingKieferCoupling sheet(n_list, rep, options.backend);
    for (std::size_t k = 0; k < levels; ++k) {
      sheet.advance();
      const std::size_t n = n_list[k];
      std::vector<double> data(all_data.begin(), all_data.begin() + static_cast<long>(n));
      std::sort(data.begin(), data.end());
      const PriorSide prior = make_prior_side(nu, q, n, rep);
      const double root_n = std::sqrt(static_cast<double>(n));
      std::vector<double> scaled(n + 1);
      for (std::size_t i = 0; i <= n; ++i) scaled[i] = sheet.kiefer_at(i) / root_n;
      const Scan scan = scan_corners(jump_corners(data, prior), full_uniforms(sheet.uniforms()),
                                     scaled, prior.v, nullptr);
      CouplingRecord& rec = records[r * levels + k];
      rec.backend = options.backend;
      rec.n = n;
      rec.rep = r;
      rec.delta = scan.delta;
      rec.v_n = prior.v;
      rec.terms = {{"prior_term", scan.prior_term}};
    }
  });
  return records;
}

std::vector<TrueCdfRecord> true_cdf_experiment(const BaseMeasureSpec& nu,
                                               const BaseDistribution& f0, std::size_t n,
                                               std::size_t reps, double y,
                                               const RngStream& root,
                                               const CouplingOptions& options) {
  if (n < 2) throw InvalidParameter("true_cdf_experiment: n must be >= 2");
  check_reps(reps, "true_cdf_experiment");
  if (!(y > 0.0)) throw InvalidParameter("true_cdf_experiment: y must be positive");
  std::vector<TrueCdfRecord> records(reps);
  parallel_for(reps, options.workers, [&](std::size_t r) {
    const RngStream rep = root.child(r);
    const std::vector<double> data = draw_sorted_data(f0, n, rep, root, options.fixed_data);
    const DiscreteDistribution q = draw_prior_part(nu, rep, options.trunc_eps);
    const PriorSide prior = make_prior_side(nu, q, n, rep);
    const std::vector<Corner> corners = jump_corners(data, prior);
    std::vector<double> levels(2 * corners.size());
    for (std::size_t c = 0; c < corners.size(); ++c) {
      levels[2 * c] = f0.cdf(corners[c].x);
      levels[2 * c + 1] = f0.cdf_left(corners[c].x);
    }
    RngStream pair_stream = rep.child(1);
    const CoupledPair pair =
        coupled_quantile_pair(n, 0, pair_stream, options.backend, levels);
    const Scan scan = scan_corners(corners, full_uniforms(pair.uniforms), pair.leaf_bridge,
                                   prior.v, &pair.extra_values);
    TrueCdfRecord& rec = records[r];
    rec.n = n;
    rec.rep = r;
    rec.ks = std::sqrt(static_cast<double>(n)) * sup_cdf_distance(data, f0);
    rec.event = rec.ks <= y;
    rec.delta = scan.true_delta;
    rec.bridge_delta = scan.delta;
    rec.modulus = scan.modulus;
  });
  return records;
}

RateFit rate_fit(std::span<const double> ns, std::span<const double> medians) {
  if (ns.size() != medians.size()) {
    throw InvalidParameter("rate_fit: ns and medians differ in length");
  }
  if (ns.size() < 4) throw InvalidParameter("rate_fit: need at least 4 points");
  const std::size_t k = ns.size();
  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(ns[i] > 0.0) || !(medians[i] > 0.0)) {
      throw InvalidParameter("rate_fit: sizes and medians must be positive");
    }
    x[i] = std::log(ns[i]);
    y[i] = std::log(medians[i]);
  }
  const double mx = mean_and_se(x).mean;
  const double my = mean_and_se(y).mean;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidParameter("rate_fit: sizes must not all be equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    ssr += e * e;
  }
  fit.residual = std::sqrt(ssr / static_cast<double>(k));
  fit.slope_se = std::sqrt(ssr / static_cast<double>(k - 2) / sxx);
  return fit;
}

std::vector<NSummary> summarize_by_n(const std::vector<CouplingRecord>& records) {
  std::map<std::size_t, std::vector<const CouplingRecord*>> groups;
  for (const auto& rec : records) groups[rec.n].push_back(&rec);
  std::vector<NSummary> out;
  for (const auto& [n, group] : groups) {
    NSummary s;
    s.n = n;
    s.count = group.size();
    std::vector<double> deltas;
    std::map<std::string, std::vector<double>> terms;
    for (const auto* rec : group) {
      deltas.push_back(rec->delta);
      for (const auto& [name, value] : rec->terms) terms[name].push_back(value);
    }
    s.median_delta = median(std::move(deltas));
    for (auto& [name, values] : terms) s.median_terms[name] = median(std::move(values));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bvmdp
