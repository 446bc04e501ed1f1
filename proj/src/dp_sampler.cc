#include "bvmdp/dp_sampler.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "bvmdp/errors.h"

namespace bvmdp {
namespace {

constexpr std::size_t kMaxSticks = 50'000'000;

// Sorted copy of (atoms, weights) with a leading-zero running sum whose last
// entry is pinned to exactly one.
void build_cumulative(const std::vector<double>& atoms, const std::vector<double>& weights,
                      std::vector<double>& sorted, std::vector<double>& cumulative) {
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  if (!std::is_sorted(atoms.begin(), atoms.end())) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  }
  sorted.resize(atoms.size());
  cumulative.assign(atoms.size() + 1, 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted[k] = atoms[order[k]];
    cumulative[k + 1] = cumulative[k] + weights[order[k]];
  }
  if (!atoms.empty()) cumulative.back() = 1.0;
}

double lookup(const std::vector<double>& sorted, const std::vector<double>& cumulative,
              double x, bool inclusive) {
  if (sorted.empty()) return 0.0;
  const auto it = inclusive ? std::upper_bound(sorted.begin(), sorted.end(), x)
                            : std::lower_bound(sorted.begin(), sorted.end(), x);
  return cumulative[static_cast<std::size_t>(it - sorted.begin())];
}

}  // namespace

PosteriorDraw::PosteriorDraw(double v_n, DiscreteDistribution prior_part,
                             std::vector<double> boot_weights, std::vector<double> atoms)
    : v_n_(v_n),
      prior_part_(std::move(prior_part)),
      boot_weights_(std::move(boot_weights)),
      atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InvalidParameter("PosteriorDraw: no data atoms");
  if (boot_weights_.size() != atoms_.size()) {
    throw InvalidParameter("PosteriorDraw: one bootstrap weight per atom required");
  }
  if (!(v_n_ >= 0.0 && v_n_ <= 1.0)) {
    throw InvalidParameter("PosteriorDraw: v_n must lie in [0, 1]");
  }
  if (v_n_ > 0.0 && prior_part_.empty()) {
    throw InvalidParameter("PosteriorDraw: positive v_n needs a prior part");
  }
  build_cumulative(atoms_, boot_weights_, sorted_atoms_, cumulative_boot_);
  if (!prior_part_.empty()) {
    std::vector<double> locs = prior_part_.atoms;
    std::vector<double> masses = prior_part_.weights;
    locs.push_back(prior_part_.residual_atom);
    masses.push_back(prior_part_.residual_mass);
    build_cumulative(locs, masses, sorted_prior_atoms_, cumulative_prior_);
  }
}

double PosteriorDraw::bootstrap_cdf(double x) const {
  return lookup(sorted_atoms_, cumulative_boot_, x, true);
}

double PosteriorDraw::prior_cdf(double x) const {
  return lookup(sorted_prior_atoms_, cumulative_prior_, x, true);
}

double PosteriorDraw::prior_cdf_left(double x) const {
  return lookup(sorted_prior_atoms_, cumulative_prior_, x, false);
}

double PosteriorDraw::cdf(double x) const {
  const double boot = bootstrap_cdf(x);
  if (v_n_ == 0.0) return boot;
  return boot + v_n_ * (prior_cdf(x) - boot);
}

double PosteriorDraw::cdf_left(double x) const {
  const double boot = lookup(sorted_atoms_, cumulative_boot_, x, false);
  if (v_n_ == 0.0) return boot;
  return boot + v_n_ * (prior_cdf_left(x) - boot);
}

void PosteriorDraw::write_csv(std::ostream& out) const {
  out << "source,atom,weight\n" << std::setprecision(17);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    out << "data," << atoms_[i] << ',' << (1.0 - v_n_) * boot_weights_[i] << '\n';
  }
  for (std::size_t j = 0; j < prior_part_.atoms.size(); ++j) {
    out << "prior," << prior_part_.atoms[j] << ',' << v_n_ * prior_part_.weights[j] << '\n';
  }
  if (prior_part_.residual_mass > 0.0) {
    out << "residual," << prior_part_.residual_atom << ','
        << v_n_ * prior_part_.residual_mass << '\n';
  }
}

DiscreteDistribution dp_prior_draw(const BaseMeasureSpec& nu, double trunc_eps,
                                   RngStream& stream) {
  if (nu.is_bootstrap()) {
    throw InvalidParameter("dp_prior_draw: prior part undefined when |nu| = 0");
  }
  if (!(trunc_eps > 0.0 && trunc_eps < 1.0)) {
    throw InvalidParameter("dp_prior_draw: trunc_eps must lie in (0, 1)");
  }
  RngStream sticks = stream.split();
  RngStream locations = stream.split();
  const BaseDistribution& base = nu.base();
  DiscreteDistribution out;
  double remaining = 1.0;
  while (remaining >= trunc_eps) {
    if (out.atoms.size() >= kMaxSticks) {
      throw InvalidParameter("dp_prior_draw: stick count exceeds limit; raise trunc_eps");
    }
    const double w = remaining * beta_sample(1.0, nu.total_mass(), sticks);
    out.atoms.push_back(base.sample(locations));
    out.weights.push_back(w);
    remaining -= w;
  }
  out.residual_mass = remaining;
  out.residual_atom = base.sample(locations);
  return out;
}

double prior_weight_sample(const BaseMeasureSpec& nu, std::size_t n, RngStream& stream) {
  if (nu.is_bootstrap()) return 0.0;
  return beta_sample(nu.total_mass(), static_cast<double>(n), stream);
}

PosteriorDraw posterior_draw(const BaseMeasureSpec& nu, std::span<const double> data,
                             double trunc_eps, RngStream& stream) {
  if (data.empty()) throw InvalidParameter("posterior_draw: empty data");
  RngStream v_stream = stream.split();
  RngStream q_stream = stream.split();
  RngStream w_stream = stream.split();
  const double v = prior_weight_sample(nu, data.size(), v_stream);
  DiscreteDistribution prior;
  if (!nu.is_bootstrap()) prior = dp_prior_draw(nu, trunc_eps, q_stream);
  std::vector<double> weights(data.size());
  double total = 0.0;
  for (double& w : weights) {
    w = exponential_sample(w_stream);
    total += w;
  }
  for (double& w : weights) w /= total;
  return PosteriorDraw(v, std::move(prior), std::move(weights),
                       std::vector<double>(data.begin(), data.end()));
}

PosteriorDraw bayesian_bootstrap_draw(std::span<const double> data, RngStream& stream) {
  if (data.empty()) throw InvalidParameter("bayesian_bootstrap_draw: empty data");
  std::vector<double> atoms(data.begin(), data.end());
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> weights(atoms.size(), 1.0);
  if (atoms.size() > 1) {
    const std::vector<double> u = uniform_order_statistics(atoms.size() - 1, stream);
    double previous = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      weights[i] = u[i] - previous;
      previous = u[i];
    }
    weights.back() = 1.0 - previous;
  }
  return PosteriorDraw(0.0, {}, std::move(weights), std::move(atoms));
}

double functional(const PosteriorDraw& draw, const FunctionSpec& g) {
  // Everything is measured from g at the first atom, so constant g is exact.
  const double ref = g(draw.atoms().front());
  double boot = 0.0;
  for (std::size_t i = 0; i < draw.n(); ++i) {
    boot += draw.boot_weights()[i] * (g(draw.atoms()[i]) - ref);
  }
  if (draw.v_n() == 0.0) return ref + boot;
  const DiscreteDistribution& q = draw.prior_part();
  double prior = q.residual_mass * (g(q.residual_atom) - ref);
  for (std::size_t j = 0; j < q.atoms.size(); ++j) {
    prior += q.weights[j] * (g(q.atoms[j]) - ref);
  }
  return ref + boot + draw.v_n() * (prior - boot);
}

CenteredStatistic centered_statistic(const PosteriorDraw& draw, const FunctionSpec& g,
                                     std::span<const double> data) {
  if (data.empty()) throw InvalidParameter("centered_statistic: empty data");
  const double ref = g(draw.atoms().front());
  double empirical = 0.0;
  for (double z : data) empirical += g(z) - ref;
  empirical /= static_cast<double>(data.size());
  double boot = 0.0;
  for (std::size_t i = 0; i < draw.n(); ++i) {
    boot += draw.boot_weights()[i] * (g(draw.atoms()[i]) - ref);
  }
  double prior = 0.0;
  if (draw.v_n() > 0.0) {
    const DiscreteDistribution& q = draw.prior_part();
    prior = q.residual_mass * (g(q.residual_atom) - ref);
    for (std::size_t j = 0; j < q.atoms.size(); ++j) {
      prior += q.weights[j] * (g(q.atoms[j]) - ref);
    }
  }
  const double root_n = std::sqrt(static_cast<double>(data.size()));
  CenteredStatistic out;
  out.value = root_n * ((functional(draw, g) - ref) - empirical);
  out.prior_term = root_n * draw.v_n() * (prior - boot);
  out.bootstrap_term = root_n * (boot - empirical);
  return out;
}

GridPath cdf_path(const PosteriorDraw& draw, const std::vector<double>& grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw InvalidParameter("cdf_path: grid must be sorted");
  }
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) values[k] = draw.cdf(grid[k]);
  return GridPath(grid, std::move(values), Interpolation::kStepRight);
}

}  // namespace bvmdp
