#include "bvmdp/gauss_paths.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "bvmdp/errors.h"
#include "bvmdp/parallel.h"

namespace bvmdp {
namespace {

void check_unit_grid(const std::vector<double>& grid, const char* who) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) {
      throw InvalidParameter(std::string(who) + ": grid point outside [0, 1]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw InvalidParameter(std::string(who) + ": grid must be strictly increasing");
    }
  }
}

}  // namespace

GridPath brownian_bridge(const std::vector<double>& grid, RngStream& stream) {
  if (grid.empty()) throw InvalidParameter("brownian_bridge: empty grid");
  check_unit_grid(grid, "brownian_bridge");
  std::vector<double> values(grid.size());
  double s0 = 0.0;
  double b0 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = grid[i];
    if (s == 0.0 || s == 1.0) {
      values[i] = 0.0;
    } else {
      const double mean = b0 * (1.0 - s) / (1.0 - s0);
      const double var = (s - s0) * (1.0 - s) / (1.0 - s0);
      values[i] = mean + std::sqrt(var) * gaussian_sample(stream);
    }
    s0 = s;
    b0 = values[i];
  }
  return GridPath(grid, std::move(values), Interpolation::kLinear);
}

std::vector<double> bridge_fill_in(const GridPath& known, std::span<const double> points,
                                   RngStream& stream) {
  std::vector<double> kg;
  std::vector<double> kv;
  kg.reserve(known.size() + 2);
  kv.reserve(known.size() + 2);
  if (known.grid().front() > 0.0) {
    kg.push_back(0.0);
    kv.push_back(0.0);
  }
  kg.insert(kg.end(), known.grid().begin(), known.grid().end());
  kv.insert(kv.end(), known.values().begin(), known.values().end());
  if (known.grid().back() < 1.0) {
    kg.push_back(1.0);
    kv.push_back(0.0);
  }
  if (kg.front() < 0.0 || kg.back() > 1.0) {
    throw InvalidParameter("bridge_fill_in: known path extends outside [0, 1]");
  }

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  if (!std::is_sorted(points.begin(), points.end())) {
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  }
  std::vector<double> out(points.size());
  std::size_t right = 0;
  double last_s = kg.front();
  double last_b = kv.front();
  for (std::size_t idx : order) {
    const double s = points[idx];
    if (!(s >= 0.0 && s <= 1.0)) {
      throw InvalidParameter("bridge_fill_in: point outside [0, 1]");
    }
    while (kg[right] < s) ++right;
    if (kg[right] == s) {
      out[idx] = kv[right];
      last_s = s;
      last_b = kv[right];
      continue;
    }
    if (s == last_s) {
      out[idx] = last_b;
      continue;
    }
    // Markov property: condition on the nearest value to each side.
    const double a = std::max(last_s, kg[right - 1]);
    const double ba = a == last_s ? last_b : kv[right - 1];
    const double b = kg[right];
    const double bb = kv[right];
    const double mean = ba + (s - a) / (b - a) * (bb - ba);
    const double var = (s - a) * (b - s) / (b - a);
    out[idx] = mean + std::sqrt(var) * gaussian_sample(stream);
    last_s = s;
    last_b = out[idx];
  }
  return out;
}

KieferSheet::KieferSheet(std::vector<double> grid, std::vector<std::vector<double>> bridges)
    : grid_(std::move(grid)), bridges_(std::move(bridges)) {
  partial_.assign(bridges_.size() + 1, std::vector<double>(grid_.size(), 0.0));
  for (std::size_t m = 0; m < bridges_.size(); ++m) {
    if (bridges_[m].size() != grid_.size()) {
      throw InvalidParameter("KieferSheet: bridge length differs from grid");
    }
    for (std::size_t j = 0; j < grid_.size(); ++j) {
      partial_[m + 1][j] = partial_[m][j] + bridges_[m][j];
    }
  }
}

GridPath KieferSheet::bridge(std::size_t i) const {
  if (i >= bridges_.size()) throw InvalidParameter("KieferSheet: bridge index out of range");
  return GridPath(grid_, bridges_[i], Interpolation::kLinear);
}

GridPath KieferSheet::slice(std::size_t m) const {
  if (m > bridges_.size()) throw InvalidParameter("KieferSheet: slice index out of range");
  return GridPath(grid_, partial_[m], Interpolation::kLinear);
}

KieferSheet kiefer(const std::vector<double>& grid, std::size_t n, RngStream& stream) {
  if (n == 0) throw InvalidParameter("kiefer: n must be >= 1");
  std::vector<std::vector<double>> bridges;
  bridges.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream sub = stream.split();
    bridges.push_back(brownian_bridge(grid, sub).values());
  }
  return KieferSheet(grid, std::move(bridges));
}

GridPath compose_with_cdf(const GridPath& path, const GridPath& cdf) {
  std::vector<double> values(cdf.size());
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    const double c = cdf.values()[k];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw InvalidParameter("compose_with_cdf: cdf value outside [0, 1]");
    }
    values[k] = path.at_grid_point(c);
  }
  return GridPath(cdf.grid(), std::move(values), Interpolation::kStepRight);
}

double sup_distance(const GridPath& a, const GridPath& b) {
  if (a.interpolation() != b.interpolation()) {
    throw UnsupportedOperation("sup_distance: step and linear paths cannot be compared");
  }
  std::vector<double> points;
  points.reserve(a.size() + b.size());
  std::merge(a.grid().begin(), a.grid().end(), b.grid().begin(), b.grid().end(),
             std::back_inserter(points));
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const double lo = std::max(a.grid().front(), b.grid().front());
  double hi = std::min(a.grid().back(), b.grid().back());
  if (a.interpolation() == Interpolation::kStepRight) hi = points.back();
  double d = 0.0;
  for (double x : points) {
    if (x < lo || x > hi) continue;
    d = std::max(d, std::fabs(a.at(x) - b.at(x)));
    if (a.interpolation() == Interpolation::kStepRight) {
      d = std::max(d, std::fabs(a.left_limit(x) - b.left_limit(x)));
    }
  }
  return d;
}

double kolmogorov_cdf(double x) {
  if (!(x > 0.0)) return 0.0;
  constexpr double kTermTol = 1e-12;
  if (x < 1.0) {
    // Jacobi-transformed series, fast for small x.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double j = 2.0 * k - 1.0;
      const double term = std::exp(-j * j * pi2 / (8.0 * x * x));
      sum += term;
      if (term < kTermTol) break;
    }
    return std::clamp(std::sqrt(2.0 * std::numbers::pi) / x * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1) ? term : -term;
    if (term < kTermTol) break;
  }
  return std::clamp(1.0 - 2.0 * sum, 0.0, 1.0);
}

std::vector<double> bridge_sup_samples(const std::vector<double>& grid, std::size_t reps,
                                       const RngStream& root, int workers) {
  check_unit_grid(grid, "bridge_sup_samples");
  std::vector<double> sups(reps);
  parallel_for(reps, workers, [&](std::size_t r) {
    RngStream stream = root.child(r);
    const GridPath b = brownian_bridge(grid, stream);
    double m = 0.0;
    for (double v : b.values()) m = std::max(m, std::fabs(v));
    sups[r] = m;
  });
  return sups;
}

std::vector<TailRow> borell_check(std::span<const double> sup_samples, double sigma2,
                                  double mean_sup, std::span<const double> x_grid) {
  if (sup_samples.empty()) throw InvalidParameter("borell_check: no samples");
  if (!(sigma2 > 0.0)) throw InvalidParameter("borell_check: sigma2 must be positive");
  std::vector<TailRow> rows;
  for (double x : x_grid) {
    const std::size_t hits = static_cast<std::size_t>(
        std::count_if(sup_samples.begin(), sup_samples.end(),
                      [&](double s) { return s >= mean_sup + x; }));
    const double bound = x > 0.0 ? std::exp(-x * x / (2.0 * sigma2)) : 1.0;
    rows.push_back(make_tail_row("borell", x, hits, sup_samples.size(), bound));
  }
  return rows;
}

double sup_cdf_distance(std::span<const double> sorted_data, const BaseDistribution& f0) {
  if (sorted_data.empty()) throw InvalidParameter("sup_cdf_distance: empty data");
  std::vector<double> points(sorted_data.begin(), sorted_data.end());
  if (const auto* pm = std::get_if<PointMassDist>(&f0.kind())) {
    points.insert(points.end(), pm->locations.begin(), pm->locations.end());
    std::sort(points.begin(), points.end());
  }
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const double n = static_cast<double>(sorted_data.size());
  double d = 0.0;
  for (double x : points) {
    const auto le = std::upper_bound(sorted_data.begin(), sorted_data.end(), x) -
                    sorted_data.begin();
    const auto lt = std::lower_bound(sorted_data.begin(), sorted_data.end(), x) -
                    sorted_data.begin();
    d = std::max(d, std::fabs(static_cast<double>(le) / n - f0.cdf(x)));
    d = std::max(d, std::fabs(static_cast<double>(lt) / n - f0.cdf_left(x)));
  }
  return d;
}

std::vector<TailRow> dkw_check(const BaseDistribution& f0, std::size_t n, std::size_t reps,
                               std::span<const double> y_grid, const RngStream& root,
                               int workers) {
  if (n == 0) throw InvalidParameter("dkw_check: n must be >= 1");
  if (reps == 0) throw InvalidParameter("dkw_check: reps must be >= 1");
  std::vector<double> sups(reps);
  parallel_for(reps, workers, [&](std::size_t r) {
    RngStream stream = root.child(r);
    std::vector<double> data = f0.sample(n, stream);
    std::sort(data.begin(), data.end());
    sups[r] = sup_cdf_distance(data, f0);
  });
  std::vector<TailRow> rows;
  for (double y : y_grid) {
    const std::size_t hits = static_cast<std::size_t>(
        std::count_if(sups.begin(), sups.end(), [&](double s) { return s > y; }));
    const double bound = std::min(1.0, 2.0 * std::exp(-2.0 * static_cast<double>(n) * y * y));
    rows.push_back(make_tail_row("dkw n=" + std::to_string(n), y, hits, reps, bound));
  }
  return rows;
}

}  // namespace bvmdp
