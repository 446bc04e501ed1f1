#include "bvmdp/function_classes.h"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "bvmdp/errors.h"

namespace bvmdp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// E[h(X)] for X ~ f0 where h is smooth between consecutive `cuts`.
double expectation(const std::function<double(double)>& h, std::vector<double> cuts,
                   const BaseDistribution& f0) {
  if (const auto* pm = std::get_if<PointMassDist>(&f0.kind())) {
    double total = 0.0;
    for (std::size_t i = 0; i < pm->locations.size(); ++i) {
      total += pm->weights[i] * h(pm->locations[i]);
    }
    return total;
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double support_lo = -kInf, support_hi = kInf;
  if (const auto* u = std::get_if<UniformDist>(&f0.kind())) {
    support_lo = u->lo;
    support_hi = u->hi;
  } else if (std::holds_alternative<ExponentialDist>(f0.kind())) {
    support_lo = 0.0;
  }
  std::vector<double> edges;
  edges.push_back(support_lo);
  for (double c : cuts) {
    if (c > support_lo && c < support_hi) edges.push_back(c);
  }
  edges.push_back(support_hi);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k];
    const double b = edges[k + 1];
    const double mass = f0.cdf(b) - f0.cdf(a);
    if (mass <= 0.0) continue;
    auto integrand = [&](double x) {
      const double d = f0.pdf(x);
      return d == 0.0 ? 0.0 : h(x) * d;
    };
    double error = 0.0;
    const double piece = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, a, b, 15, 1e-12, &error);
    if (!std::isfinite(piece) || error > 1e-8 * std::max(1.0, std::fabs(piece))) {
      throw NonfiniteVariance("sigma_g_squared: quadrature did not converge on [" +
                              format_number(a) + ", " + format_number(b) + "]");
    }
    total += piece;
  }
  return total;
}

double integrate_path(const GridPath& path, double lo, double hi) {
  if (!path.covers(lo) || !path.covers(hi)) {
    throw OutOfDomain("stieltjes_integral: density support [" + format_number(lo) + ", " +
                      format_number(hi) + "] outside path domain");
  }
  const auto& grid = path.grid();
  std::vector<double> cuts{lo};
  for (auto it = std::upper_bound(grid.begin(), grid.end(), lo);
       it != grid.end() && *it < hi; ++it) {
    cuts.push_back(*it);
  }
  cuts.push_back(hi);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    if (path.interpolation() == Interpolation::kStepRight) {
      total += path.at(a) * (b - a);
    } else {
      total += 0.5 * (path.at(a) + path.at(b)) * (b - a);
    }
  }
  return total;
}

}  // namespace

FunctionSpec::FunctionSpec(Kind kind, std::string label)
    : kind_(std::move(kind)), label_(std::move(label)) {
  std::visit(
      Overloaded{
          [](const IndicatorFn& f) {
            if (!std::isfinite(f.threshold)) {
              throw InvalidParameter("indicator: threshold must be finite");
            }
          },
          [](const PiecewiseConstantFn& f) {
            if (f.locations.size() != f.jumps.size()) {
              throw InvalidParameter("piecewise_constant: locations/jumps length mismatch");
            }
            for (std::size_t i = 0; i < f.locations.size(); ++i) {
              if (!std::isfinite(f.locations[i]) || !std::isfinite(f.jumps[i])) {
                throw InvalidParameter("piecewise_constant: non-finite entry");
              }
            }
          },
          [](const AffineClampedFn& f) {
            if (!(f.lo < f.hi) || !std::isfinite(f.slope) || !std::isfinite(f.intercept)) {
              throw InvalidParameter("affine_clamped: need lo < hi and finite coefficients");
            }
          },
          [](const LipschitzTableFn& f) {
            if (f.grid.size() < 2 || f.grid.size() != f.values.size()) {
              throw InvalidParameter("lipschitz_table: need >= 2 knots with values");
            }
            for (std::size_t i = 0; i < f.grid.size(); ++i) {
              if (!std::isfinite(f.grid[i]) || !std::isfinite(f.values[i])) {
                throw InvalidParameter("lipschitz_table: non-finite entry");
              }
              if (i > 0 && !(f.grid[i] > f.grid[i - 1])) {
                throw InvalidParameter("lipschitz_table: grid must be strictly increasing");
              }
            }
          }},
      kind_);
}

FunctionSpec FunctionSpec::indicator(double threshold) {
  return FunctionSpec(IndicatorFn{threshold}, "indicator(" + format_number(threshold) + ")");
}

FunctionSpec FunctionSpec::piecewise_constant(std::vector<double> locations,
                                              std::vector<double> jumps) {
  return FunctionSpec(PiecewiseConstantFn{std::move(locations), std::move(jumps)},
                      "piecewise_constant");
}

FunctionSpec FunctionSpec::affine_clamped(double slope, double intercept, double lo,
                                          double hi) {
  return FunctionSpec(AffineClampedFn{slope, intercept, lo, hi}, "affine_clamped");
}

FunctionSpec FunctionSpec::identity() {
  return FunctionSpec(AffineClampedFn{1.0, 0.0, -kInf, kInf}, "identity");
}

FunctionSpec FunctionSpec::constant(double value) {
  return FunctionSpec(AffineClampedFn{0.0, value, 0.0, 1.0}, "constant(" + format_number(value) + ")");
}

FunctionSpec FunctionSpec::lipschitz_table(std::vector<double> grid,
                                           std::vector<double> values) {
  return FunctionSpec(LipschitzTableFn{std::move(grid), std::move(values)},
                      "lipschitz_table");
}

FunctionSpec FunctionSpec::with_label(std::string label) const {
  return FunctionSpec(kind_, std::move(label));
}

double FunctionSpec::evaluate(double x) const {
  return std::visit(
      Overloaded{[&](const IndicatorFn& f) { return x <= f.threshold ? 1.0 : 0.0; },
                 [&](const PiecewiseConstantFn& f) {
                   double v = 0.0;
                   for (std::size_t i = 0; i < f.locations.size(); ++i) {
                     if (f.locations[i] <= x) v += f.jumps[i];
                   }
                   return v;
                 },
                 [&](const AffineClampedFn& f) {
                   if (f.slope == 0.0) return f.intercept;
                   return f.intercept + f.slope * std::clamp(x, f.lo, f.hi);
                 },
                 [&](const LipschitzTableFn& f) {
                   if (x <= f.grid.front()) return f.values.front();
                   if (x >= f.grid.back()) return f.values.back();
                   const auto it = std::upper_bound(f.grid.begin(), f.grid.end(), x);
                   const auto k = static_cast<std::size_t>(it - f.grid.begin()) - 1;
                   const double w = (x - f.grid[k]) / (f.grid[k + 1] - f.grid[k]);
                   return f.values[k] + w * (f.values[k + 1] - f.values[k]);
                 }},
      kind_);
}

bool FunctionSpec::is_constant() const {
  return std::visit(
      Overloaded{[](const IndicatorFn&) { return false; },
                 [](const PiecewiseConstantFn& f) {
                   // Jumps at the same location may cancel.
                   std::vector<double> locs = f.locations;
                   std::sort(locs.begin(), locs.end());
                   locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
                   for (double loc : locs) {
                     double net = 0.0;
                     for (std::size_t i = 0; i < f.locations.size(); ++i) {
                       if (f.locations[i] == loc) net += f.jumps[i];
                     }
                     if (net != 0.0) return false;
                   }
                   return true;
                 },
                 [](const AffineClampedFn& f) { return f.slope == 0.0; },
                 [](const LipschitzTableFn& f) {
                   return std::all_of(f.values.begin(), f.values.end(),
                                      [&](double v) { return v == f.values.front(); });
                 }},
      kind_);
}

std::vector<double> FunctionSpec::breakpoints() const {
  return std::visit(
      Overloaded{[](const IndicatorFn& f) { return std::vector<double>{f.threshold}; },
                 [](const PiecewiseConstantFn& f) { return f.locations; },
                 [](const AffineClampedFn& f) {
                   std::vector<double> out;
                   if (std::isfinite(f.lo)) out.push_back(f.lo);
                   if (std::isfinite(f.hi)) out.push_back(f.hi);
                   return out;
                 },
                 [](const LipschitzTableFn& f) { return f.grid; }},
      kind_);
}

double evaluate(const FunctionSpec& g, double x) { return g.evaluate(x); }

double total_variation(const FunctionSpec& g) {
  return std::visit(
      Overloaded{[](const IndicatorFn&) { return 1.0; },
                 [](const PiecewiseConstantFn& f) {
                   double tv = 0.0;
                   for (double j : f.jumps) tv += std::fabs(j);
                   return tv;
                 },
                 [](const AffineClampedFn& f) {
                   if (f.slope == 0.0) return 0.0;
                   return std::fabs(f.slope) * (f.hi - f.lo);
                 },
                 [](const LipschitzTableFn& f) {
                   double tv = 0.0;
                   for (std::size_t i = 1; i < f.values.size(); ++i) {
                     tv += std::fabs(f.values[i] - f.values[i - 1]);
                   }
                   return tv;
                 }},
      g.kind());
}

ClassSpec::ClassSpec(std::vector<FunctionSpec> members, FunctionSpec envelope)
    : members_(std::move(members)), envelope_(std::move(envelope)) {
  if (members_.empty()) throw InvalidParameter("ClassSpec: no members");
  std::vector<double> marks = envelope_.breakpoints();
  for (const auto& g : members_) {
    const auto b = g.breakpoints();
    marks.insert(marks.end(), b.begin(), b.end());
  }
  double lo = 0.0, hi = 1.0;
  if (!marks.empty()) {
    lo = *std::min_element(marks.begin(), marks.end());
    hi = *std::max_element(marks.begin(), marks.end());
  }
  std::vector<double> probe;
  const double pad = 1.0 + (hi - lo);
  constexpr int kDense = 1000;
  for (int i = 0; i <= kDense; ++i) {
    probe.push_back(lo - pad + (hi - lo + 2.0 * pad) * i / kDense);
  }
  for (double b : marks) {
    const double eps = 1e-9 * std::max(1.0, std::fabs(b));
    probe.insert(probe.end(), {b - eps, b, b + eps});
  }
  for (std::size_t m = 0; m < members_.size(); ++m) {
    for (double x : probe) {
      if (envelope_(x) < std::fabs(members_[m](x))) {
        throw InvalidParameter("ClassSpec: envelope fails to dominate member " +
                               std::to_string(m) + " (" + members_[m].label() + ") at x=" +
                               format_number(x));
      }
    }
  }
}

ClassSpec indicator_quantile_class(const BaseDistribution& f0, std::size_t count) {
  if (count == 0) throw InvalidParameter("indicator_quantile_class: count must be >= 1");
  std::vector<FunctionSpec> members;
  for (std::size_t k = 0; k < count; ++k) {
    const double level = (2.0 * k + 1.0) / (2.0 * count);
    members.push_back(FunctionSpec::indicator(f0.quantile(level))
                          .with_label("indicator(q=" + format_number(level) + ")"));
  }
  return ClassSpec(std::move(members), FunctionSpec::constant(1.0));
}

double SignedMeasure::positive_mass() const {
  double m = 0.0;
  for (const auto& a : positive_atoms) m += a.mass;
  for (const auto& d : positive_density) m += d.density * (d.hi - d.lo);
  return m;
}

double SignedMeasure::negative_mass() const {
  double m = 0.0;
  for (const auto& a : negative_atoms) m += a.mass;
  for (const auto& d : negative_density) m += d.density * (d.hi - d.lo);
  return m;
}

double SignedMeasure::reconstruct(double x) const {
  auto atom_mass = [x](const std::vector<PointMass>& atoms) {
    double m = 0.0;
    for (const auto& a : atoms) {
      if (a.left_continuous ? x > a.location : x >= a.location) m += a.mass;
    }
    return m;
  };
  auto density_mass = [x](const std::vector<DensityPiece>& pieces) {
    double m = 0.0;
    for (const auto& d : pieces) {
      if (x > d.lo) m += d.density * (std::min(x, d.hi) - d.lo);
    }
    return m;
  };
  return base_value + atom_mass(positive_atoms) - atom_mass(negative_atoms) +
         density_mass(positive_density) - density_mass(negative_density);
}

SignedMeasure jordan_decompose(const FunctionSpec& g) {
  SignedMeasure out;
  std::visit(
      Overloaded{
          [&](const IndicatorFn& f) {
            out.base_value = 1.0;
            out.negative_atoms.push_back({f.threshold, 1.0, true});
          },
          [&](const PiecewiseConstantFn& f) {
            for (std::size_t i = 0; i < f.locations.size(); ++i) {
              if (f.jumps[i] > 0.0) {
                out.positive_atoms.push_back({f.locations[i], f.jumps[i], false});
              } else if (f.jumps[i] < 0.0) {
                out.negative_atoms.push_back({f.locations[i], -f.jumps[i], false});
              }
            }
          },
          [&](const AffineClampedFn& f) {
            if (f.slope == 0.0) {
              out.base_value = f.intercept;
              return;
            }
            if (!std::isfinite(f.lo) || !std::isfinite(f.hi)) {
              throw UnsupportedOperation(
                  "jordan_decompose: affine function with unbounded support has "
                  "infinite variation");
            }
            out.base_value = f.intercept + f.slope * f.lo;
            auto& part = f.slope > 0.0 ? out.positive_density : out.negative_density;
            part.push_back({f.lo, f.hi, std::fabs(f.slope)});
          },
          [&](const LipschitzTableFn& f) {
            out.base_value = f.values.front();
            for (std::size_t i = 1; i < f.grid.size(); ++i) {
              const double slope =
                  (f.values[i] - f.values[i - 1]) / (f.grid[i] - f.grid[i - 1]);
              if (slope > 0.0) {
                out.positive_density.push_back({f.grid[i - 1], f.grid[i], slope});
              } else if (slope < 0.0) {
                out.negative_density.push_back({f.grid[i - 1], f.grid[i], -slope});
              }
            }
          }},
      g.kind());
  return out;
}

double stieltjes_integral(const GridPath& path, const FunctionSpec& g) {
  const SignedMeasure dg = jordan_decompose(g);
  auto atom_value = [&](const PointMass& a) {
    if (!path.covers(a.location)) {
      throw OutOfDomain("stieltjes_integral: atom at " + format_number(a.location) +
                        " outside path domain");
    }
    if (a.left_continuous) return path.at(a.location);
    if (path.interpolation() == Interpolation::kStepRight &&
        !(a.location > path.grid().front())) {
      throw OutOfDomain("stieltjes_integral: left limit at " + format_number(a.location) +
                        " needs a grid point to its left");
    }
    return path.left_limit(a.location);
  };
  double integral = 0.0;
  for (const auto& a : dg.positive_atoms) integral += a.mass * atom_value(a);
  for (const auto& a : dg.negative_atoms) integral -= a.mass * atom_value(a);
  for (const auto& d : dg.positive_density) integral += d.density * integrate_path(path, d.lo, d.hi);
  for (const auto& d : dg.negative_density) integral -= d.density * integrate_path(path, d.lo, d.hi);
  return -integral;
}

double sigma_g_squared(const FunctionSpec& g, const BaseDistribution& f0) {
  if (g.is_constant()) return 0.0;
  if (const auto* ind = std::get_if<IndicatorFn>(&g.kind())) {
    const double p = f0.cdf(ind->threshold);
    return p * (1.0 - p);
  }
  if (const auto* pc = std::get_if<PiecewiseConstantFn>(&g.kind())) {
    std::vector<std::size_t> order(pc->locations.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](auto a, auto b) { return pc->locations[a] < pc->locations[b]; });
    // Level sets [loc_k, loc_{k+1}) carry value s_k.
    std::vector<double> levels{0.0};
    std::vector<double> probs;
    double previous_left = 0.0;
    double level = 0.0;
    for (std::size_t idx = 0; idx < order.size(); ++idx) {
      const double loc = pc->locations[order[idx]];
      level += pc->jumps[order[idx]];
      if (idx + 1 < order.size() && pc->locations[order[idx + 1]] == loc) continue;
      const double left = f0.cdf_left(loc);
      probs.push_back(left - previous_left);
      previous_left = left;
      levels.push_back(level);
    }
    probs.push_back(1.0 - previous_left);
    double mean = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) mean += probs[k] * levels[k];
    double var = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      var += probs[k] * (levels[k] - mean) * (levels[k] - mean);
    }
    return var;
  }
  if (const auto* af = std::get_if<AffineClampedFn>(&g.kind())) {
    if (!std::isfinite(af->lo) && !std::isfinite(af->hi)) {
      const double var = af->slope * af->slope * f0.variance();
      if (!std::isfinite(var)) throw NonfiniteVariance("sigma_g_squared: infinite variance");
      return var;
    }
  }
  const auto cuts = g.breakpoints();
  const double mean = expectation([&](double x) { return g(x); }, cuts, f0);
  const double var = expectation(
      [&](double x) {
        const double d = g(x) - mean;
        return d * d;
      },
      cuts, f0);
  if (!std::isfinite(var)) throw NonfiniteVariance("sigma_g_squared: infinite variance");
  return std::max(var, 0.0);
}

double empirical_variance(const FunctionSpec& g, std::span<const double> data) {
  if (data.empty()) throw InvalidParameter("empirical_variance: empty data");
  // Centre at g(data[0]) so a constant g gives exactly zero.
  const double ref = g(data[0]);
  double mean = 0.0;
  for (double z : data) mean += g(z) - ref;
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (double z : data) {
    const double d = g(z) - ref - mean;
    var += d * d;
  }
  return var / static_cast<double>(data.size());
}

namespace {

nlohmann::json bound_to_json(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

double bound_from_json(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const FunctionSpec& g) {
  std::visit(Overloaded{[&](const IndicatorFn& f) {
                          j = {{"kind", "indicator"}, {"threshold", f.threshold}};
                        },
                        [&](const PiecewiseConstantFn& f) {
                          j = {{"kind", "piecewise_constant"},
                               {"locations", f.locations},
                               {"jumps", f.jumps}};
                        },
                        [&](const AffineClampedFn& f) {
                          j = {{"kind", "affine_clamped"},
                               {"slope", f.slope},
                               {"intercept", f.intercept},
                               {"lo", bound_to_json(f.lo)},
                               {"hi", bound_to_json(f.hi)}};
                        },
                        [&](const LipschitzTableFn& f) {
                          j = {{"kind", "lipschitz_table"},
                               {"grid", f.grid},
                               {"values", f.values}};
                        }},
             g.kind());
  j["label"] = g.label();
}

FunctionSpec function_spec_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  FunctionSpec g = [&] {
    if (kind == "indicator") return FunctionSpec::indicator(j.at("threshold").get<double>());
    if (kind == "piecewise_constant") {
      return FunctionSpec::piecewise_constant(j.at("locations").get<std::vector<double>>(),
                                              j.at("jumps").get<std::vector<double>>());
    }
    if (kind == "affine_clamped") {
      return FunctionSpec::affine_clamped(j.value("slope", 1.0), j.value("intercept", 0.0),
                                          bound_from_json(j, "lo", -kInf),
                                          bound_from_json(j, "hi", kInf));
    }
    if (kind == "identity") return FunctionSpec::identity();
    if (kind == "constant") return FunctionSpec::constant(j.value("value", 1.0));
    if (kind == "lipschitz_table") {
      return FunctionSpec::lipschitz_table(j.at("grid").get<std::vector<double>>(),
                                           j.at("values").get<std::vector<double>>());
    }
    throw InvalidParameter("unknown function kind '" + kind + "'");
  }();
  if (j.contains("label")) return g.with_label(j.at("label").get<std::string>());
  return g;
}

void to_json(nlohmann::json& j, const ClassSpec& c) {
  j = {{"members", c.members()}, {"envelope", c.envelope()}};
}

ClassSpec class_spec_from_json(const nlohmann::json& j, const BaseDistribution& f0) {
  if (j.contains("kind") && j.at("kind") == "indicator_grid") {
    return indicator_quantile_class(f0, j.value("count", std::size_t{21}));
  }
  std::vector<FunctionSpec> members;
  for (const auto& m : j.at("members")) members.push_back(function_spec_from_json(m));
  return ClassSpec(std::move(members), function_spec_from_json(j.at("envelope")));
}

}  // namespace bvmdp
