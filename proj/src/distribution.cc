#include "bvmdp/distribution.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bvmdp/errors.h"
#include "bvmdp/special.h"

namespace bvmdp {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

BaseDistribution::BaseDistribution(Kind kind) : kind_(std::move(kind)) {
  if (auto* u = std::get_if<UniformDist>(&kind_)) {
    if (!(u->lo < u->hi) || !std::isfinite(u->lo) || !std::isfinite(u->hi)) {
      throw InvalidParameter("uniform: need finite lo < hi");
    }
  } else if (auto* g = std::get_if<NormalDist>(&kind_)) {
    if (!(g->sd > 0.0) || !std::isfinite(g->mean)) {
      throw InvalidParameter("normal: need sd > 0 and finite mean");
    }
  } else if (auto* e = std::get_if<ExponentialDist>(&kind_)) {
    if (!(e->rate > 0.0)) throw InvalidParameter("exponential: need rate > 0");
  } else {
    auto& pm = std::get<PointMassDist>(kind_);
    if (pm.locations.empty() || pm.locations.size() != pm.weights.size()) {
      throw InvalidParameter("point_masses: need matching nonempty vectors");
    }
    std::vector<std::size_t> order(pm.locations.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return pm.locations[a] < pm.locations[b];
    });
    double total = 0.0;
    for (double w : pm.weights) {
      if (!(w >= 0.0)) throw InvalidParameter("point_masses: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidParameter("point_masses: zero total weight");
    PointMassDist sorted;
    double running = 0.0;
    for (auto i : order) {
      sorted.locations.push_back(pm.locations[i]);
      sorted.weights.push_back(pm.weights[i] / total);
      running += pm.weights[i] / total;
      cumulative_.push_back(running);
    }
    cumulative_.back() = 1.0;
    pm = std::move(sorted);
  }
}

BaseDistribution BaseDistribution::uniform(double lo, double hi) {
  return BaseDistribution(UniformDist{lo, hi});
}
BaseDistribution BaseDistribution::normal(double mean, double sd) {
  return BaseDistribution(NormalDist{mean, sd});
}
BaseDistribution BaseDistribution::exponential(double rate) {
  return BaseDistribution(ExponentialDist{rate});
}
BaseDistribution BaseDistribution::point_masses(std::vector<double> locations,
                                                std::vector<double> weights) {
  return BaseDistribution(PointMassDist{std::move(locations), std::move(weights)});
}

std::string BaseDistribution::name() const {
  return std::visit(Overloaded{[](const UniformDist&) { return "uniform"; },
                               [](const NormalDist&) { return "normal"; },
                               [](const ExponentialDist&) { return "exponential"; },
                               [](const PointMassDist&) { return "point_masses"; }},
                    kind_);
}

bool BaseDistribution::is_continuous() const {
  return !std::holds_alternative<PointMassDist>(kind_);
}

double BaseDistribution::sample(RngStream& stream) const {
  return std::visit(
      Overloaded{
          [&](const UniformDist& u) { return u.lo + (u.hi - u.lo) * stream.uniform(); },
          [&](const NormalDist& g) { return g.mean + g.sd * gaussian_sample(stream); },
          [&](const ExponentialDist& e) { return exponential_sample(stream) / e.rate; },
          [&](const PointMassDist&) { return quantile(stream.uniform()); }},
      kind_);
}

std::vector<double> BaseDistribution::sample(std::size_t n, RngStream& stream) const {
  std::vector<double> out(n);
  for (double& x : out) x = sample(stream);
  return out;
}

double BaseDistribution::cdf(double x) const {
  return std::visit(
      Overloaded{[&](const UniformDist& u) {
                   return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0);
                 },
                 [&](const NormalDist& g) { return normal_cdf((x - g.mean) / g.sd); },
                 [&](const ExponentialDist& e) {
                   return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x);
                 },
                 [&](const PointMassDist& pm) {
                   auto it = std::upper_bound(pm.locations.begin(),
                                              pm.locations.end(), x);
                   if (it == pm.locations.begin()) return 0.0;
                   return cumulative_[(it - pm.locations.begin()) - 1];
                 }},
      kind_);
}

double BaseDistribution::cdf_left(double x) const {
  if (const auto* pm = std::get_if<PointMassDist>(&kind_)) {
    auto it = std::lower_bound(pm->locations.begin(), pm->locations.end(), x);
    if (it == pm->locations.begin()) return 0.0;
    return cumulative_[(it - pm->locations.begin()) - 1];
  }
  return cdf(x);
}

double BaseDistribution::pdf(double x) const {
  return std::visit(
      Overloaded{[&](const UniformDist& u) {
                   return (x < u.lo || x > u.hi) ? 0.0 : 1.0 / (u.hi - u.lo);
                 },
                 [&](const NormalDist& g) {
                   const double z = (x - g.mean) / g.sd;
                   return std::exp(-0.5 * z * z) / (g.sd * std::sqrt(2.0 * M_PI));
                 },
                 [&](const ExponentialDist& e) {
                   return x < 0.0 ? 0.0 : e.rate * std::exp(-e.rate * x);
                 },
                 [&](const PointMassDist&) -> double {
                   throw UnsupportedOperation("pdf: point masses have no density");
                 }},
      kind_);
}

double BaseDistribution::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("quantile: p outside [0,1]");
  return std::visit(
      Overloaded{[&](const UniformDist& u) { return u.lo + (u.hi - u.lo) * p; },
                 [&](const NormalDist& g) { return g.mean + g.sd * normal_quantile(p); },
                 [&](const ExponentialDist& e) { return -std::log1p(-p) / e.rate; },
                 [&](const PointMassDist& pm) {
                   auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), p);
                   if (it == cumulative_.end()) return pm.locations.back();
                   return pm.locations[it - cumulative_.begin()];
                 }},
      kind_);
}

double BaseDistribution::mean() const {
  return std::visit(
      Overloaded{[](const UniformDist& u) { return 0.5 * (u.lo + u.hi); },
                 [](const NormalDist& g) { return g.mean; },
                 [](const ExponentialDist& e) { return 1.0 / e.rate; },
                 [](const PointMassDist& pm) {
                   return std::inner_product(pm.locations.begin(), pm.locations.end(),
                                             pm.weights.begin(), 0.0);
                 }},
      kind_);
}

double BaseDistribution::variance() const {
  return std::visit(
      Overloaded{[](const UniformDist& u) {
                   const double w = u.hi - u.lo;
                   return w * w / 12.0;
                 },
                 [](const NormalDist& g) { return g.sd * g.sd; },
                 [](const ExponentialDist& e) { return 1.0 / (e.rate * e.rate); },
                 [this](const PointMassDist& pm) {
                   const double m = mean();
                   double v = 0.0;
                   for (std::size_t i = 0; i < pm.locations.size(); ++i) {
                     v += pm.weights[i] * (pm.locations[i] - m) * (pm.locations[i] - m);
                   }
                   return v;
                 }},
      kind_);
}

void to_json(nlohmann::json& j, const BaseDistribution& d) {
  std::visit(Overloaded{[&](const UniformDist& u) {
                          j = {{"kind", "uniform"}, {"lo", u.lo}, {"hi", u.hi}};
                        },
                        [&](const NormalDist& g) {
                          j = {{"kind", "normal"}, {"mean", g.mean}, {"sd", g.sd}};
                        },
                        [&](const ExponentialDist& e) {
                          j = {{"kind", "exponential"}, {"rate", e.rate}};
                        },
                        [&](const PointMassDist& pm) {
                          j = {{"kind", "point_masses"},
                               {"locations", pm.locations},
                               {"weights", pm.weights}};
                        }},
             d.kind());
}

BaseDistribution base_distribution_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform") {
    return BaseDistribution::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
  }
  if (kind == "normal") {
    return BaseDistribution::normal(j.value("mean", 0.0), j.value("sd", 1.0));
  }
  if (kind == "exponential") return BaseDistribution::exponential(j.value("rate", 1.0));
  if (kind == "point_masses") {
    return BaseDistribution::point_masses(j.at("locations").get<std::vector<double>>(),
                                          j.at("weights").get<std::vector<double>>());
  }
  throw InvalidParameter("unknown distribution kind '" + kind + "'");
}

BaseMeasureSpec BaseMeasureSpec::bootstrap() { return BaseMeasureSpec(0.0, std::nullopt); }

BaseMeasureSpec::BaseMeasureSpec(double total_mass, std::optional<BaseDistribution> base)
    : total_mass_(total_mass), base_(std::move(base)) {
  if (!(total_mass >= 0.0) || !std::isfinite(total_mass)) {
    throw InvalidParameter("base measure: total mass must be finite and >= 0");
  }
  if (total_mass == 0.0 && base_) {
    throw InvalidParameter("base measure: zero mass must not carry a base distribution");
  }
  if (total_mass > 0.0 && !base_) {
    throw InvalidParameter("base measure: positive mass requires a base distribution");
  }
}

const BaseDistribution& BaseMeasureSpec::base() const {
  if (!base_) throw InvalidParameter("base measure: bootstrap prior has no base");
  return *base_;
}

double BaseMeasureSpec::measure_cdf(double z) const {
  return base_ ? total_mass_ * base_->cdf(z) : 0.0;
}

void to_json(nlohmann::json& j, const BaseMeasureSpec& nu) {
  j = {{"total_mass", nu.total_mass()}};
  if (!nu.is_bootstrap()) j["base"] = nu.base();
}

BaseMeasureSpec base_measure_from_json(const nlohmann::json& j) {
  const double mass = j.value("total_mass", 0.0);
  if (mass == 0.0) return BaseMeasureSpec::bootstrap();
  if (!j.contains("base")) {
    throw InvalidParameter("base measure: positive mass requires 'base'");
  }
  return BaseMeasureSpec(mass, base_distribution_from_json(j.at("base")));
}

}  // namespace bvmdp
