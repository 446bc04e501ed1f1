#include "bvmdp/rng.h"

#include <cmath>
#include <cstdio>
#include <string>

#include "bvmdp/errors.h"

namespace bvmdp {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

// Domain separation tags for key derivation.
constexpr std::uint32_t kRootTag = 0x5EEDu;
constexpr std::uint32_t kChildTag = 0xC41Du;

std::array<std::uint32_t, 2> key_from(const std::array<std::uint32_t, 4>& b) {
  return {b[0], b[1] ^ b[3]};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed)
    : seed_(seed),
      key_(key_from(philox4x32({static_cast<std::uint32_t>(seed),
                                static_cast<std::uint32_t>(seed >> 32),
                                kRootTag, 0u},
                               {0x243F6A88u, 0x85A308D3u}))) {}

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> path,
                     std::array<std::uint32_t, 2> key)
    : seed_(seed), path_(std::move(path)), key_(key) {}

RngStream RngStream::child(std::uint64_t index) const {
  std::vector<std::uint64_t> path = path_;
  path.push_back(index);
  const auto depth = static_cast<std::uint32_t>(path.size());
  const auto block = philox4x32({static_cast<std::uint32_t>(index),
                                 static_cast<std::uint32_t>(index >> 32), depth,
                                 kChildTag},
                                key_);
  return RngStream(seed_, std::move(path), key_from(block));
}

RngStream RngStream::split() { return child(next_u64()); }

void RngStream::refill() {
  block_ = philox4x32(counter_, key_);
  // 128-bit counter increment.
  for (auto& word : counter_) {
    if (++word != 0) break;
  }
  block_pos_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (block_pos_ >= 4) refill();
  const std::uint64_t lo = block_[block_pos_];
  const std::uint64_t hi = block_[block_pos_ + 1];
  block_pos_ += 2;
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double gaussian_sample(RngStream& stream) {
  if (stream.has_spare_normal_) {
    stream.has_spare_normal_ = false;
    return stream.spare_normal_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * stream.uniform() - 1.0;
    v = 2.0 * stream.uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  stream.spare_normal_ = v * factor;
  stream.has_spare_normal_ = true;
  return u * factor;
}

double exponential_sample(RngStream& stream) {
  return -std::log(stream.uniform());
}

double gamma_sample(double shape, RngStream& stream) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InvalidParameter("gamma_sample: shape must be positive, got " +
                           std::to_string(shape));
  }
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a).
    const double boosted = gamma_sample(shape + 1.0, stream);
    return boosted * std::exp(std::log(stream.uniform()) / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = gaussian_sample(stream);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_sample(double a, double b, RngStream& stream) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw InvalidParameter("beta_sample: parameters must be positive");
  }
  RngStream left = stream.split();
  RngStream right = stream.split();
  const double x = gamma_sample(a, left);
  const double y = gamma_sample(b, right);
  return x / (x + y);
}

std::vector<double> dirichlet_sample(std::span<const double> alphas,
                                     RngStream& stream) {
  if (alphas.empty()) {
    throw InvalidParameter("dirichlet_sample: empty parameter vector");
  }
  std::vector<double> out(alphas.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) {
      throw InvalidParameter("dirichlet_sample: parameter " +
                             std::to_string(i) + " is not positive");
    }
    out[i] = gamma_sample(alphas[i], stream);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

std::vector<double> uniform_order_statistics(std::size_t n, RngStream& stream) {
  if (n == 0) {
    throw InvalidParameter("uniform_order_statistics: n must be >= 1");
  }
  std::vector<double> sums(n);
  for (;;) {
    double running = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      running += exponential_sample(stream);
      sums[i] = running;
    }
    const double total = running + exponential_sample(stream);
    bool strictly_increasing = true;
    double previous = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sums[i] /= total;
      if (!(sums[i] > previous) || !(sums[i] < 1.0)) strictly_increasing = false;
      previous = sums[i];
    }
    if (strictly_increasing) return sums;
  }
}

std::vector<TailRow> gamma_tail_check(double theta, std::span<const double> x_grid,
                                      std::size_t draws, RngStream& stream) {
  if (!(theta > 0.0)) throw InvalidParameter("gamma_tail_check: theta must be positive");
  if (draws == 0) throw InvalidParameter("gamma_tail_check: draws must be >= 1");
  std::vector<double> sample(draws);
  for (double& x : sample) x = gamma_sample(theta, stream);
  std::vector<TailRow> rows;
  for (double x : x_grid) {
    if (!(x > 0.0)) throw InvalidParameter("gamma_tail_check: x must be positive");
    const double upper = theta + std::sqrt(2.0 * theta * x) + x;
    const double lower = theta - std::sqrt(2.0 * theta * x);
    std::size_t above = 0;
    std::size_t below = 0;
    for (double v : sample) {
      above += v > upper;
      below += v < lower;
    }
    char tag[64];
    std::snprintf(tag, sizeof tag, "gamma theta=%g", theta);
    rows.push_back(make_tail_row(std::string(tag) + " upper", x, above, draws, std::exp(-x)));
    rows.push_back(make_tail_row(std::string(tag) + " lower", x, below, draws, std::exp(-x)));
  }
  return rows;
}

}  // namespace bvmdp
