#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bvmdp/stats.h"

namespace bvmdp {

// Counter-based random stream. A stream is identified by (seed, path); the
// Philox4x32-10 key is derived by hashing the path into the seed, so two
// streams with the same identity always produce the same variates, and
// children with distinct indices are independent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Fresh stream at (seed, path ++ [index]), counter reset.
  RngStream child(std::uint64_t index) const;

  // Child keyed by the next raw draw of this stream; advances this stream.
  RngStream split();

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();

 private:
  RngStream(std::uint64_t seed, std::vector<std::uint64_t> path,
            std::array<std::uint32_t, 2> key);

  void refill();

  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;

  friend double gaussian_sample(RngStream& stream);
};

// One Philox4x32-10 block. Exposed for tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

double gaussian_sample(RngStream& stream);
// Unit-mean exponential.
double exponential_sample(RngStream& stream);
// Gamma(shape, 1); throws InvalidParameter for shape <= 0.
double gamma_sample(double shape, RngStream& stream);
double beta_sample(double a, double b, RngStream& stream);
std::vector<double> dirichlet_sample(std::span<const double> alphas,
                                     RngStream& stream);
// Sorted i.i.d. U(0,1) sample built from normalized exponential partial sums.
std::vector<double> uniform_order_statistics(std::size_t n, RngStream& stream);

// For X ~ Gamma(theta, 1): P(X > theta + sqrt(2 theta x) + x) and
// P(X < theta - sqrt(2 theta x)), each against e^{-x}.
std::vector<TailRow> gamma_tail_check(double theta, std::span<const double> x_grid,
                                      std::size_t draws, RngStream& stream);

}  // namespace bvmdp
