#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "bvmdp/distribution.h"
#include "bvmdp/dp_sampler.h"
#include "bvmdp/grid_path.h"
#include "bvmdp/rng.h"

namespace bvmdp {

enum class CouplingBackend {
  // Beta midpoint fraction tied to the bridge midpoint through one Gaussian
  // per node of a binary tree over the n spacings.
  kGammaMidpoint,
  // Control: order statistics and bridge drawn independently.
  kIndependent,
};

std::string backend_name(CouplingBackend backend);
CouplingBackend backend_from_name(const std::string& name);

// Order statistics of n - 1 uniforms together with one Brownian bridge.
struct CoupledPair {
  std::size_t n = 0;
  // U_(1) < ... < U_(n-1).
  std::vector<double> uniforms;
  // B(i / n), i = 0..n.
  std::vector<double> leaf_bridge;
  // B(i / (n - 1)), i = 0..n-1.
  std::vector<double> quantile_bridge;
  // B at the caller's extra points, in the order given.
  std::vector<double> extra_values;

  // The bridge on {i / (n - 1)}.
  GridPath bridge() const;
};

// Tree levels needed for n leaves.
int minimal_depth(std::size_t n);

// depth = 0 selects minimal_depth(n); a positive depth below it is an error.
CoupledPair coupled_quantile_pair(std::size_t n, int depth, RngStream& stream,
                                  CouplingBackend backend = CouplingBackend::kGammaMidpoint,
                                  std::span<const double> extra_points = {});

struct CouplingRecord {
  CouplingBackend backend = CouplingBackend::kGammaMidpoint;
  std::size_t n = 0;
  std::size_t rep = 0;
  double delta = 0.0;
  double v_n = 0.0;
  // prior_term, quantile_term, grid_shift, scale_shift, discretization for
  // bridge records; prior_term only for Kiefer records.
  std::map<std::string, double> terms;

  double term_sum() const;
};

struct CouplingOptions {
  CouplingBackend backend = CouplingBackend::kGammaMidpoint;
  int workers = 1;
  // Hold the data fixed across replications.
  bool fixed_data = false;
  double trunc_eps = kDefaultTruncEps;
};

// Replication r draws everything from root.child(r): data from child 0, the
// coupled pair from child 1, V_n from child 2 and Q from child 3.
std::vector<CouplingRecord> bridge_coupling_experiment(const BaseMeasureSpec& nu,
                                                       const BaseDistribution& f0,
                                                       std::size_t n, std::size_t reps,
                                                       const RngStream& root,
                                                       const CouplingOptions& options = {});

// Pooled doubling batches for one replication. The chain of sizes starts at
// n_list[0] halved while it stays even and >= 2, so every requested size
// past the base is reached by doubling. Batch 0 is a coupled pair of the base
// size; batch j >= 1 adds b_j = chain[j - 1] fresh uniforms with their own
// coupled bridge B_j, and K(., n_j) = K(., n_{j-1}) + sqrt(b_j) B_j.
class DoublingKieferCoupling {
 public:
  DoublingKieferCoupling(std::vector<std::size_t> n_list, const RngStream& rep,
                         CouplingBackend backend);

  // Adds batches up to the next requested size; false once all are built.
  bool advance();
  std::size_t batches() const { return built_; }
  std::size_t n() const { return n_list_[built_ - 1]; }
  // Pooled order statistics, n() - 1 of them.
  const std::vector<double>& uniforms() const { return pooled_; }
  // K(i / n(), n()) for i = 0..n().
  double kiefer_at(std::size_t i) const;

 private:
  std::vector<std::size_t> n_list_;
  RngStream first_batch_;
  RngStream later_batches_;
  CouplingBackend backend_;
  std::vector<std::size_t> chain_;
  std::size_t built_ = 0;
  std::size_t chain_built_ = 0;
  std::vector<double> pooled_;
  // K on {i / n_max}.
  std::vector<double> sheet_;
  std::vector<double> fine_grid_;
};

// Records per replication and per n in n_list (strictly doubling).
std::vector<CouplingRecord> kiefer_coupling_experiment(const BaseMeasureSpec& nu,
                                                       const BaseDistribution& f0,
                                                       const std::vector<std::size_t>& n_list,
                                                       std::size_t reps,
                                                       const RngStream& root,
                                                       const CouplingOptions& options = {});

struct TrueCdfRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  // sqrt(n) sup |F_emp - F0|.
  double ks = 0.0;
  bool event = false;
  // sup |sqrt(n)(F_n - F_emp) - B(F0)| at the jump corners.
  double delta = 0.0;
  // Same with B(F_emp), as in the bridge experiment.
  double bridge_delta = 0.0;
  // sup |B(F_emp) - B(F0)| at the jump corners.
  double modulus = 0.0;
};

std::vector<TrueCdfRecord> true_cdf_experiment(const BaseMeasureSpec& nu,
                                               const BaseDistribution& f0, std::size_t n,
                                               std::size_t reps, double y,
                                               const RngStream& root,
                                               const CouplingOptions& options = {});

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  // Root mean square residual of the log-log fit.
  double residual = 0.0;
  double slope_se = 0.0;
};

RateFit rate_fit(std::span<const double> ns, std::span<const double> medians);

struct NSummary {
  std::size_t n = 0;
  std::size_t count = 0;
  double median_delta = 0.0;
  std::map<std::string, double> median_terms;
};
// One row per n, ascending.
std::vector<NSummary> summarize_by_n(const std::vector<CouplingRecord>& records);

}  // namespace bvmdp
