#pragma once

#include <cstdint>
#include <limits>

#include "pairmatch/errors.hpp"

namespace pairmatch {

// Hidden two-community instance: n nodes split in half, within-community edge
// probability p, between-community probability q, with 0 < q < p <= 1/2.
//
// The difficulty of the instance is summarized by the scaling parameter
// s = (p-q)^2/(p+q); the equivalent (s, alpha) parametrization uses
// alpha = (p+q)^2/(p-q)^2, so p = s(alpha+sqrt(alpha))/2 and
// q = s(alpha-sqrt(alpha))/2.
struct ModelParams {
  std::int64_t n = 0;
  double p = 0.0;
  double q = 0.0;

  static ModelParams from_rates(std::int64_t n, double p, double q);
  static ModelParams from_scaling(std::int64_t n, double s, double alpha);

  double s() const { return (p - q) * (p - q) / (p + q); }
  double alpha() const { return (p + q) * (p + q) / ((p - q) * (p - q)); }
  double rho() const { return p / q; }

  std::int64_t total_pairs() const { return n * (n - 1) / 2; }
  // 2 * C(n/2, 2): pairs inside the two communities
  std::int64_t good_pairs() const { return (n / 2) * (n / 2 - 1); }
};

// Query budget: horizon T plus the per-node cap B_T. The unconstrained case is
// represented explicitly and behaves as node_cap = min(n-1, T).
struct Budget {
  std::int64_t horizon = 0;
  std::int64_t node_cap = 0;
  bool unbounded = false;

  static Budget bounded(std::int64_t T, std::int64_t B_T);
  static Budget unbounded_at(std::int64_t T, std::int64_t n);

  void validate_against(const ModelParams& params) const;
  bool within_good_pair_horizon(const ModelParams& params) const {
    return horizon <= params.good_pairs();
  }
};

// (p-q)^2/(p+q); symmetric in its arguments, zero iff p == q.
double scaling_param(double p, double q);

// Bernoulli Kullback-Leibler divergence kl(p1, p2) with the 0 log 0 = 0
// convention. p2 in {0,1} with p1 != p2 yields +infinity as the distinguished
// sentinel (never computed through log(0) overflow).
double kl_bernoulli(double p1, double p2);

inline constexpr double kInfiniteKl = std::numeric_limits<double>::infinity();

enum class BoundKind {
  theorem_rate,    // (1/32) * min( max(sqrt(T), T/B_T) / (32 (1+rho*) s), T )
  strong_kl_rate,  // (1/32) * min( max(sqrt(T), T/B_T) / (16 max(kl(p,q),kl(q,p))), T )
};

struct BoundValue {
  double value = 0.0;
  // The closed forms are only meaningful in the small-s (resp. small-kl)
  // regime; outside it the value is still computed but flagged.
  bool applicable = true;
};

BoundValue regret_lower_bound(std::int64_t T, std::int64_t B_T, const ModelParams& params,
                              double rho_star, BoundKind kind);

}  // namespace pairmatch
