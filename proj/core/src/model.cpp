#include "pairmatch/model.hpp"

#include <cmath>
#include <string>

namespace pairmatch {

ModelParams ModelParams::from_rates(std::int64_t n, double p, double q) {
  if (n < 4 || n % 2 != 0) fail(Errc::invalid_params, "n must be even and >= 4");
  if (!(q > 0.0) || !(q < p) || !(p <= 0.5)) {
    fail(Errc::invalid_params, "need 0 < q < p <= 1/2");
  }
  return ModelParams{n, p, q};
}

ModelParams ModelParams::from_scaling(std::int64_t n, double s, double alpha) {
  if (!(s > 0.0) || !(alpha > 1.0)) fail(Errc::invalid_params, "need s > 0 and alpha > 1");
  const double r = std::sqrt(alpha);
  return from_rates(n, s * (alpha + r) / 2.0, s * (alpha - r) / 2.0);
}

Budget Budget::bounded(std::int64_t T, std::int64_t B_T) {
  if (T < 0 || B_T < 1) fail(Errc::invalid_params, "budget needs T >= 0 and B_T >= 1");
  return Budget{T, B_T, false};
}

Budget Budget::unbounded_at(std::int64_t T, std::int64_t n) {
  if (T < 0 || n < 2) fail(Errc::invalid_params, "budget needs T >= 0 and n >= 2");
  return Budget{T, std::min<std::int64_t>(n - 1, std::max<std::int64_t>(T, 1)), true};
}

void Budget::validate_against(const ModelParams& params) const {
  if (horizon > params.total_pairs()) {
    fail(Errc::feasibility, "horizon T=" + std::to_string(horizon) + " exceeds C(n,2)=" +
                                std::to_string(params.total_pairs()));
  }
}

double scaling_param(double p, double q) {
  if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0) fail(Errc::invalid_params, "probabilities in [0,1]");
  if (p + q <= 0.0) fail(Errc::invalid_params, "scaling_param undefined for p + q = 0");
  return (p - q) * (p - q) / (p + q);
}

double kl_bernoulli(double p1, double p2) {
  if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0) {
    fail(Errc::invalid_params, "probabilities in [0,1]");
  }
  if (p2 <= 0.0 || p2 >= 1.0) {
    if (p1 == p2) return 0.0;
    return kInfiniteKl;
  }
  double v = 0.0;
  if (p1 > 0.0) v += p1 * std::log(p1 / p2);
  if (p1 < 1.0) v += (1.0 - p1) * std::log((1.0 - p1) / (1.0 - p2));
  return v;
}

BoundValue regret_lower_bound(std::int64_t T, std::int64_t B_T, const ModelParams& params,
                              double rho_star, BoundKind kind) {
  if (T < 0 || B_T < 1) fail(Errc::invalid_params, "need T >= 0 and B_T >= 1");
  if (rho_star < params.rho() - 1e-12) {
    fail(Errc::invalid_params, "rho_star must dominate p/q");
  }
  if (T == 0) return BoundValue{0.0, true};

  const double sqrtT = std::sqrt(static_cast<double>(T));
  const double local = std::max(sqrtT, static_cast<double>(T) / static_cast<double>(B_T));

  double denom;
  bool applicable;
  if (kind == BoundKind::theorem_rate) {
    denom = 32.0 * (1.0 + rho_star) * params.s();
    applicable = params.s() <= 1.0 / (32.0 * (1.0 + rho_star));
  } else {
    const double kl_tilde = std::max(kl_bernoulli(params.p, params.q),
                                     kl_bernoulli(params.q, params.p));
    if (std::isinf(kl_tilde)) return BoundValue{0.0, false};
    denom = 16.0 * kl_tilde;
    applicable = kl_tilde <= 1.0 / 16.0;
  }
  const double value = std::min(local / denom, static_cast<double>(T)) / 32.0;
  return BoundValue{value, applicable};
}

}  // namespace pairmatch
