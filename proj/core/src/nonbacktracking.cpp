#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "pairmatch/clustering.hpp"
#include "pairmatch/rng.hpp"

namespace pairmatch {

namespace {

// Directed-edge representation of the non-backtracking operator. Undirected
// edge e gives directed ids 2e = (a->b) and 2e+1 = (b->a); the reverse of id
// is id ^ 1.
struct NBOperator {
  std::int64_t m2 = 0;                            // number of directed edges
  std::vector<std::int32_t> head;                 // head[id] = v for (u->v)
  std::vector<std::vector<std::int32_t>> out;     // out[v] = directed ids leaving v

  // y = B x:  y[(u->v)] = sum_{w in adj(v), w != u} x[(v->w)]
  void apply(const std::vector<double>& x, std::vector<double>& y,
             std::vector<double>& scratch_node_sum) const {
    std::fill(scratch_node_sum.begin(), scratch_node_sum.end(), 0.0);
    for (std::size_t v = 0; v < out.size(); ++v) {
      double s = 0.0;
      for (std::int32_t id : out[v]) s += x[static_cast<std::size_t>(id)];
      scratch_node_sum[v] = s;
    }
    for (std::int64_t id = 0; id < m2; ++id) {
      const std::size_t v = static_cast<std::size_t>(head[static_cast<std::size_t>(id)]);
      y[static_cast<std::size_t>(id)] = scratch_node_sum[v] - x[static_cast<std::size_t>(id ^ 1)];
    }
  }
};

NBOperator build_operator(const ObservedGraph& obs) {
  NBOperator op;
  const std::size_t n = obs.size();
  op.out.assign(n, {});
  for (const auto& o : obs.observations) {
    if (!o.outcome) continue;
    const std::int32_t ida = static_cast<std::int32_t>(op.m2);      // a -> b
    const std::int32_t idb = static_cast<std::int32_t>(op.m2 + 1);  // b -> a
    op.head.push_back(o.b);
    op.head.push_back(o.a);
    op.out[static_cast<std::size_t>(o.a)].push_back(ida);
    op.out[static_cast<std::size_t>(o.b)].push_back(idb);
    op.m2 += 2;
  }
  return op;
}

double col_norm(const std::vector<std::vector<double>>& X, std::size_t c) {
  double s = 0.0;
  for (double x : X[c]) s += x * x;
  return std::sqrt(s);
}

// Modified Gram-Schmidt in place; near-dependent columns are re-randomized so
// the block keeps full rank through nilpotent transients.
void orthonormalize(std::vector<std::vector<double>>& X, Rng& rng) {
  const std::size_t b = X.size();
  const std::size_t dim = X[0].size();
  for (std::size_t c = 0; c < b; ++c) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      for (std::size_t p = 0; p < c; ++p) {
        double d = 0.0;
        for (std::size_t i = 0; i < dim; ++i) d += X[p][i] * X[c][i];
        for (std::size_t i = 0; i < dim; ++i) X[c][i] -= d * X[p][i];
      }
      const double nc = col_norm(X, c);
      if (nc > 1e-12) {
        for (std::size_t i = 0; i < dim; ++i) X[c][i] /= nc;
        break;
      }
      for (std::size_t i = 0; i < dim; ++i) X[c][i] = rng.next_double() - 0.5;
    }
  }
}

struct RitzPair {
  std::complex<double> lambda1{0.0, 0.0};
  std::complex<double> lambda2{0.0, 0.0};
  double lambda2_mod = 0.0;
  Eigen::VectorXcd v1;  // Ritz coefficients in the block basis
  Eigen::VectorXcd v2;
};

RitzPair ritz_extract(const Eigen::MatrixXd& H) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(H);
  const auto& vals = es.eigenvalues();
  std::vector<int> order(static_cast<std::size_t>(vals.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::abs(vals[a]), mb = std::abs(vals[b]);
    if (ma != mb) return ma > mb;
    return vals[a].real() > vals[b].real();  // Perron root first among ties
  });
  RitzPair out;
  out.lambda1 = vals[order[0]];
  out.v1 = es.eigenvectors().col(order[0]);
  if (order.size() > 1) {
    out.lambda2 = vals[order[1]];
    out.lambda2_mod = std::abs(vals[order[1]]);
    out.v2 = es.eigenvectors().col(order[1]);
  }
  return out;
}

}  // namespace

NBSpectrum nb_spectrum(const ObservedGraph& obs, std::uint64_t seed) {
  NBOperator op = build_operator(obs);
  if (op.m2 == 0) fail(Errc::degenerate_input, "nb_spectrum needs at least one present edge");

  NBSpectrum result;
  result.directed_edge_count = op.m2;

  const std::size_t dim = static_cast<std::size_t>(op.m2);
  const std::size_t b = std::min<std::size_t>(dim, 8);
  Rng rng(derive_seed(seed, 0x6e625370ull));

  // block columns; exact reduction when the block spans the whole space
  std::vector<std::vector<double>> X(b, std::vector<double>(dim, 0.0));
  if (b == dim) {
    for (std::size_t c = 0; c < b; ++c) X[c][c] = 1.0;
  } else {
    for (std::size_t c = 0; c < b; ++c) {
      for (std::size_t i = 0; i < dim; ++i) X[c][i] = rng.next_double() - 0.5;
    }
  }
  orthonormalize(X, rng);

  std::vector<std::vector<double>> Y(b, std::vector<double>(dim, 0.0));
  std::vector<double> node_sum(op.out.size(), 0.0);
  Eigen::MatrixXd H(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b));

  RitzPair ritz;
  double prev1 = -1.0, prev2 = -1.0;
  int stable = 0;
  const int max_sweeps = 10000;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double block_norm = 0.0;
    for (std::size_t c = 0; c < b; ++c) {
      op.apply(X[c], Y[c], node_sum);
      block_norm += col_norm(Y, c);
    }
    if (block_norm < 1e-14) return result;  // nilpotent operator: all eigenvalues 0

    // H = X^T B X
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t c = 0; c < b; ++c) {
        double d = 0.0;
        for (std::size_t i = 0; i < dim; ++i) d += X[r][i] * Y[c][i];
        H(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = d;
      }
    }
    ritz = ritz_extract(H);
    const double l1 = std::abs(ritz.lambda1);
    const double l2 = ritz.lambda2_mod;
    const bool settled = std::abs(l1 - prev1) <= 1e-10 * std::max(1.0, l1) &&
                         std::abs(l2 - prev2) <= 1e-10 * std::max(1.0, l2);
    stable = settled ? stable + 1 : 0;
    if ((stable >= 3 && sweep >= 2) || (b == dim && sweep >= 1)) break;
    prev1 = l1;
    prev2 = l2;

    X.swap(Y);
    orthonormalize(X, rng);
  }

  result.lambda1 = ritz.lambda1.real();
  result.lambda2_mod = ritz.lambda2_mod;
  if (result.lambda1 < 0.0 && std::abs(ritz.lambda1.imag()) < 1e-9) {
    // pathological ordering safeguard; the Perron value of a non-nilpotent
    // non-backtracking operator is real nonnegative
    result.lambda1 = std::abs(ritz.lambda1);
  }

  // residuals from the converged block: for coefficients c, B(Xc) = Yc, so
  // ||B v - lambda v|| = ||(Y - lambda X) c|| with no extra matvec
  auto residual = [&](const Eigen::VectorXcd& coeff, std::complex<double> lambda) {
    if (coeff.size() == 0) return 0.0;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      std::complex<double> bv{0.0, 0.0}, v{0.0, 0.0};
      for (std::size_t c = 0; c < b; ++c) {
        bv += coeff[static_cast<Eigen::Index>(c)] * Y[c][i];
        v += coeff[static_cast<Eigen::Index>(c)] * X[c][i];
      }
      num += std::norm(bv - lambda * v);
      den += std::norm(v);
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
  };
  result.lambda1_residual = residual(ritz.v1, ritz.lambda1);
  result.lambda2_residual = residual(ritz.v2, ritz.lambda2);
  return result;
}

}  // namespace pairmatch
