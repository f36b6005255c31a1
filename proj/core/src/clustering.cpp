#include "pairmatch/clustering.hpp"

#include <algorithm>
#include <cmath>

#include "pairmatch/rng.hpp"

namespace pairmatch {

namespace {

constexpr double kEigTol = 1e-8;
constexpr int kEigMaxIters = 10000;

struct KernelGraph {
  std::size_t n = 0;
  std::vector<std::vector<std::int32_t>> adj;  // present edges only
  std::vector<std::int32_t> degree;
};

KernelGraph build_present(const ObservedGraph& obs) {
  KernelGraph g;
  g.n = obs.size();
  g.adj.assign(g.n, {});
  g.degree.assign(g.n, 0);
  for (const auto& o : obs.observations) {
    if (o.outcome) {
      g.adj[static_cast<std::size_t>(o.a)].push_back(o.b);
      g.adj[static_cast<std::size_t>(o.b)].push_back(o.a);
      ++g.degree[static_cast<std::size_t>(o.a)];
      ++g.degree[static_cast<std::size_t>(o.b)];
    }
  }
  return g;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y = (A + shift I) x restricted to kept nodes
void matvec(const KernelGraph& g, const std::vector<std::uint8_t>& keep, double shift,
            const std::vector<double>& x, std::vector<double>& y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t u = 0; u < g.n; ++u) {
    if (!keep[u]) continue;
    double acc = shift * x[u];
    for (std::int32_t v : g.adj[u]) {
      if (keep[static_cast<std::size_t>(v)]) acc += x[static_cast<std::size_t>(v)];
    }
    y[u] = acc;
  }
}

// Leading eigenvector of the shifted adjacency, optionally deflated against a
// previous eigenvector (projection each step keeps the iterate orthogonal).
std::vector<double> power_iterate(const KernelGraph& g, const std::vector<std::uint8_t>& keep,
                                  double shift, const std::vector<double>* deflate, Rng& rng) {
  const std::size_t n = g.n;
  std::vector<double> v(n, 0.0), w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) v[i] = rng.next_double() - 0.5;
  }
  if (deflate) {
    const double c = dot(*deflate, v);
    for (std::size_t i = 0; i < n; ++i) v[i] -= c * (*deflate)[i];
  }
  double nv = norm(v);
  if (nv == 0.0) return v;
  for (double& x : v) x /= nv;

  double prev = 0.0;
  for (int it = 0; it < kEigMaxIters; ++it) {
    matvec(g, keep, shift, v, w);
    if (deflate) {
      const double c = dot(*deflate, w);
      for (std::size_t i = 0; i < n; ++i) w[i] -= c * (*deflate)[i];
    }
    const double nw = norm(w);
    if (nw == 0.0) return w;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (std::abs(nw - prev) < kEigTol * std::max(1.0, std::abs(nw))) break;
    prev = nw;
  }
  return v;
}

}  // namespace

std::int64_t ObservedGraph::present_edges() const {
  std::int64_t m = 0;
  for (const auto& o : observations) m += o.outcome ? 1 : 0;
  return m;
}

PartitionEstimate goodclust(const ObservedGraph& obs, std::uint64_t seed) {
  const std::size_t n = obs.size();
  if (n < 4) fail(Errc::invalid_params, "goodclust needs at least 4 nodes");
  KernelGraph g = build_present(obs);

  std::int64_t m2 = 0;
  for (std::int32_t d : g.degree) m2 += d;
  if (m2 == 0) fail(Errc::degenerate_input, "goodclust needs at least one observed edge");

  // trim: drop nodes whose degree exceeds 10x the average
  const double avg_degree = static_cast<double>(m2) / static_cast<double>(n);
  std::vector<std::uint8_t> keep(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.degree[i] > 10.0 * avg_degree) keep[i] = 0;
  }

  std::int32_t max_deg = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) max_deg = std::max(max_deg, g.degree[i]);
  }
  // shift makes the operator PSD so power iteration targets the algebraically
  // largest pair
  const double shift = static_cast<double>(max_deg) + 1.0;

  Rng rng(derive_seed(seed, 0x676f6f64ull));
  const std::vector<double> v1 = power_iterate(g, keep, shift, nullptr, rng);
  const std::vector<double> v2 = power_iterate(g, keep, shift, &v1, rng);

  PartitionEstimate est;
  est.labels.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) est.labels[i] = v2[i] >= 0.0 ? 1 : 2;

  // one refinement pass: reassign each node to the side holding the majority
  // of its observed neighbors (snapshot semantics, ties keep)
  std::vector<std::int8_t> refined(est.labels);
  for (std::size_t u = 0; u < n; ++u) {
    int c1 = 0, c2 = 0;
    for (std::int32_t v : g.adj[u]) {
      (est.labels[static_cast<std::size_t>(v)] == 1 ? c1 : c2)++;
    }
    if (c1 > c2) refined[u] = 1;
    else if (c2 > c1) refined[u] = 2;
  }
  est.labels.swap(refined);

  // size convention: label 1 to the larger community; on ties, to the
  // community containing the smallest node index
  std::int64_t size1 = 0;
  for (std::int8_t l : est.labels) size1 += l == 1 ? 1 : 0;
  const std::int64_t size2 = static_cast<std::int64_t>(n) - size1;
  bool swap_labels = size1 < size2;
  if (size1 == size2) swap_labels = est.labels[0] != 1;
  if (swap_labels) {
    for (auto& l : est.labels) l = l == 1 ? 2 : 1;
  }
  est.label1_is_larger = true;
  return est;
}

double misclassification(const PartitionEstimate& est, const std::vector<std::int8_t>& truth) {
  if (est.labels.size() != truth.size() || truth.empty()) {
    fail(Errc::invalid_params, "estimate and truth must cover the same node set");
  }
  std::int64_t miss = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) miss += est.labels[i] != truth[i] ? 1 : 0;
  const std::int64_t n = static_cast<std::int64_t>(truth.size());
  return static_cast<double>(std::min(miss, n - miss)) / static_cast<double>(n);
}

}  // namespace pairmatch
