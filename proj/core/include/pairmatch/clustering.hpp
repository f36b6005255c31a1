#pragma once

#include <cstdint>
#include <vector>

#include "pairmatch/errors.hpp"

namespace pairmatch {

// A node subset together with the pair observations made on it. A pair can be
// observed absent (outcome 0); unobserved pairs carry no information.
struct ObservedGraph {
  std::vector<std::int64_t> nodes;  // ordered node subset

  struct Observation {
    std::int32_t a;  // positions into `nodes`, a < b
    std::int32_t b;
    std::int8_t outcome;
  };
  std::vector<Observation> observations;

  std::size_t size() const { return nodes.size(); }
  std::int64_t present_edges() const;
};

// Estimated two-way labelling over the observed node set, positions aligned
// with ObservedGraph::nodes. Label 1 goes to the larger estimated community;
// ties go to the community containing the smallest node index.
struct PartitionEstimate {
  std::vector<std::int8_t> labels;  // 1 or 2 per position
  bool label1_is_larger = true;
};

// Community recovery on the observed kernel: degree trimming, the two leading
// eigenvectors of the trimmed adjacency by (shifted) power iteration with
// deflation, a sign split on the second eigenvector, and one majority
// refinement pass over observed edges. Deterministic given (obs, seed).
PartitionEstimate goodclust(const ObservedGraph& obs, std::uint64_t seed);

// Permutation-minimized fraction of misclassified nodes, in [0, 1/2].
double misclassification(const PartitionEstimate& est, const std::vector<std::int8_t>& truth);

struct NBSpectrum {
  double lambda1 = 0.0;      // Perron value (largest modulus; real part)
  double lambda2_mod = 0.0;  // modulus of the second eigenvalue
  std::int64_t directed_edge_count = 0;
  // relative residuals ||B v - lambda v|| / ||v|| of the returned Ritz pairs
  double lambda1_residual = 0.0;
  double lambda2_residual = 0.0;
};

// Top two eigenvalues (by modulus) of the non-backtracking operator
// B[(u->v),(v->w)] = 1 iff w != u, computed by block subspace iteration with
// Rayleigh-Ritz extraction on the sparse directed-edge operator. Isolated
// nodes are ignored; a graph with no present edges is degenerate input.
NBSpectrum nb_spectrum(const ObservedGraph& obs, std::uint64_t seed = 0x9e3779b9ull);

}  // namespace pairmatch
