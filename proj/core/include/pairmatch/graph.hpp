#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "pairmatch/model.hpp"
#include "pairmatch/rng.hpp"

namespace pairmatch {

// Hidden instance: a uniformly random balanced labelling plus Bernoulli
// adjacency. Adjacency is materialized lazily from a per-pair stream keyed by
// (seed, min node, max node), so n can be large without O(n^2) memory and
// repeated access to a pair is always consistent.
class HiddenGraph {
 public:
  HiddenGraph(const ModelParams& params, std::uint64_t seed);

  std::int64_t n() const { return params_.n; }
  const ModelParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  // Ground truth. For the oracle's own accounting and for post-run
  // diagnostics; strategies only ever see query outcomes.
  int label(std::int64_t a) const { return labels_[static_cast<std::size_t>(a)]; }
  bool is_bad_pair(std::int64_t a, std::int64_t b) const { return label(a) != label(b); }

  int edge(std::int64_t a, std::int64_t b) const;

 private:
  ModelParams params_;
  std::uint64_t seed_;
  std::vector<std::uint8_t> labels_;  // values 1 / 2, exactly n/2 each
};

struct PairRecord {
  std::int32_t a;
  std::int32_t b;
  std::int8_t outcome;
  std::int8_t bad;
};

struct TrajectoryPoint {
  std::int64_t t;
  std::int64_t n_bad;
  std::int64_t discoveries;
};

struct PhaseMark {
  std::string tag;
  std::int64_t t;
  std::int64_t n_bad;
  std::int64_t discoveries;
};

// The strategy's entire observable world plus the oracle-side regret
// accounting. Enforces (NR) and pathwise (SpS) on every query and keeps a
// bit-exact fingerprint of the query stream for replay tests.
class QueryLedger {
 public:
  QueryLedger(const ModelParams& params, Budget budget, bool record_pairs = false,
              int trajectory_points = 0);

  int query(const HiddenGraph& graph, std::int64_t a, std::int64_t b);

  bool sampled(std::int64_t a, std::int64_t b) const;
  std::int64_t t() const { return t_; }
  std::int64_t n_bad() const { return n_bad_; }
  std::int64_t discoveries() const { return discoveries_; }
  std::int64_t node_count(std::int64_t a) const { return per_node_[static_cast<std::size_t>(a)]; }
  std::int64_t max_node_count() const;
  std::int64_t remaining() const { return budget_.horizon - t_; }
  const Budget& budget() const { return budget_; }
  std::int64_t n() const { return params_.n; }

  bool recording() const { return record_pairs_; }
  const std::vector<PairRecord>& records() const { return records_; }
  const std::vector<TrajectoryPoint>& trajectory() const { return trajectory_; }

  void mark(const std::string& tag);
  const std::vector<PhaseMark>& marks() const { return marks_; }

  // Chained hash over (a, b, outcome); equal iff the query streams match.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  ModelParams params_;
  Budget budget_;
  std::int64_t t_ = 0;
  std::int64_t n_bad_ = 0;
  std::int64_t discoveries_ = 0;
  std::vector<std::int32_t> per_node_;
  std::unordered_set<std::uint64_t> sampled_;
  std::uint64_t fingerprint_ = 0x243f6a8885a308d3ull;
  bool record_pairs_;
  std::vector<PairRecord> records_;
  std::int64_t trajectory_stride_ = 0;
  std::vector<TrajectoryPoint> trajectory_;
  std::vector<PhaseMark> marks_;
};

// Strategy-facing view: query outcomes, the strategy's own bookkeeping and the
// node universe it may touch. Doubling wrappers hand out per-epoch views with
// a restricted universe, a tighter node cap and an epoch query limit.
class QuerySession {
 public:
  QuerySession(const HiddenGraph& graph, QueryLedger& ledger);
  QuerySession(const HiddenGraph& graph, QueryLedger& ledger, std::vector<std::int64_t> universe,
               std::int64_t sizing_horizon, std::int64_t t_limit, std::int64_t node_cap);

  int query(std::int64_t a, std::int64_t b);
  bool sampled(std::int64_t a, std::int64_t b) const { return ledger_->sampled(a, b); }
  std::int64_t node_count(std::int64_t a) const { return ledger_->node_count(a); }
  bool node_available(std::int64_t a) const { return ledger_->node_count(a) < node_cap_; }

  std::int64_t t() const { return ledger_->t(); }
  std::int64_t remaining() const;
  // Horizon the strategy should size itself for (the epoch length under a
  // doubling wrapper, even when the global budget truncates the epoch).
  std::int64_t horizon() const { return sizing_horizon_; }
  std::int64_t node_cap() const { return node_cap_; }
  const std::vector<std::int64_t>& universe() const { return universe_; }
  std::int64_t n_total() const { return graph_->n(); }

  void mark(const std::string& tag) { ledger_->mark(tag); }
  QueryLedger& ledger() { return *ledger_; }
  const HiddenGraph& graph() const { return *graph_; }

 private:
  const HiddenGraph* graph_;
  QueryLedger* ledger_;
  std::vector<std::int64_t> universe_;
  std::int64_t sizing_horizon_;
  std::int64_t t_limit_;
  std::int64_t node_cap_;
};

// Exact mean number of between-community pairs after T uniform draws without
// replacement: T * (n/2) / (n-1). Exchangeability makes this exact for any T
// up to C(n,2).
double expected_random_regret(std::int64_t n, std::int64_t T);

}  // namespace pairmatch
