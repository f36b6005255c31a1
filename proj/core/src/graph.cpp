#include "pairmatch/graph.hpp"

#include <algorithm>
#include <numeric>

namespace pairmatch {

namespace {

inline std::uint64_t pair_key(std::int64_t a, std::int64_t b) {
  const std::uint64_t lo = static_cast<std::uint64_t>(std::min(a, b));
  const std::uint64_t hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

}  // namespace

HiddenGraph::HiddenGraph(const ModelParams& params, std::uint64_t seed)
    : params_(params), seed_(seed) {
  ModelParams::from_rates(params.n, params.p, params.q);  // revalidate
  labels_.assign(static_cast<std::size_t>(params.n), 1);
  for (std::int64_t i = params.n / 2; i < params.n; ++i) {
    labels_[static_cast<std::size_t>(i)] = 2;
  }
  // uniform balanced partition
  Rng rng(derive_seed(seed, 0x6c6162656cull));
  rng.shuffle(labels_);
}

int HiddenGraph::edge(std::int64_t a, std::int64_t b) const {
  if (a == b || a < 0 || b < 0 || a >= params_.n || b >= params_.n) {
    fail(Errc::invalid_pair, "edge query needs two distinct nodes in range");
  }
  const std::uint64_t lo = static_cast<std::uint64_t>(std::min(a, b));
  const std::uint64_t hi = static_cast<std::uint64_t>(std::max(a, b));
  const double prob = is_bad_pair(a, b) ? params_.q : params_.p;
  return pair_uniform(seed_, lo, hi) < prob ? 1 : 0;
}

QueryLedger::QueryLedger(const ModelParams& params, Budget budget, bool record_pairs,
                         int trajectory_points)
    : params_(params), budget_(budget), record_pairs_(record_pairs) {
  budget.validate_against(params);
  per_node_.assign(static_cast<std::size_t>(params.n), 0);
  sampled_.reserve(static_cast<std::size_t>(std::min<std::int64_t>(budget.horizon, 1 << 22)) * 2);
  if (record_pairs_) records_.reserve(static_cast<std::size_t>(std::min<std::int64_t>(budget.horizon, 1 << 22)));
  if (trajectory_points > 0) {
    trajectory_stride_ = std::max<std::int64_t>(1, budget.horizon / trajectory_points);
    trajectory_.reserve(static_cast<std::size_t>(budget.horizon / trajectory_stride_ + 1));
  }
}

int QueryLedger::query(const HiddenGraph& graph, std::int64_t a, std::int64_t b) {
  if (a == b || a < 0 || b < 0 || a >= params_.n || b >= params_.n) {
    fail(Errc::invalid_pair, "query needs two distinct nodes in 0..n-1");
  }
  if (t_ >= budget_.horizon) fail(Errc::horizon_exhausted, "query past the horizon T");
  const std::uint64_t key = pair_key(a, b);
  if (sampled_.count(key)) fail(Errc::nr_violation, "pair sampled twice");
  if (per_node_[static_cast<std::size_t>(a)] >= budget_.node_cap ||
      per_node_[static_cast<std::size_t>(b)] >= budget_.node_cap) {
    fail(Errc::sps_violation, "node over its B_T cap");
  }

  const int outcome = graph.edge(a, b);
  const bool bad = graph.is_bad_pair(a, b);
  sampled_.insert(key);
  ++per_node_[static_cast<std::size_t>(a)];
  ++per_node_[static_cast<std::size_t>(b)];
  ++t_;
  n_bad_ += bad ? 1 : 0;
  discoveries_ += outcome;
  fingerprint_ = mix64(fingerprint_ ^ (key * 2 + static_cast<std::uint64_t>(outcome)));
  if (record_pairs_) {
    records_.push_back(PairRecord{static_cast<std::int32_t>(std::min(a, b)),
                                  static_cast<std::int32_t>(std::max(a, b)),
                                  static_cast<std::int8_t>(outcome),
                                  static_cast<std::int8_t>(bad ? 1 : 0)});
  }
  if (trajectory_stride_ > 0 && t_ % trajectory_stride_ == 0) {
    trajectory_.push_back(TrajectoryPoint{t_, n_bad_, discoveries_});
  }
  return outcome;
}

bool QueryLedger::sampled(std::int64_t a, std::int64_t b) const {
  return sampled_.count(pair_key(a, b)) != 0;
}

std::int64_t QueryLedger::max_node_count() const {
  std::int32_t m = 0;
  for (std::int32_t c : per_node_) m = std::max(m, c);
  return m;
}

void QueryLedger::mark(const std::string& tag) {
  marks_.push_back(PhaseMark{tag, t_, n_bad_, discoveries_});
}

QuerySession::QuerySession(const HiddenGraph& graph, QueryLedger& ledger)
    : graph_(&graph), ledger_(&ledger), sizing_horizon_(ledger.budget().horizon),
      t_limit_(ledger.budget().horizon), node_cap_(ledger.budget().node_cap) {
  universe_.resize(static_cast<std::size_t>(graph.n()));
  std::iota(universe_.begin(), universe_.end(), 0);
}

QuerySession::QuerySession(const HiddenGraph& graph, QueryLedger& ledger,
                           std::vector<std::int64_t> universe, std::int64_t sizing_horizon,
                           std::int64_t t_limit, std::int64_t node_cap)
    : graph_(&graph), ledger_(&ledger), universe_(std::move(universe)),
      sizing_horizon_(sizing_horizon), t_limit_(std::min(t_limit, ledger.budget().horizon)),
      node_cap_(std::min(node_cap, ledger.budget().node_cap)) {}

int QuerySession::query(std::int64_t a, std::int64_t b) {
  if (ledger_->t() >= t_limit_) fail(Errc::horizon_exhausted, "query past the session limit");
  if (node_cap_ < ledger_->budget().node_cap &&
      (ledger_->node_count(a) >= node_cap_ || ledger_->node_count(b) >= node_cap_)) {
    fail(Errc::sps_violation, "node over the session cap");
  }
  return ledger_->query(*graph_, a, b);
}

std::int64_t QuerySession::remaining() const {
  return std::max<std::int64_t>(0, t_limit_ - ledger_->t());
}

double expected_random_regret(std::int64_t n, std::int64_t T) {
  if (n < 2 || n % 2 != 0) fail(Errc::invalid_params, "n must be even and >= 2");
  if (T < 0 || T > n * (n - 1) / 2) fail(Errc::invalid_params, "need 0 <= T <= C(n,2)");
  return static_cast<double>(T) * (static_cast<double>(n) / 2.0) / static_cast<double>(n - 1);
}

}  // namespace pairmatch
