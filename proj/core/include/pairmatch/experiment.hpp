#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairmatch/model.hpp"
#include "pairmatch/strategies.hpp"

namespace pairmatch {

// Flat key=value configuration with [section] headers. Unknown sections or
// keys are errors; parse -> serialize -> parse is the identity.
struct ExperimentConfig {
  // [model] either (p, q) or (s, alpha)
  std::int64_t n = 0;
  double p = 0.0;
  double q = 0.0;

  // [strategy]
  std::string strategy = "random";  // random|unconstrained|constrained|doubling
  std::string constants = "practical";  // practical|paper
  double c_o0_override = 0.0;           // >0 replaces the mode value
  double c_k_override = 0.0;
  double c_i_override = 0.0;
  double s_input = 0.0;  // <= 0 means "auto": use the instance value
  std::string doubling_mode = "unconstrained";  // unconstrained|pathwise
  double gamma = 0.4;
  double tau = 0.0;

  // [budget]
  std::vector<std::int64_t> horizons;  // T grid
  enum class CapRule { fixed, pow, pathwise, unbounded } cap_rule = CapRule::unbounded;
  std::int64_t cap_fixed = 0;
  double cap_gamma = 0.5;
  double cap_tau = 0.0;

  // [run]
  std::int64_t replications = 1;
  std::uint64_t base_seed = 1;
  int jobs = 1;
  bool record_trajectory = false;
  bool dump_ledger = false;
  std::string out = "sweep.csv";

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  std::string serialize() const;

  ModelParams model() const { return ModelParams::from_rates(n, p, q); }
  double effective_s() const { return s_input > 0.0 ? s_input : model().s(); }
  std::int64_t cap_for(std::int64_t T) const;  // resolved B_T for a grid cell
  AlgoConstants algo_constants() const;
};

struct RepResult {
  std::int64_t n_bad = 0;
  std::int64_t discoveries = 0;
  std::int64_t t = 0;
  std::int64_t max_node_count = 0;
  std::uint64_t fingerprint = 0;
};

struct CellResult {
  std::int64_t T = 0;
  std::int64_t B_T = 0;
  std::vector<RepResult> reps;
  double mean_nbad = 0.0;
  double std_nbad = 0.0;   // sample stddev
  double q10_nbad = 0.0;   // nearest-rank quantiles
  double q90_nbad = 0.0;
  double mean_discoveries = 0.0;
  double lb_theorem = 0.0;
  double lb_strong_kl = 0.0;
};

struct AggregateResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;  // ascending T
};

// Per-replication seed: derive_seed(base_seed, cell_index, rep_index); the
// graph then uses derive_seed(rep_seed, 1) and the strategy
// derive_seed(rep_seed, 2). Stable across runs and job counts.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t cell_index,
                               std::size_t rep_index);

// Runs replications x grid independent simulations (worker pool of
// config.jobs threads; results land in per-replication slots, so aggregation
// is independent of scheduling) and aggregates per cell. Every cell is
// feasibility-checked before any run.
AggregateResult run_experiment(const ExperimentConfig& config);

// Runs a single replication and returns the full strategy outcome (used by
// the CLI for ledger dumps and by tests).
StrategyOutcome run_single(const ExperimentConfig& config, std::size_t cell_index,
                           std::size_t rep_index, QueryLedger* ledger_out = nullptr);

struct ExponentFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  int points = 0;
};

// OLS slope of log mean_nbad against log T over cells with T > T_min_cut and
// positive mean; needs at least 3 usable points.
ExponentFit fit_exponent(const AggregateResult& result, std::int64_t T_min_cut);

// CSV schema:
// T,B_T,strategy,reps,mean_nbad,std_nbad,q10_nbad,q90_nbad,mean_discoveries,
// lb_theorem,lb_strong_kl,s,n,p,q,seed
// UTF-8, LF endings, one row per cell in ascending T.
void emit_csv(const AggregateResult& result, const std::string& path);
std::string render_csv(const AggregateResult& result);

// Ledger dump: t,node_a,node_b,outcome,is_bad
void write_ledger_csv(const QueryLedger& ledger, const std::string& path);

// Deterministic shortest-round-trip-ish float formatting used everywhere CSV
// bytes must be reproducible.
std::string format_double(double x);

}  // namespace pairmatch
