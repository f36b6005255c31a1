#include "pairmatch/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pairmatch/rng.hpp"

namespace pairmatch {

namespace {

// stream tags; every draw site gets its own derived seed
enum Stream : std::uint64_t {
  kStreamRandom = 1,
  kStreamKernel,
  kStreamKernelPairs,
  kStreamGoodclust,
  kStreamCandidateDraw,
  kStreamStep3,
  kStreamFallback,
  kStreamSelect,
  kStreamCompartments,
  kStreamScreen,
  kStreamEpoch,
  kStreamEstimate,
  kStreamEstimateNb,
};

constexpr std::int64_t kCensusLimit = std::int64_t{1} << 22;

StrategyOutcome finalize(QuerySession& session, StrategyOutcome out) {
  const QueryLedger& ledger = session.ledger();
  out.t = ledger.t();
  out.n_bad = ledger.n_bad();
  out.discoveries = ledger.discoveries();
  out.max_node_count = ledger.max_node_count();
  out.ledger_fingerprint = ledger.fingerprint();
  out.marks = ledger.marks();
  return out;
}

// Uniform sampling without replacement over admissible pairs (unsampled, both
// endpoints under the cap) inside `pool`. Samples until `count` pairs are
// taken, the session budget runs out, or no admissible pair remains. Exact
// uniformity: small pair spaces get a shuffled census walk (caps only tighten,
// so permanent skips keep the walk uniform over the admissible remainder);
// large ones use rejection sampling, escalating to an explicit census scan if
// rejections pile up near exhaustion.
std::int64_t sample_pool_pairs(QuerySession& session, Rng& rng,
                               const std::vector<std::int64_t>& pool, std::int64_t count) {
  const std::int64_t m = static_cast<std::int64_t>(pool.size());
  if (m < 2) return 0;
  const std::int64_t total = m * (m - 1) / 2;
  if (count < 0) count = session.remaining();
  count = std::min(count, session.remaining());
  std::int64_t done = 0;

  auto admissible = [&](std::int64_t a, std::int64_t b) {
    return session.node_available(a) && session.node_available(b) && !session.sampled(a, b);
  };

  auto census_walk = [&]() {
    std::vector<std::uint64_t> keys;
    keys.reserve(static_cast<std::size_t>(total));
    for (std::int64_t i = 0; i < m; ++i) {
      for (std::int64_t j = i + 1; j < m; ++j) {
        keys.push_back(static_cast<std::uint64_t>(i) << 32 | static_cast<std::uint64_t>(j));
      }
    }
    rng.shuffle(keys);
    for (std::uint64_t key : keys) {
      if (done >= count || session.remaining() <= 0) break;
      const std::int64_t a = pool[static_cast<std::size_t>(key >> 32)];
      const std::int64_t b = pool[static_cast<std::size_t>(key & 0xffffffffull)];
      if (!admissible(a, b)) continue;
      session.query(a, b);
      ++done;
    }
  };

  if (total <= kCensusLimit) {
    census_walk();
    return done;
  }

  int misses = 0;
  while (done < count && session.remaining() > 0) {
    const std::int64_t i = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m)));
    std::int64_t j = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m - 1)));
    if (j >= i) ++j;
    const std::int64_t a = pool[static_cast<std::size_t>(std::min(i, j))];
    const std::int64_t b = pool[static_cast<std::size_t>(std::max(i, j))];
    if (admissible(a, b)) {
      session.query(a, b);
      ++done;
      misses = 0;
      continue;
    }
    if (++misses >= 256) {
      // close to exhaustion; a census walk over what is left stays uniform
      census_walk();
      break;
    }
  }
  return done;
}

// Candidate state for the threshold-elimination phases.
struct Candidate {
  std::int64_t node = 0;
  std::int64_t sum = 0;
  std::int64_t cnt = 0;
  std::size_t next = 0;
  std::vector<std::int64_t> order;  // private shuffled draw order over the reference set
};

// Draw up to k reference nodes for candidate x, skipping (permanently)
// reference nodes that hit the cap; the candidate also stops when it hits its
// own cap. Returns false when the global budget ran out.
bool candidate_round(QuerySession& session, Candidate& c, std::int64_t k) {
  std::int64_t taken = 0;
  while (taken < k && c.next < c.order.size()) {
    if (!session.node_available(c.node)) break;
    const std::int64_t y = c.order[c.next];
    if (!session.node_available(y)) {
      ++c.next;
      continue;
    }
    if (session.remaining() <= 0) return false;
    ++c.next;
    c.sum += session.query(c.node, y);
    ++c.cnt;
    ++taken;
  }
  return true;
}

double candidate_mean(const Candidate& c) {
  return c.cnt > 0 ? static_cast<double>(c.sum) / static_cast<double>(c.cnt) : 0.0;
}

struct KernelStage {
  std::vector<std::int64_t> kernel;       // sorted
  std::vector<std::int8_t> est_labels;    // aligned with kernel
  double tau_hat = 0.0;
  bool truncated = false;
  bool degenerate = false;
};

// Shared Step 1: sample kernel pairs with the given probability, estimate the
// mean connectivity, and cluster the observed kernel graph.
KernelStage observe_kernel(QuerySession& session, const std::vector<std::int64_t>& kernel,
                           double pair_prob, std::uint64_t seed) {
  KernelStage stage;
  stage.kernel = kernel;
  const std::int32_t N = static_cast<std::int32_t>(kernel.size());

  ObservedGraph obs;
  obs.nodes = kernel;
  Rng pair_rng(derive_seed(seed, kStreamKernelPairs));
  std::int64_t observed = 0, edges = 0;
  for (std::int32_t i = 0; i < N && !stage.truncated; ++i) {
    for (std::int32_t j = i + 1; j < N; ++j) {
      if (!pair_rng.bernoulli(pair_prob)) continue;
      if (session.remaining() <= 0 || !session.node_available(kernel[i]) ||
          !session.node_available(kernel[j])) {
        stage.truncated = session.remaining() <= 0;
        if (stage.truncated) break;
        continue;
      }
      const int outcome = session.query(kernel[static_cast<std::size_t>(i)],
                                        kernel[static_cast<std::size_t>(j)]);
      obs.observations.push_back({i, j, static_cast<std::int8_t>(outcome)});
      ++observed;
      edges += outcome;
    }
  }
  stage.tau_hat = observed > 0 ? static_cast<double>(edges) / static_cast<double>(observed) : 0.0;

  if (edges > 0) {
    stage.est_labels = goodclust(obs, derive_seed(seed, kStreamGoodclust)).labels;
  } else {
    // no observed edge: arbitrary balanced split, flagged by the caller
    stage.degenerate = true;
    stage.est_labels.assign(static_cast<std::size_t>(N), 1);
    for (std::int32_t i = N / 2; i < N; ++i) stage.est_labels[static_cast<std::size_t>(i)] = 2;
  }
  return stage;
}

std::vector<std::int64_t> label1_nodes(const KernelStage& stage) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < stage.kernel.size(); ++i) {
    if (stage.est_labels[i] == 1) out.push_back(stage.kernel[i]);
  }
  return out;
}

}  // namespace

AlgoConstants AlgoConstants::paper_unconstrained() {
  return AlgoConstants{std::max(2.0, 1.0 / kGoodclustDecayRate), 2200.0, 4.0,
                       Mode::paper_unconstrained};
}

AlgoConstants AlgoConstants::paper_constrained() {
  return AlgoConstants{std::max(8.0, 1.0 / kGoodclustDecayRate), 2500.0, 1026.0,
                       Mode::paper_constrained};
}

AlgoConstants AlgoConstants::practical() {
  return AlgoConstants{2.0, 2.0, 4.0, Mode::practical};
}

StrategyOutcome run_random(QuerySession& session, std::uint64_t seed) {
  const std::vector<std::int64_t>& uni = session.universe();
  const std::int64_t nu = static_cast<std::int64_t>(uni.size());
  const std::int64_t want = session.remaining();
  if (want <= 0) return finalize(session, {});
  if (nu < 2 || want > nu * (nu - 1) / 2) {
    fail(Errc::feasibility, "random strategy: horizon exceeds the pair supply");
  }
  if (want > nu * session.node_cap() / 2) {
    fail(Errc::feasibility, "random strategy: horizon exceeds n * B_T / 2");
  }
  Rng rng(derive_seed(seed, kStreamRandom));
  sample_pool_pairs(session, rng, uni, -1);
  return finalize(session, {});
}

StrategyOutcome run_unconstrained(QuerySession& session, double s_input,
                                  const AlgoConstants& constants, std::uint64_t seed) {
  if (!(s_input > 0.0)) fail(Errc::invalid_params, "s_input must be positive");
  StrategyOutcome out;
  const std::int64_t T = session.horizon();
  if (T <= 0 || session.remaining() <= 0) return finalize(session, out);

  const double sqrtT = std::sqrt(static_cast<double>(T));
  if (std::log(s_input * sqrtT) <= 1.0) {
    // the staged formulas are degenerate here and the regret is linear anyway
    out = run_random(session, derive_seed(seed, kStreamFallback));
    out.early_exit = "small_signal";
    return out;
  }

  const double logsT = std::log(s_input * sqrtT);
  const std::int64_t N = static_cast<std::int64_t>(std::ceil(sqrtT / logsT));
  const std::int64_t a0_size = static_cast<std::int64_t>(std::ceil(8.0 * std::sqrt(2.0 * T)));
  const std::int64_t nu = static_cast<std::int64_t>(session.universe().size());
  if (N < 4 || N > nu || a0_size > nu - N) {
    fail(Errc::feasibility, "unconstrained strategy: kernel or candidate set does not fit in n");
  }

  // Step 1: cluster a kernel
  std::vector<std::int64_t> pool = session.universe();
  Rng node_rng(derive_seed(seed, kStreamKernel));
  node_rng.shuffle(pool);
  std::vector<std::int64_t> kernel(pool.begin(), pool.begin() + N);
  std::sort(kernel.begin(), kernel.end());

  const double kernel_pairs = 0.5 * static_cast<double>(N) * static_cast<double>(N - 1);
  const double pair_prob = std::min(1.0, constants.c_o0 * sqrtT / (s_input * kernel_pairs));
  KernelStage stage = observe_kernel(session, kernel, pair_prob, seed);
  out.kernel_nodes = stage.kernel;
  out.kernel_est_labels = stage.est_labels;
  out.tau_hat = stage.tau_hat;
  if (stage.degenerate) out.early_exit = "degenerate_kernel";
  session.mark("step1");
  if (stage.truncated) return finalize(session, out);

  // Step 2: expand the estimated community by threshold elimination
  std::vector<std::int64_t> a0(pool.begin() + N, pool.begin() + N + a0_size);
  std::sort(a0.begin(), a0.end());
  const std::vector<std::int64_t> reference = label1_nodes(stage);

  const std::int64_t k = static_cast<std::int64_t>(std::ceil(constants.c_k / s_input));
  const std::int64_t I =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(constants.c_i * logsT)));

  std::vector<Candidate> cands(a0.size());
  for (std::size_t i = 0; i < a0.size(); ++i) {
    cands[i].node = a0[i];
    cands[i].order = reference;
    Rng draw_rng(derive_seed(seed, kStreamCandidateDraw, static_cast<std::uint64_t>(a0[i])));
    draw_rng.shuffle(cands[i].order);
  }

  const bool tracing = session.ledger().recording();
  std::vector<std::size_t> active(cands.size());
  std::iota(active.begin(), active.end(), std::size_t{0});
  bool truncated = false;
  for (std::int64_t round = 1; round <= I && !truncated; ++round) {
    std::vector<std::size_t> next_active;
    next_active.reserve(active.size());
    for (std::size_t idx : active) {
      if (!candidate_round(session, cands[idx], k)) {
        truncated = true;
        break;
      }
      const double p_hat = candidate_mean(cands[idx]);
      const bool keep = p_hat >= stage.tau_hat;
      if (keep) next_active.push_back(idx);
      if (tracing) {
        out.elimination_trace.push_back(EliminationTraceEntry{
            cands[idx].node, static_cast<std::int32_t>(round), cands[idx].cnt, p_hat, keep});
      }
    }
    if (truncated) break;
    if (next_active.empty()) {
      active.clear();  // boxed break clause: the expanded set becomes empty
      break;
    }
    active.swap(next_active);
  }
  for (std::size_t idx : active) out.selected.push_back(cands[idx].node);
  std::sort(out.selected.begin(), out.selected.end());
  session.mark("step2");
  if (truncated) return finalize(session, out);

  // Step 3: pair inside the selected set, then fall back to random pairs
  if (out.selected.size() >= 2 && session.remaining() > 0) {
    Rng step3_rng(derive_seed(seed, kStreamStep3));
    sample_pool_pairs(session, step3_rng, out.selected, -1);
  }
  if (session.remaining() > 0) {
    Rng fb_rng(derive_seed(seed, kStreamFallback, 1));
    sample_pool_pairs(session, fb_rng, session.universe(), -1);
  }
  session.mark("step3");
  return finalize(session, out);
}

ScreeningResult screening(QuerySession& session, const std::vector<std::int64_t>& kernel,
                          std::int64_t n_prime, double cap_b, double nu,
                          std::vector<std::int64_t>& fresh, double s_input,
                          const AlgoConstants& constants, std::uint64_t seed) {
  if (kernel.empty()) fail(Errc::feasibility, "screening: empty reference kernel");
  if (n_prime < 1) fail(Errc::invalid_params, "screening: target size must be positive");
  if (4 * n_prime > static_cast<std::int64_t>(fresh.size())) {
    fail(Errc::feasibility, "screening: fresh node supply below 4 N'");
  }
  if (!(s_input > 0.0) || !(cap_b > 0.0)) fail(Errc::invalid_params, "screening: bad s or B");

  const std::int64_t k = static_cast<std::int64_t>(std::ceil(constants.c_k / s_input));
  const std::int64_t I = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(constants.c_i * std::log(s_input * cap_b))));
  // At desk scale the kernel can be smaller than k*I; a single compartment
  // with per-node cap guards replaces the boxed partition there.
  const std::int64_t m =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(kernel.size()) / (k * I));

  ScreeningResult result;
  result.compartments = m;
  Rng rng(derive_seed(seed, kStreamCompartments));

  std::vector<std::int64_t> kcopy = kernel;
  rng.shuffle(kcopy);
  const std::int64_t block = m > 1 ? k * I : static_cast<std::int64_t>(kcopy.size());

  // candidates: 4 N' fresh nodes, removed from the caller's pool
  const std::int64_t a0_size = 4 * n_prime;
  rng.partial_shuffle(fresh, static_cast<std::size_t>(a0_size));
  std::vector<std::int64_t> a0(fresh.begin(), fresh.begin() + a0_size);
  fresh.erase(fresh.begin(), fresh.begin() + a0_size);
  std::sort(a0.begin(), a0.end());

  const bool tracing = session.ledger().recording();
  const std::int64_t base = a0_size / m;
  const std::int64_t extra = a0_size % m;
  std::int64_t consumed = 0;
  std::vector<std::int64_t> survivors;

  for (std::int64_t j = 0; j < m && !result.truncated; ++j) {
    const std::int64_t part = base + (j < extra ? 1 : 0);
    std::vector<Candidate> cands(static_cast<std::size_t>(part));
    const std::size_t block_begin = static_cast<std::size_t>(std::min<std::int64_t>(
        j * block, static_cast<std::int64_t>(kcopy.size())));
    const std::size_t block_end = static_cast<std::size_t>(std::min<std::int64_t>(
        (j + 1) * block, static_cast<std::int64_t>(kcopy.size())));
    const std::vector<std::int64_t> compartment(kcopy.begin() + block_begin,
                                                kcopy.begin() + block_end);
    for (std::int64_t c = 0; c < part; ++c) {
      auto& cand = cands[static_cast<std::size_t>(c)];
      cand.node = a0[static_cast<std::size_t>(consumed + c)];
      cand.order = compartment;
      Rng draw_rng(derive_seed(seed, kStreamCandidateDraw, static_cast<std::uint64_t>(cand.node)));
      draw_rng.shuffle(cand.order);
    }
    consumed += part;

    std::vector<std::size_t> active(cands.size());
    std::iota(active.begin(), active.end(), std::size_t{0});
    for (std::int64_t round = 1; round <= I && !active.empty(); ++round) {
      std::vector<std::size_t> next_active;
      next_active.reserve(active.size());
      for (std::size_t idx : active) {
        if (!candidate_round(session, cands[idx], k)) {
          result.truncated = true;
          break;
        }
        const double p_hat = candidate_mean(cands[idx]);
        const bool keep = p_hat >= nu;
        if (keep) next_active.push_back(idx);
        if (tracing) {
          result.trace.push_back(EliminationTraceEntry{
              cands[idx].node, static_cast<std::int32_t>(round), cands[idx].cnt, p_hat, keep});
        }
      }
      if (result.truncated) break;
      active.swap(next_active);
    }
    for (std::size_t idx : active) survivors.push_back(cands[idx].node);
  }

  if (static_cast<std::int64_t>(survivors.size()) >= n_prime) {
    rng.partial_shuffle(survivors, static_cast<std::size_t>(n_prime));
    survivors.resize(static_cast<std::size_t>(n_prime));
  } else {
    // boxed fallback: too few survivors, draw the target from the candidates
    result.fallback_used = true;
    survivors = a0;
    rng.partial_shuffle(survivors, static_cast<std::size_t>(n_prime));
    survivors.resize(static_cast<std::size_t>(n_prime));
  }
  std::sort(survivors.begin(), survivors.end());
  result.selected = std::move(survivors);
  return result;
}

StrategyOutcome run_constrained(QuerySession& session, double s_input,
                                const AlgoConstants& constants, std::uint64_t seed) {
  if (!(s_input > 0.0)) fail(Errc::invalid_params, "s_input must be positive");
  StrategyOutcome out;
  const std::int64_t T = session.horizon();
  if (T <= 0 || session.remaining() <= 0) return finalize(session, out);

  const double sqrtT = std::sqrt(static_cast<double>(T));
  const std::int64_t cap = session.node_cap();
  if (static_cast<double>(cap) >= 17.0 * sqrtT) {
    // the unconstrained strategy structurally satisfies this cap
    out = run_unconstrained(session, s_input, constants, seed);
    out.delegated_to_unconstrained = true;
    return out;
  }

  const double B = std::min(static_cast<double>(cap), sqrtT) / 2.0;
  if (!(std::log(s_input * B) > 1.0)) {
    out = run_random(session, derive_seed(seed, kStreamFallback));
    out.early_exit = "small_signal";
    return out;
  }

  const double logsB = std::log(s_input * B);
  const std::int64_t n_init = static_cast<std::int64_t>(std::ceil(B / logsB));
  const std::int64_t nu = static_cast<std::int64_t>(session.universe().size());
  if (n_init < 4) {
    out = run_random(session, derive_seed(seed, kStreamFallback));
    out.early_exit = "small_signal";
    return out;
  }
  if (n_init > nu) fail(Errc::feasibility, "constrained strategy: kernel does not fit in n");

  // Step 1
  std::vector<std::int64_t> pool = session.universe();
  Rng node_rng(derive_seed(seed, kStreamKernel));
  node_rng.shuffle(pool);
  std::vector<std::int64_t> kernel(pool.begin(), pool.begin() + n_init);
  std::sort(kernel.begin(), kernel.end());
  std::vector<std::int64_t> fresh(pool.begin() + n_init, pool.end());

  const double kernel_pairs = 0.5 * static_cast<double>(n_init) * static_cast<double>(n_init - 1);
  const double pair_prob = std::min(1.0, constants.c_o0 * (B / s_input) / kernel_pairs);
  KernelStage stage = observe_kernel(session, kernel, pair_prob, seed);
  out.kernel_nodes = stage.kernel;
  out.kernel_est_labels = stage.est_labels;
  out.tau_hat = stage.tau_hat;
  if (stage.degenerate) out.early_exit = "degenerate_kernel";
  session.mark("step1");

  // Step 2: iterated screening on the geometric schedule
  const std::int64_t n0 = (n_init + 1) / 2;
  std::vector<std::int64_t> current = label1_nodes(stage);
  Rng sel_rng(derive_seed(seed, kStreamSelect));
  sel_rng.partial_shuffle(current, static_cast<std::size_t>(std::min<std::int64_t>(
                                       n0, static_cast<std::int64_t>(current.size()))));
  current.resize(static_cast<std::size_t>(std::min<std::int64_t>(
      n0, static_cast<std::int64_t>(current.size()))));
  std::sort(current.begin(), current.end());

  // growth floor(log(sB)) degenerates below 2; the schedule must grow
  const std::int64_t growth =
      std::max<std::int64_t>(2, static_cast<std::int64_t>(std::floor(logsB)));
  const std::int64_t target = static_cast<std::int64_t>(std::ceil(static_cast<double>(T) / B));
  std::int64_t t_f = static_cast<std::int64_t>(std::ceil(
      std::log(static_cast<double>(target) / static_cast<double>(n0)) /
      std::log(static_cast<double>(growth))));
  if (t_f < 1) t_f = 1;

  if (!stage.truncated) {
    std::int64_t schedule = n0;
    for (std::int64_t step = 1; step <= t_f; ++step) {
      schedule = std::min(target, schedule * growth);
      if (4 * schedule > static_cast<std::int64_t>(fresh.size())) {
        out.early_exit = "node_supply";
        break;
      }
      if (session.remaining() <= 0 || current.empty()) break;
      ScreeningResult res =
          screening(session, current, schedule, B, stage.tau_hat, fresh, s_input, constants,
                    derive_seed(seed, kStreamScreen, static_cast<std::uint64_t>(step)));
      for (auto& e : res.trace) out.elimination_trace.push_back(e);
      current = res.selected;
      if (res.truncated) break;
    }
  }
  out.selected = current;
  session.mark("step2");

  // Step 3: capped round-robin pairing inside the final set
  bool budget_left = session.remaining() > 0;
  for (std::int64_t offset = 1; budget_left && offset < static_cast<std::int64_t>(current.size());
       ++offset) {
    for (std::int64_t i = 0; i + offset < static_cast<std::int64_t>(current.size()); ++i) {
      if (session.remaining() <= 0) {
        budget_left = false;
        break;
      }
      const std::int64_t a = current[static_cast<std::size_t>(i)];
      const std::int64_t b = current[static_cast<std::size_t>(i + offset)];
      if (!session.node_available(a) || !session.node_available(b) || session.sampled(a, b)) {
        continue;
      }
      session.query(a, b);
    }
  }

  if (session.remaining() > 0) {
    // random pairs among untouched nodes, then any admissible pair
    std::vector<std::int64_t> untouched;
    for (std::int64_t a : session.universe()) {
      if (session.node_count(a) == 0) untouched.push_back(a);
    }
    Rng fb_rng(derive_seed(seed, kStreamFallback, 2));
    sample_pool_pairs(session, fb_rng, untouched, -1);
    if (session.remaining() > 0) sample_pool_pairs(session, fb_rng, session.universe(), -1);
  }
  session.mark("step3");
  return finalize(session, out);
}

std::int64_t pathwise_cap(std::int64_t t, double gamma, double tau) {
  if (t < 3) return 1;
  const double v = std::pow(static_cast<double>(t), gamma) /
                   std::pow(std::log(static_cast<double>(t)), tau);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(v)));
}

namespace {

// Smallest pathwise cap over all t >= t_from. B_t decreases until
// t* = exp(tau/gamma) and increases afterwards, so the future minimum sits at
// t_from or near t*.
std::int64_t future_min_cap(std::int64_t t_from, double gamma, double tau) {
  std::int64_t best = pathwise_cap(std::max<std::int64_t>(1, t_from), gamma, tau);
  if (t_from < 3) best = 1;
  const double t_star = tau > 0.0 ? std::exp(tau / gamma) : 1.0;
  for (std::int64_t cand :
       {static_cast<std::int64_t>(std::floor(t_star)), static_cast<std::int64_t>(std::ceil(t_star))}) {
    if (cand >= t_from && cand >= 3) best = std::min(best, pathwise_cap(cand, gamma, tau));
  }
  return std::max<std::int64_t>(1, best);
}

}  // namespace

StrategyOutcome run_doubling(QuerySession& session, double s_input, DoublingMode mode,
                             double gamma, double tau, const AlgoConstants& constants,
                             std::uint64_t seed) {
  if (mode == DoublingMode::pathwise) {
    if (!(gamma > 0.0) || gamma > 0.5 || tau < 0.0) {
      fail(Errc::invalid_params, "pathwise doubling needs gamma in (0, 1/2] and tau >= 0");
    }
  }
  StrategyOutcome out;
  if (session.horizon() <= 0 || session.remaining() <= 0) return finalize(session, out);

  for (int epoch = 0; session.remaining() > 0; ++epoch) {
    const std::int64_t h_full = std::int64_t{1} << epoch;
    const std::int64_t t_begin = session.t();

    std::vector<std::int64_t> untouched;
    for (std::int64_t a : session.universe()) {
      if (session.node_count(a) == 0) untouched.push_back(a);
    }
    if (untouched.size() < 2) {
      fail(Errc::feasibility, "doubling: node supply exhausted across epochs");
    }

    std::int64_t cap;
    if (mode == DoublingMode::pathwise) {
      cap = future_min_cap(t_begin + 1, gamma, tau);
    } else {
      cap = std::min<std::int64_t>(static_cast<std::int64_t>(untouched.size()) - 1,
                                   std::max<std::int64_t>(h_full, 1));
    }

    QuerySession epoch_session(session.graph(), session.ledger(), std::move(untouched), h_full,
                               session.t() + h_full, cap);
    const std::uint64_t epoch_seed = derive_seed(seed, kStreamEpoch, static_cast<std::uint64_t>(epoch));
    StrategyOutcome sub;
    try {
      if (mode == DoublingMode::pathwise) {
        sub = run_constrained(epoch_session, s_input, constants, epoch_seed);
      } else {
        sub = run_unconstrained(epoch_session, s_input, constants, epoch_seed);
      }
    } catch (const Error& e) {
      if (e.code() == Errc::feasibility) {
        fail(Errc::feasibility,
             std::string("doubling: node supply exhausted across epochs (") + e.what() + ")");
      }
      throw;
    }
    out.epoch_ranges.emplace_back(t_begin, session.t());
    if (session.t() == t_begin) {
      fail(Errc::feasibility, "doubling: epoch made no progress");
    }
    session.mark("epoch_end");
  }
  return finalize(session, out);
}

SEstimate estimate_s(QuerySession& session, std::int64_t max_nodes, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kStreamEstimate));
  std::vector<std::int64_t> pool;
  for (std::int64_t a : session.universe()) {
    if (session.node_count(a) == 0) pool.push_back(a);
  }
  rng.shuffle(pool);

  const std::int64_t t0 = session.t();
  std::size_t consumed = 0;
  std::int64_t drawn = 0;
  for (int k = 1;; ++k) {
    const std::int64_t need = std::int64_t{1} << k;
    if (drawn + need > max_nodes) {
      throw NoDetectionError(session.t() - t0, "node budget exhausted before detection");
    }
    if (consumed + static_cast<std::size_t>(need) > pool.size()) {
      throw NoDetectionError(session.t() - t0, "untouched node supply exhausted before detection");
    }
    ObservedGraph obs;
    obs.nodes.assign(pool.begin() + static_cast<std::ptrdiff_t>(consumed),
                     pool.begin() + static_cast<std::ptrdiff_t>(consumed + need));
    consumed += static_cast<std::size_t>(need);
    drawn += need;
    std::sort(obs.nodes.begin(), obs.nodes.end());

    for (std::int32_t i = 0; i < need; ++i) {
      for (std::int32_t j = i + 1; j < need; ++j) {
        const int outcome = session.query(obs.nodes[static_cast<std::size_t>(i)],
                                          obs.nodes[static_cast<std::size_t>(j)]);
        obs.observations.push_back({i, j, static_cast<std::int8_t>(outcome)});
      }
    }
    if (obs.present_edges() == 0) continue;  // degenerate step: keep walking

    const NBSpectrum spec =
        nb_spectrum(obs, derive_seed(seed, kStreamEstimateNb, static_cast<std::uint64_t>(k)));
    if (spec.lambda2_mod * spec.lambda2_mod > spec.lambda1) {
      SEstimate result;
      result.k_hat = k;
      result.nodes_used = drawn;
      result.queries_used = session.t() - t0;
      result.last_graph_pairs = need * (need - 1) / 2;
      result.lambda1 = spec.lambda1;
      result.lambda2_mod = spec.lambda2_mod;
      result.s_hat =
          2.0 * spec.lambda2_mod * spec.lambda2_mod / (static_cast<double>(need) * spec.lambda1);
      return result;
    }
  }
}

}  // namespace pairmatch
