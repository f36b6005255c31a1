#include "pairmatch/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "pairmatch/graph.hpp"
#include "pairmatch/rng.hpp"

namespace pairmatch {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_num(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) fail(Errc::config, "bad number for " + key + ": '" + v + "'");
    return x;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(Errc::config, "bad number for " + key + ": '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& v, const std::string& key) {
  const double x = parse_num(v, key);
  if (x != std::floor(x)) fail(Errc::config, key + " must be an integer, got '" + v + "'");
  return static_cast<std::int64_t>(x);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(Errc::config, key + " must be true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  double s_val = 0.0, alpha_val = 0.0;
  bool have_pq = false, have_salpha = false;

  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail(Errc::config, "malformed section header: " + t);
      section = t.substr(1, t.size() - 2);
      if (section != "model" && section != "strategy" && section != "budget" &&
          section != "run") {
        fail(Errc::config, "unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      fail(Errc::config, "expected key = value at line " + std::to_string(lineno));
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (section == "model") {
      if (key == "n") cfg.n = parse_int(val, qual);
      else if (key == "p") { cfg.p = parse_num(val, qual); have_pq = true; }
      else if (key == "q") { cfg.q = parse_num(val, qual); have_pq = true; }
      else if (key == "s") { s_val = parse_num(val, qual); have_salpha = true; }
      else if (key == "alpha") { alpha_val = parse_num(val, qual); have_salpha = true; }
      else fail(Errc::config, "unknown key " + qual);
    } else if (section == "strategy") {
      if (key == "name") cfg.strategy = val;
      else if (key == "constants") cfg.constants = val;
      else if (key == "c_o0") cfg.c_o0_override = parse_num(val, qual);
      else if (key == "c_k") cfg.c_k_override = parse_num(val, qual);
      else if (key == "c_i") cfg.c_i_override = parse_num(val, qual);
      else if (key == "s_input") cfg.s_input = val == "auto" ? 0.0 : parse_num(val, qual);
      else if (key == "doubling_mode") cfg.doubling_mode = val;
      else if (key == "gamma") cfg.gamma = parse_num(val, qual);
      else if (key == "tau") cfg.tau = parse_num(val, qual);
      else fail(Errc::config, "unknown key " + qual);
    } else if (section == "budget") {
      if (key == "T") {
        cfg.horizons.clear();
        for (const std::string& item : split_list(val)) {
          cfg.horizons.push_back(parse_int(item, qual));
        }
      } else if (key == "cap") {
        if (val == "unbounded") cfg.cap_rule = CapRule::unbounded;
        else if (val.rfind("fixed:", 0) == 0) {
          cfg.cap_rule = CapRule::fixed;
          cfg.cap_fixed = parse_int(val.substr(6), qual);
        } else if (val.rfind("pow:", 0) == 0) {
          cfg.cap_rule = CapRule::pow;
          cfg.cap_gamma = parse_num(val.substr(4), qual);
        } else if (val.rfind("pathwise:", 0) == 0) {
          cfg.cap_rule = CapRule::pathwise;
          const auto parts = split_list(val.substr(9));
          if (parts.size() != 2) fail(Errc::config, "cap pathwise:<gamma>,<tau>");
          cfg.cap_gamma = parse_num(parts[0], qual);
          cfg.cap_tau = parse_num(parts[1], qual);
        } else {
          fail(Errc::config, "unknown cap rule '" + val + "'");
        }
      } else {
        fail(Errc::config, "unknown key " + qual);
      }
    } else if (section == "run") {
      if (key == "replications") cfg.replications = parse_int(val, qual);
      else if (key == "base_seed") cfg.base_seed = static_cast<std::uint64_t>(parse_int(val, qual));
      else if (key == "jobs") cfg.jobs = static_cast<int>(parse_int(val, qual));
      else if (key == "record_trajectory") cfg.record_trajectory = parse_bool(val, qual);
      else if (key == "dump_ledger") cfg.dump_ledger = parse_bool(val, qual);
      else if (key == "out") cfg.out = val;
      else fail(Errc::config, "unknown key " + qual);
    } else {
      fail(Errc::config, "key outside of a section: " + key);
    }
  }

  if (have_salpha) {
    if (have_pq) fail(Errc::config, "[model] takes either (p, q) or (s, alpha), not both");
    const ModelParams m = ModelParams::from_scaling(cfg.n, s_val, alpha_val);
    cfg.p = m.p;
    cfg.q = m.q;
  }
  // validate eagerly so config errors surface before any run
  (void)cfg.model();
  if (cfg.horizons.empty()) fail(Errc::config, "[budget] needs a T grid");
  for (std::int64_t T : cfg.horizons) {
    if (T < 0) fail(Errc::config, "negative T in grid");
  }
  if (cfg.replications < 1) fail(Errc::config, "replications must be >= 1");
  if (cfg.jobs < 1) fail(Errc::config, "jobs must be >= 1");
  if (cfg.strategy != "random" && cfg.strategy != "unconstrained" &&
      cfg.strategy != "constrained" && cfg.strategy != "doubling") {
    fail(Errc::config, "unknown strategy '" + cfg.strategy + "'");
  }
  if (cfg.constants != "practical" && cfg.constants != "paper") {
    fail(Errc::config, "constants must be practical or paper");
  }
  if (cfg.doubling_mode != "unconstrained" && cfg.doubling_mode != "pathwise") {
    fail(Errc::config, "doubling_mode must be unconstrained or pathwise");
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream os;
  os << "[model]\n";
  os << "n = " << n << "\n";
  os << "p = " << format_double(p) << "\n";
  os << "q = " << format_double(q) << "\n";
  os << "[strategy]\n";
  os << "name = " << strategy << "\n";
  os << "constants = " << constants << "\n";
  if (c_o0_override > 0.0) os << "c_o0 = " << format_double(c_o0_override) << "\n";
  if (c_k_override > 0.0) os << "c_k = " << format_double(c_k_override) << "\n";
  if (c_i_override > 0.0) os << "c_i = " << format_double(c_i_override) << "\n";
  os << "s_input = " << (s_input > 0.0 ? format_double(s_input) : std::string("auto")) << "\n";
  os << "doubling_mode = " << doubling_mode << "\n";
  os << "gamma = " << format_double(gamma) << "\n";
  os << "tau = " << format_double(tau) << "\n";
  os << "[budget]\n";
  os << "T = ";
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (i) os << ", ";
    os << horizons[i];
  }
  os << "\n";
  os << "cap = ";
  switch (cap_rule) {
    case CapRule::unbounded: os << "unbounded"; break;
    case CapRule::fixed: os << "fixed:" << cap_fixed; break;
    case CapRule::pow: os << "pow:" << format_double(cap_gamma); break;
    case CapRule::pathwise:
      os << "pathwise:" << format_double(cap_gamma) << "," << format_double(cap_tau);
      break;
  }
  os << "\n";
  os << "[run]\n";
  os << "replications = " << replications << "\n";
  os << "base_seed = " << base_seed << "\n";
  os << "jobs = " << jobs << "\n";
  os << "record_trajectory = " << (record_trajectory ? "true" : "false") << "\n";
  os << "dump_ledger = " << (dump_ledger ? "true" : "false") << "\n";
  os << "out = " << out << "\n";
  return os.str();
}

std::int64_t ExperimentConfig::cap_for(std::int64_t T) const {
  switch (cap_rule) {
    case CapRule::unbounded:
      return std::min<std::int64_t>(n - 1, std::max<std::int64_t>(T, 1));
    case CapRule::fixed:
      return cap_fixed;
    case CapRule::pow:
      return std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(T), cap_gamma))));
    case CapRule::pathwise:
      return pathwise_cap(std::max<std::int64_t>(T, 1), cap_gamma, cap_tau);
  }
  return 1;
}

AlgoConstants ExperimentConfig::algo_constants() const {
  AlgoConstants k;
  if (constants == "paper") {
    const bool budgeted =
        strategy == "constrained" || (strategy == "doubling" && doubling_mode == "pathwise");
    k = budgeted ? AlgoConstants::paper_constrained() : AlgoConstants::paper_unconstrained();
  } else {
    k = AlgoConstants::practical();
  }
  if (c_o0_override > 0.0) k.c_o0 = c_o0_override;
  if (c_k_override > 0.0) k.c_k = c_k_override;
  if (c_i_override > 0.0) k.c_i = c_i_override;
  return k;
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t cell_index,
                               std::size_t rep_index) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(cell_index),
                     static_cast<std::uint64_t>(rep_index), 0x726570ull);
}

namespace {

void preflight_cell(const ExperimentConfig& cfg, std::int64_t T, std::int64_t B_T) {
  const auto cell = [&] {
    return "cell T=" + std::to_string(T) + " B_T=" + std::to_string(B_T);
  };
  const ModelParams m = cfg.model();
  if (T > m.total_pairs()) fail(Errc::config, cell() + ": T exceeds C(n,2)");
  if (T > m.n * B_T / 2) fail(Errc::config, cell() + ": T exceeds n*B_T/2 capacity");
  const double s = cfg.effective_s();
  if (cfg.strategy == "unconstrained") {
    const double sqrtT = std::sqrt(static_cast<double>(T));
    if (T > 0 && std::log(s * sqrtT) > 1.0) {
      const double logsT = std::log(s * sqrtT);
      const std::int64_t N = static_cast<std::int64_t>(std::ceil(sqrtT / logsT));
      const std::int64_t a0 = static_cast<std::int64_t>(std::ceil(8.0 * std::sqrt(2.0 * T)));
      if (N > m.n || a0 > m.n - N) {
        fail(Errc::config, cell() + ": kernel or candidate set does not fit in n");
      }
    }
    if (T > m.good_pairs()) fail(Errc::config, cell() + ": T exceeds the good-pair horizon");
  }
  if (cfg.strategy == "constrained") {
    if (T > m.good_pairs()) fail(Errc::config, cell() + ": T exceeds the good-pair horizon");
    const double sqrtT = std::sqrt(static_cast<double>(T));
    if (static_cast<double>(B_T) < 17.0 * sqrtT) {
      const double B = std::min(static_cast<double>(B_T), sqrtT) / 2.0;
      if (std::log(s * B) > 1.0) {
        const std::int64_t n_init =
            static_cast<std::int64_t>(std::ceil(B / std::log(s * B)));
        if (n_init > m.n) fail(Errc::config, cell() + ": kernel does not fit in n");
      }
    }
  }
}

RepResult to_rep_result(const StrategyOutcome& out) {
  RepResult r;
  r.n_bad = out.n_bad;
  r.discoveries = out.discoveries;
  r.t = out.t;
  r.max_node_count = out.max_node_count;
  r.fingerprint = out.ledger_fingerprint;
  return r;
}

}  // namespace

StrategyOutcome run_single(const ExperimentConfig& cfg, std::size_t cell_index,
                           std::size_t rep_index, QueryLedger* ledger_out) {
  const ModelParams params = cfg.model();
  const std::int64_t T = cfg.horizons.at(cell_index);
  const std::int64_t B_T = cfg.cap_for(T);
  const std::uint64_t rep_seed = replication_seed(cfg.base_seed, cell_index, rep_index);

  const bool pathwise_run = cfg.strategy == "doubling" && cfg.doubling_mode == "pathwise";
  // pathwise runs enforce their cap epoch by epoch; the ledger keeps the
  // loosest horizon-level bound
  const Budget budget = cfg.cap_rule == ExperimentConfig::CapRule::unbounded || pathwise_run
                            ? Budget::unbounded_at(T, params.n)
                            : Budget::bounded(T, B_T);

  HiddenGraph graph(params, derive_seed(rep_seed, 1));
  QueryLedger local_ledger(params, budget, cfg.dump_ledger, cfg.record_trajectory ? 1024 : 0);
  if (ledger_out) *ledger_out = std::move(local_ledger);
  QueryLedger& ledger = ledger_out ? *ledger_out : local_ledger;
  QuerySession session(graph, ledger);

  const double s = cfg.effective_s();
  const std::uint64_t strat_seed = derive_seed(rep_seed, 2);
  const AlgoConstants constants = cfg.algo_constants();

  if (cfg.strategy == "random") return run_random(session, strat_seed);
  if (cfg.strategy == "unconstrained") {
    return run_unconstrained(session, s, constants, strat_seed);
  }
  if (cfg.strategy == "constrained") return run_constrained(session, s, constants, strat_seed);
  const DoublingMode mode =
      pathwise_run ? DoublingMode::pathwise : DoublingMode::unconstrained;
  return run_doubling(session, s, mode, cfg.cap_gamma, cfg.cap_tau, constants, strat_seed);
}

AggregateResult run_experiment(const ExperimentConfig& cfg) {
  AggregateResult result;
  result.config = cfg;

  // ascending-T cell order, with the original index for seeding
  std::vector<std::size_t> order(cfg.horizons.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cfg.horizons[a] < cfg.horizons[b]; });

  for (std::size_t idx : order) {
    const std::int64_t T = cfg.horizons[idx];
    preflight_cell(cfg, T, cfg.cap_for(T));
  }

  struct Job {
    std::size_t cell;  // original index (seeding)
    std::size_t rep;
    std::size_t slot;  // output cell slot
  };
  std::vector<Job> jobs;
  result.cells.resize(order.size());
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    const std::size_t idx = order[slot];
    result.cells[slot].T = cfg.horizons[idx];
    result.cells[slot].B_T = cfg.cap_for(cfg.horizons[idx]);
    result.cells[slot].reps.resize(static_cast<std::size_t>(cfg.replications));
    for (std::size_t r = 0; r < static_cast<std::size_t>(cfg.replications); ++r) {
      jobs.push_back(Job{idx, r, slot});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size() || failed.load()) return;
      try {
        const StrategyOutcome out = run_single(cfg, jobs[j].cell, jobs[j].rep);
        result.cells[jobs[j].slot].reps[jobs[j].rep] = to_rep_result(out);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(jobs.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  if (failed.load()) fail(Errc::feasibility, "replication failed: " + first_error);

  const ModelParams m = cfg.model();
  for (CellResult& cell : result.cells) {
    const std::size_t reps = cell.reps.size();
    double sum = 0.0, sum_disc = 0.0;
    std::vector<double> values;
    values.reserve(reps);
    for (const RepResult& r : cell.reps) {
      sum += static_cast<double>(r.n_bad);
      sum_disc += static_cast<double>(r.discoveries);
      values.push_back(static_cast<double>(r.n_bad));
    }
    cell.mean_nbad = sum / static_cast<double>(reps);
    cell.mean_discoveries = sum_disc / static_cast<double>(reps);
    double ss = 0.0;
    for (double v : values) ss += (v - cell.mean_nbad) * (v - cell.mean_nbad);
    cell.std_nbad = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1)) : 0.0;
    std::sort(values.begin(), values.end());
    auto nearest_rank = [&](double p) {
      const std::size_t rank = static_cast<std::size_t>(
          std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                        std::ceil(p * static_cast<double>(reps)))));
      return values[std::min(rank, reps) - 1];
    };
    cell.q10_nbad = nearest_rank(0.10);
    cell.q90_nbad = nearest_rank(0.90);
    cell.lb_theorem =
        regret_lower_bound(cell.T, cell.B_T, m, m.rho(), BoundKind::theorem_rate).value;
    cell.lb_strong_kl =
        regret_lower_bound(cell.T, cell.B_T, m, m.rho(), BoundKind::strong_kl_rate).value;
  }
  return result;
}

ExponentFit fit_exponent(const AggregateResult& result, std::int64_t T_min_cut) {
  std::vector<double> xs, ys;
  for (const CellResult& cell : result.cells) {
    if (cell.T > T_min_cut && cell.mean_nbad > 0.0) {
      xs.push_back(std::log(static_cast<double>(cell.T)));
      ys.push_back(std::log(cell.mean_nbad));
    }
  }
  const std::size_t n = xs.size();
  if (n < 3) fail(Errc::insufficient_data, "exponent fit needs at least 3 usable grid points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) fail(Errc::insufficient_data, "exponent fit needs distinct T values");
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.points = static_cast<int>(n);
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (my + fit.slope * (xs[i] - mx));
    sse += r * r;
  }
  fit.stderr_ = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx) : 0.0;
  return fit;
}

std::string render_csv(const AggregateResult& result) {
  std::ostringstream out;
  out << "T,B_T,strategy,reps,mean_nbad,std_nbad,q10_nbad,q90_nbad,mean_discoveries,"
         "lb_theorem,lb_strong_kl,s,n,p,q,seed\n";
  const ModelParams m = result.config.model();
  for (const CellResult& cell : result.cells) {
    out << cell.T << "," << cell.B_T << "," << result.config.strategy << ","
        << cell.reps.size() << "," << format_double(cell.mean_nbad) << ","
        << format_double(cell.std_nbad) << "," << format_double(cell.q10_nbad) << ","
        << format_double(cell.q90_nbad) << "," << format_double(cell.mean_discoveries) << ","
        << format_double(cell.lb_theorem) << "," << format_double(cell.lb_strong_kl) << ","
        << format_double(m.s()) << "," << m.n << "," << format_double(m.p) << ","
        << format_double(m.q) << "," << result.config.base_seed << "\n";
  }
  return out.str();
}

void emit_csv(const AggregateResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open for writing: " + path);
  out << render_csv(result);
  if (!out) fail(Errc::io, "write failed: " + path);
}

void write_ledger_csv(const QueryLedger& ledger, const std::string& path) {
  if (!ledger.recording()) fail(Errc::io, "ledger dump requested without pair recording");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open for writing: " + path);
  out << "t,node_a,node_b,outcome,is_bad\n";
  std::int64_t t = 0;
  for (const PairRecord& r : ledger.records()) {
    ++t;
    out << t << "," << r.a << "," << r.b << "," << static_cast<int>(r.outcome) << ","
        << static_cast<int>(r.bad) << "\n";
  }
  if (!out) fail(Errc::io, "write failed: " + path);
}

}  // namespace pairmatch
