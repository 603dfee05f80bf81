#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mirror.hpp"
#include "risk.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "simplex.hpp"

namespace magg {

enum class Method { mirror_averaging, erm_selector };

inline std::string method_to_string(Method m) {
  return m == Method::mirror_averaging ? "mirror-averaging" : "erm-selector";
}

struct TrialResult {
  double excess_risk = 0.0;
  double risk = 0.0;
  double clamp_rate = 0.0;      // share of the n draws with clamped losses
  std::uint64_t seed = 0;
  std::size_t selected = 0;     // ERM pick (0-based); unused for the mixture
  SimplexWeights weights;       // aggregate mixture, or the selected vertex
};

// One replication on a fresh sample of size n. The averaged mixture only ever
// consumes the first n-1 observations (its running average includes the
// initial uniform weights), while the minimum-loss selector sees all n.
inline TrialResult run_trial(const Scenario& sc, Method method, double beta,
                             std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("run_trial: n >= 1 required");
  Rng rng(seed);
  TrialResult out;
  out.seed = seed;

  std::size_t clamped = 0;
  const auto oracle = oracle_from_vertex_risks(sc.exact_vertex_risks(n));

  if (method == Method::mirror_averaging) {
    DualState st(sc.M, beta);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      Sample s = sc.draw(rng, n);
      LossVector u = sc.vertex_losses(s);
      if (!u.finite_flag) ++clamped;
      step(st, u);
    }
    Sample last = sc.draw(rng, n);  // drawn for parity; never enters the update
    (void)last;
    if (st.step_count != n - 1) throw std::logic_error("run_trial: update count mismatch");
    out.weights = aggregate(st);
    out.risk = sc.exact_mixture_risk(out.weights, n);
  } else {
    std::vector<double> cum(sc.M, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      Sample s = sc.draw(rng, n);
      LossVector u = sc.vertex_losses(s);
      if (!u.finite_flag) ++clamped;
      for (std::size_t j = 0; j < sc.M; ++j) cum[j] += u.values[j];
    }
    out.selected = erm_select(cum);
    out.weights = vertex_weights(sc.M, out.selected);
    out.risk = sc.exact_mixture_risk(out.weights, n);
  }
  out.excess_risk = out.risk - oracle.second;
  out.clamp_rate = static_cast<double>(clamped) / static_cast<double>(n);
  return out;
}

struct StudySpec {
  Scenario scenario;
  std::string name;                 // row label in outputs
  std::vector<std::size_t> ns;
  std::vector<Method> methods{Method::mirror_averaging, Method::erm_selector};
  std::size_t reps = 0;
  std::uint64_t master_seed = 0;
  unsigned jobs = 1;
  bool use_claimed_beta = false;
  double beta_override = 0.0;       // 0 = use the calibrated policy
  std::size_t remainder_draws = 200000;  // MC draws for the tail remainder term
};

struct CellSummary {
  std::string scenario;
  Method method = Method::mirror_averaging;
  double beta = 0.0;
  std::size_t M = 0;
  std::size_t n = 0;
  std::size_t reps = 0;
  double mean_excess = 0.0;
  double stderr_excess = 0.0;
  double mean_clamp_rate = 0.0;
  double bound_core = 0.0;       // beta * log(M) / n
  double bound_remainder = 0.0;  // tail remainder estimate, when the policy has one
  double bound_total = 0.0;
  double oracle_risk = 0.0;
  std::size_t oracle_index = 0;  // 0-based; writers add 1 for output
};

struct StudyReport {
  StudySpec spec;
  std::vector<std::vector<TrialResult>> trials;  // [cell][rep]
  std::vector<CellSummary> cells;
  double wall_ms_total = 0.0;
};

inline std::size_t cell_index(const StudySpec& spec, std::size_t i_n, std::size_t i_m) {
  return i_n * spec.methods.size() + i_m;
}

namespace detail {

// E[ R_beta(Y) ] for the bounded-regression and heavy-tail policies: the
// per-sample tail remainder evaluated at the response distribution, estimated
// by plain Monte Carlo on a dedicated seed stream.
inline double mc_remainder(const Scenario& sc, const MomentConstants& mc_consts, double beta,
                           std::size_t draws, std::uint64_t seed) {
  if (!sc.dict.L) throw std::invalid_argument("mc_remainder: dictionary bound L required");
  const double L = *sc.dict.L;
  Rng rng(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    Sample s = sc.draw(rng, 2);  // regression draws ignore the cell size
    acc += remainder_R_beta(s.y, L, mc_consts.b, mc_consts.B, beta);
  }
  return acc / static_cast<double>(draws);
}

}  // namespace detail

// Full grid of (n, method) cells, `reps` independent replications each.
// Per-trial seeds derive from (master, cell, rep) so any sub-grid rerun
// reproduces the same numbers; threading splits the flat trial list and
// writes into preallocated slots, so the merge order is deterministic.
inline StudyReport run_study(const StudySpec& spec) {
  if (spec.reps < 1) throw std::invalid_argument("run_study: reps >= 1 required");
  if (spec.ns.empty()) throw std::invalid_argument("run_study: at least one n required");
  const auto t0 = std::chrono::steady_clock::now();

  StudyReport rep;
  rep.spec = spec;
  const std::size_t n_cells = spec.ns.size() * spec.methods.size();
  rep.trials.assign(n_cells, std::vector<TrialResult>(spec.reps));
  rep.cells.assign(n_cells, CellSummary{});

  std::vector<double> betas(spec.ns.size());
  for (std::size_t i = 0; i < spec.ns.size(); ++i) {
    if (spec.beta_override > 0.0) {
      betas[i] = spec.beta_override;
    } else {
      betas[i] = spec.scenario.beta_policy(spec.ns[i], spec.use_claimed_beta).beta_min;
    }
  }

  struct Task {
    std::size_t cell, rep;
  };
  std::vector<Task> tasks;
  tasks.reserve(n_cells * spec.reps);
  for (std::size_t c = 0; c < n_cells; ++c)
    for (std::size_t r = 0; r < spec.reps; ++r) tasks.push_back({c, r});

  auto worker_run = [&](std::size_t t) {
    const std::size_t c = tasks[t].cell, r = tasks[t].rep;
    const std::size_t i_n = c / spec.methods.size();
    const Method method = spec.methods[c % spec.methods.size()];
    const std::uint64_t seed = hash64(spec.master_seed, static_cast<std::uint64_t>(c),
                                      static_cast<std::uint64_t>(r));
    rep.trials[c][r] =
        run_trial(spec.scenario, method, betas[i_n], spec.ns[i_n], seed);
  };

  const unsigned jobs = std::max(1u, spec.jobs);
  if (jobs == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) worker_run(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1))
          worker_run(t);
      });
    for (auto& th : pool) th.join();
  }

  const bool has_remainder = spec.scenario.kind == ScenarioKind::regression_bounded ||
                             spec.scenario.kind == ScenarioKind::regression_heavy_tail;

  for (std::size_t c = 0; c < n_cells; ++c) {
    const std::size_t i_n = c / spec.methods.size();
    CellSummary& cs = rep.cells[c];
    cs.scenario = spec.name;
    cs.method = spec.methods[c % spec.methods.size()];
    cs.beta = betas[i_n];
    cs.M = spec.scenario.M;
    cs.n = spec.ns[i_n];
    cs.reps = spec.reps;
    double sum = 0.0, sumsq = 0.0, clamp = 0.0;
    for (const auto& t : rep.trials[c]) {
      sum += t.excess_risk;
      sumsq += t.excess_risk * t.excess_risk;
      clamp += t.clamp_rate;
    }
    const double m = sum / static_cast<double>(spec.reps);
    cs.mean_excess = m;
    cs.mean_clamp_rate = clamp / static_cast<double>(spec.reps);
    if (spec.reps > 1) {
      const double var =
          std::max(0.0, (sumsq - static_cast<double>(spec.reps) * m * m) /
                            static_cast<double>(spec.reps - 1));
      cs.stderr_excess = std::sqrt(var / static_cast<double>(spec.reps));
    }
    cs.bound_core =
        cs.beta * std::log(static_cast<double>(cs.M)) / static_cast<double>(cs.n);
    if (has_remainder && spec.scenario.dict.L) {
      const auto consts = bounded_moment_constants(*spec.scenario.dict.L);
      cs.bound_remainder = detail::mc_remainder(
          spec.scenario, consts, cs.beta, spec.remainder_draws,
          hash64(spec.master_seed, 0xB0DDu, static_cast<std::uint64_t>(c)));
    }
    cs.bound_total = cs.bound_core + cs.bound_remainder;
    const auto oracle = oracle_from_vertex_risks(spec.scenario.exact_vertex_risks(cs.n));
    cs.oracle_index = oracle.first;
    cs.oracle_risk = oracle.second;
  }

  rep.wall_ms_total = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  return rep;
}

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  std::size_t cells_used = 0;
  std::size_t cells_dropped = 0;  // nonpositive means excluded from the log fit
  std::string note;
};

// OLS of log(mean excess) on log(n) across one method's cells. Cells whose
// mean is not strictly positive carry no log and are dropped with a notice;
// fewer than three usable cells leaves the fit undefined.
inline SlopeFit rate_slope(const std::vector<double>& ns,
                           const std::vector<double>& means) {
  if (ns.size() != means.size())
    throw std::invalid_argument("rate_slope: length mismatch");
  std::vector<double> lx, ly;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(means[i] > 0.0)) {
      ++dropped;
      continue;
    }
    lx.push_back(std::log(ns[i]));
    ly.push_back(std::log(means[i]));
  }
  if (lx.size() < 3)
    throw std::domain_error("rate_slope: fewer than 3 cells with positive mean excess");
  const std::size_t k = lx.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("rate_slope: degenerate n grid");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.cells_used = k;
  fit.cells_dropped = dropped;
  if (dropped > 0)
    fit.note = std::to_string(dropped) + " cell(s) with nonpositive mean excess dropped";
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = ly[i] - (my + fit.slope * (lx[i] - mx));
    rss += e * e;
  }
  if (k > 2) fit.stderr_ = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  return fit;
}

// Convenience: slope of one method across the study's n grid.
inline SlopeFit study_slope(const StudyReport& rep, Method method) {
  std::vector<double> ns, means;
  for (const auto& c : rep.cells)
    if (c.method == method) {
      ns.push_back(static_cast<double>(c.n));
      means.push_back(c.mean_excess);
    }
  return rate_slope(ns, means);
}

}  // namespace magg
