#pragma once

// Restarts, classical refinement and stage chaining.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quenc/analysis.hpp"
#include "quenc/ansatz.hpp"
#include "quenc/constraints.hpp"
#include "quenc/errors.hpp"
#include "quenc/gradient.hpp"
#include "quenc/parallel.hpp"
#include "quenc/problem.hpp"
#include "quenc/record.hpp"
#include "quenc/rng.hpp"
#include "quenc/training.hpp"

namespace quenc {

struct LocalSearchResult {
  Bitstring x;
  double cost = 0.0;
  std::size_t flips = 0;
  bool local_optimum = false;  // false when the flip budget ran out first
};

/// Steepest-descent single-bit-flip search: flip the variable with the most
/// negative cost change until none is negative or `budget` flips are spent.
inline LocalSearchResult local_search(const QuboProblem& q, Bitstring x0, std::size_t budget) {
  const std::size_t n = q.size();
  if (x0.size() != n) throw InputError("local_search: start bitstring length does not match the problem");
  // field[k] = Q_kk + sum_{j != k} Q_jk x_j, the change from setting x_k to 1
  std::vector<double> field(n);
  for (std::size_t k = 0; k < n; ++k) {
    double f = q(k, k);
    for (std::size_t j = 0; j < n; ++j)
      if (j != k && x0[j]) f += j < k ? q(j, k) : q(k, j);
    field[k] = f;
  }
  LocalSearchResult r{std::move(x0), 0.0, 0, false};
  for (;;) {
    std::size_t pick = n;
    double best_delta = -1e-12;
    for (std::size_t k = 0; k < n; ++k) {
      const double delta = r.x[k] ? -field[k] : field[k];
      if (delta < best_delta) {
        best_delta = delta;
        pick = k;
      }
    }
    if (pick == n) {
      r.local_optimum = true;
      break;
    }
    if (r.flips >= budget) break;
    const double sign = r.x[pick] ? -1.0 : 1.0;
    r.x[pick] ^= 1u;
    ++r.flips;
    for (std::size_t j = 0; j < n; ++j)
      if (j != pick) field[j] += sign * (j < pick ? q(j, pick) : q(pick, j));
  }
  r.cost = q.cost(r.x);
  return r;
}

/// Outcome of one stage on one restart.
struct StageResult {
  Bitstring x;
  double cost = 0.0;
  std::optional<RunRecord> record;  // set by stages that train a circuit
};

/// A pipeline element: takes the best bitstring so far (if any) and returns
/// an improved one.
class SolverStage {
 public:
  virtual ~SolverStage() = default;
  virtual std::string name() const = 0;
  virtual StageResult run(const QuboProblem& q, const std::optional<Bitstring>& warm, std::uint64_t seed) const = 0;
};

/// Variational training. Without a predecessor it trains `family` from a
/// random start; with one it loads the bitstring state and trains the
/// identity-at-zero ansatz with `warm_layers` layers.
class QuEncStage : public SolverStage {
 public:
  QuEncStage(AnsatzFamily family, int layers, TrainConfig cfg, int warm_layers = 2,
             std::vector<Constraint> constraints = {})
      : family_(family), layers_(layers), warm_layers_(warm_layers), cfg_(cfg), constraints_(std::move(constraints)) {}

  std::string name() const override { return "quenc"; }

  StageResult run(const QuboProblem& q, const std::optional<Bitstring>& warm, std::uint64_t seed) const override {
    TrainConfig cfg = cfg_;
    cfg.seed = seed;
    RunRecord rec = warm ? train(q, ansatz_for(q.size(), AnsatzFamily::WarmStart, warm_layers_), cfg,
                                 Initialization::warm_start(*warm), constraints_)
                         : train(q, ansatz_for(q.size(), family_, layers_), cfg, Initialization::random(),
                                 constraints_);
    StageResult out{rec.best_bitstring, rec.best_cost, std::nullopt};
    out.record = std::move(rec);
    return out;
  }

 private:
  AnsatzFamily family_;
  int layers_;
  int warm_layers_;
  TrainConfig cfg_;
  std::vector<Constraint> constraints_;
};

/// Steepest-descent refinement from the predecessor's bitstring, or from a
/// seeded random bitstring when it is the first stage.
class LocalSearchStage : public SolverStage {
 public:
  explicit LocalSearchStage(std::size_t budget) : budget_(budget) {}

  std::string name() const override { return "local"; }

  StageResult run(const QuboProblem& q, const std::optional<Bitstring>& warm, std::uint64_t seed) const override {
    Bitstring x0;
    if (warm) {
      x0 = *warm;
    } else {
      Rng rng(seed);
      x0 = random_bitstring(q.size(), rng);
    }
    auto r = local_search(q, std::move(x0), budget_);
    return {std::move(r.x), r.cost, std::nullopt};
  }

 private:
  std::size_t budget_;
};

struct PipelineSpec {
  std::vector<std::shared_ptr<const SolverStage>> stages;
  int restarts = 1;
  std::uint64_t seed = 0;
  std::optional<Bitstring> initial;  // handed to the first stage as its warm start
};

/// Runs every restart (in parallel) through the stage chain; restart r uses
/// derive_seed(seed, r) and stage s within it derive_seed(restart seed, s).
/// A failing stage is recorded as "<name>:failed" and the chain continues
/// from the prior best. The returned record describes the restart with the
/// lowest final cost (first such restart on ties); stage_costs holds the
/// best cost after each stage. If no stage succeeded on any restart, the
/// first restart's first error is rethrown.
inline RunRecord run_pipeline(const QuboProblem& q, const PipelineSpec& spec) {
  if (spec.restarts < 1) throw InputError("pipeline needs at least one restart");
  if (spec.stages.empty()) throw InputError("pipeline needs at least one stage");
  if (spec.initial && spec.initial->size() != q.size())
    throw InputError("initial bitstring length does not match the problem");
  const auto started = std::chrono::steady_clock::now();

  struct RestartOutcome {
    std::optional<Bitstring> best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::string> stages;
    std::vector<double> stage_costs;
    std::optional<RunRecord> trained;
    std::exception_ptr error;
  };
  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(spec.restarts));
  parallel_for(outcomes.size(), [&](std::size_t r) {
    const std::uint64_t restart_seed = derive_seed(spec.seed, r);
    RestartOutcome& o = outcomes[r];
    if (spec.initial) {
      o.best = spec.initial;
      o.best_cost = q.cost(*spec.initial);
    }
    for (std::size_t s = 0; s < spec.stages.size(); ++s) {
      const auto& stage = *spec.stages[s];
      try {
        StageResult res = stage.run(q, o.best, derive_seed(restart_seed, s));
        if (res.cost < o.best_cost) {
          o.best_cost = res.cost;
          o.best = std::move(res.x);
        }
        if (res.record) o.trained = std::move(res.record);
        o.stages.push_back(stage.name());
      } catch (const std::exception&) {
        if (!o.error) o.error = std::current_exception();
        o.stages.push_back(stage.name() + ":failed");
      }
      o.stage_costs.push_back(o.best_cost);
    }
  });

  std::size_t winner = 0;
  for (std::size_t r = 1; r < outcomes.size(); ++r)
    if (outcomes[r].best_cost < outcomes[winner].best_cost) winner = r;
  const RestartOutcome& w = outcomes[winner];
  const bool any_success = std::any_of(outcomes.begin(), outcomes.end(), [](const RestartOutcome& o) {
    return std::any_of(o.stages.begin(), o.stages.end(),
                       [](const std::string& s) { return s.find(":failed") == std::string::npos; });
  });
  if (!any_success) std::rethrow_exception(outcomes.front().error);

  RunRecord rec = w.trained ? *w.trained : RunRecord{};
  rec.problem = "qubo n=" + std::to_string(q.size());
  rec.problem_hash = problem_hash(q);
  rec.n_vars = q.size();
  rec.master_seed = spec.seed;
  rec.seed = derive_seed(spec.seed, winner);
  rec.restart = static_cast<int>(winner);
  rec.best_bitstring = *w.best;
  rec.best_cost = w.best_cost;
  rec.final_bitstring = *w.best;
  rec.final_cost = w.best_cost;
  if (!w.trained) rec.stop_reason = "pipeline";
  rec.stages = w.stages;
  rec.stage_costs = w.stage_costs;
  rec.known_optimum = q.known_optimum;
  rec.c_norm.reset();
  if (q.known_optimum) {
    const double c_rand = random_bitstring_mean_cost(q, derive_seed(spec.seed, 0x52414e44));
    if (c_rand != *q.known_optimum) rec.c_norm = normalized_cost(rec.best_cost, *q.known_optimum, c_rand);
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

/// Equal up to 1e-9 relative.
inline bool same_cost(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

struct GlobalOptStats {
  std::size_t runs = 0;
  std::size_t hits = 0;
  double probability() const { return runs ? static_cast<double>(hits) / static_cast<double>(runs) : 0.0; }
};

/// Trains every problem `runs_per_problem` times from random starts; a run
/// counts as a hit when the bitstring decoded at its final parameters has
/// the optimal cost. Run (p, r) uses derive_seed(derive_seed(seed, p), r).
inline GlobalOptStats global_opt_probability(std::span<const QuboProblem> problems, const AnsatzSpec& spec,
                                             std::size_t runs_per_problem, const TrainConfig& cfg,
                                             std::uint64_t seed, std::vector<RunRecord>* records = nullptr) {
  std::vector<double> optimum(problems.size());
  for (std::size_t p = 0; p < problems.size(); ++p)
    optimum[p] = problems[p].known_optimum ? *problems[p].known_optimum : exact_optimum(problems[p]).cost;
  const std::size_t total = problems.size() * runs_per_problem;
  std::vector<RunRecord> recs(total);
  parallel_for(total, [&](std::size_t idx) {
    const std::size_t p = idx / runs_per_problem, r = idx % runs_per_problem;
    TrainConfig c = cfg;
    c.seed = derive_seed(derive_seed(seed, p), r);
    recs[idx] = train(problems[p], spec, c);
    recs[idx].master_seed = seed;
    recs[idx].restart = static_cast<int>(r);
  });
  GlobalOptStats stats;
  for (std::size_t idx = 0; idx < total; ++idx) {
    ++stats.runs;
    if (same_cost(recs[idx].final_cost, optimum[idx / runs_per_problem])) ++stats.hits;
  }
  if (records) *records = std::move(recs);
  return stats;
}

/// (C - C_base) / (C_rand - C_base).
inline double relative_cost(double c, double c_base, double c_rand) {
  const double denom = c_rand - c_base;
  if (denom == 0.0) throw std::domain_error("relative_cost: baseline equals random cost");
  return (c - c_base) / denom;
}

struct ShotCell {
  std::size_t shots = 0;  // 0 = exact
  double alpha = 0.0;
  double mean_cost = 0.0;
  double relative = 0.0;
  std::vector<RunRecord> runs;  // one per problem
};

struct ShotScalingTable {
  double baseline_alpha = 0.0;
  double baseline_mean = 0.0;
  double random_mean = 0.0;
  std::vector<RunRecord> baseline_runs;
  std::vector<ShotCell> cells;
};

/// For every (k, alpha) cell, trains each problem once and averages the
/// final decoded cost; relative cost is taken against the exact-mode run at
/// `baseline_alpha` and the mean cost of random bitstrings. Problem p in
/// every cell starts from the same seed, derive_seed(seed, p).
inline ShotScalingTable shot_scaling_experiment(std::span<const QuboProblem> problems, const AnsatzSpec& spec,
                                                std::span<const std::size_t> shot_grid,
                                                std::span<const double> alpha_grid, double baseline_alpha,
                                                const TrainConfig& base, std::uint64_t seed) {
  if (problems.empty() || shot_grid.empty() || alpha_grid.empty())
    throw InputError("shot scaling needs problems and non-empty grids");
  auto run_cell = [&](std::size_t shots, double alpha) {
    std::vector<RunRecord> runs(problems.size());
    parallel_for(problems.size(), [&](std::size_t p) {
      TrainConfig c = base;
      c.shots = shots;
      c.alpha = alpha;
      c.seed = derive_seed(seed, p);
      runs[p] = train(problems[p], spec, c);
      runs[p].master_seed = seed;
    });
    return runs;
  };
  auto mean_final = [](const std::vector<RunRecord>& runs) {
    double s = 0.0;
    for (const auto& r : runs) s += r.final_cost;
    return s / static_cast<double>(runs.size());
  };

  ShotScalingTable t;
  t.baseline_alpha = baseline_alpha;
  t.baseline_runs = run_cell(0, baseline_alpha);
  t.baseline_mean = mean_final(t.baseline_runs);
  double rand_sum = 0.0;
  for (std::size_t p = 0; p < problems.size(); ++p)
    rand_sum += random_bitstring_mean_cost(problems[p], derive_seed(seed ^ 0x52414e44, p));
  t.random_mean = rand_sum / static_cast<double>(problems.size());
  for (auto k : shot_grid)
    for (double a : alpha_grid) {
      ShotCell cell{k, a, 0.0, 0.0, {}};
      cell.runs = (k == 0 && a == baseline_alpha) ? t.baseline_runs : run_cell(k, a);
      cell.mean_cost = mean_final(cell.runs);
      cell.relative = relative_cost(cell.mean_cost, t.baseline_mean, t.random_mean);
      t.cells.push_back(std::move(cell));
    }
  return t;
}

}  // namespace quenc
