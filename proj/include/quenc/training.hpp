#pragma once

// Variational training loop: evaluate, decode, track the best, step.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quenc/ansatz.hpp"
#include "quenc/constraints.hpp"
#include "quenc/errors.hpp"
#include "quenc/gradient.hpp"
#include "quenc/objective.hpp"
#include "quenc/problem.hpp"
#include "quenc/record.hpp"
#include "quenc/rng.hpp"
#include "quenc/statevector.hpp"

namespace quenc {

/// How theta (and the input state) are chosen.
struct Initialization {
  enum class Kind { Random, Warm, Theta };
  Kind kind = Kind::Random;
  Bitstring warm;              // Kind::Warm
  std::vector<double> theta;   // Kind::Theta

  static Initialization random() { return {}; }
  static Initialization warm_start(Bitstring x) { return {Kind::Warm, std::move(x), {}}; }
  static Initialization from_theta(std::vector<double> t) { return {Kind::Theta, {}, std::move(t)}; }
};

/// Ansatz acting on the register and algorithm ancilla for n_vars variables.
inline AnsatzSpec ansatz_for(std::size_t n_vars, AnsatzFamily family, int layers) {
  return {family, register_qubits_for(n_vars) + 1, layers};
}

/// Tuned learning rate where one is known: 0.02 for 16 variables in exact
/// mode, halved for 64-shot training. Empty otherwise.
inline std::optional<double> default_learning_rate(std::size_t n_vars, std::size_t shots) {
  if (n_vars != 16) return std::nullopt;
  if (shots == 0) return 0.02;
  if (shots == 64) return 0.01;
  return std::nullopt;
}

namespace detail {

inline bool window_converged(std::span<const double> running_min, int window, double threshold) {
  const std::size_t t = running_min.size();
  if (t <= static_cast<std::size_t>(window)) return false;
  const double before = running_min[t - 1 - window];
  const double now = running_min[t - 1];
  const double scale = std::max(std::abs(before), 1e-12);
  return (before - now) / scale < threshold;
}

inline double feasible_mass(const StateVector& state, const EncodingLayout& layout) {
  const auto amps = state.amplitudes();
  const std::size_t bound = std::min(layout.feasible_bound(), amps.size());
  double p = 0.0;
  for (std::size_t i = 0; i < bound; ++i) p += std::norm(amps[i]);
  return p;
}

}  // namespace detail

/// Trains `spec` on `q`. With constraints, the circuit gets one constraint
/// block per pair and the readout is post-selected on every constraint
/// ancilla reading 0.
///
/// Each evaluation appends the relaxed cost to the trace and the best decoded
/// cost so far to best_trace. Stops once the evaluation count exceeds
/// max_iters, when a decoded cost reaches the target, or when the running
/// minimum of the trace improves by less than `threshold` (relative) over
/// `window` evaluations. The final bitstring is decoded from the exact state
/// at the final parameters.
inline RunRecord train(const QuboProblem& q, const AnsatzSpec& spec, const TrainConfig& cfg,
                       const Initialization& init = Initialization::random(),
                       std::span<const Constraint> constraints = {}) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  const std::size_t n = q.size();
  const bool constrained = !constraints.empty();
  validate_constraints(constraints, n);
  const EncodingLayout layout = EncodingLayout::for_vars(n, static_cast<int>(constraints.size()));
  if (spec.n_qubits != layout.register_qubits + 1)
    throw InputError("ansatz has " + std::to_string(spec.n_qubits) + " qubits; " + std::to_string(n) +
                     " variables need " + std::to_string(layout.register_qubits + 1));

  Circuit base = build_ansatz(spec);
  std::vector<int> ancillas;
  Circuit circuit = base;
  if (constrained) {
    auto cc = build_constrained_circuit(base, n, constraints);
    circuit = std::move(cc.circuit);
    ancillas = std::move(cc.constraint_ancillas);
  }

  StateVector initial(layout.n_qubits());
  Rng rng(cfg.seed);
  std::vector<double> theta(circuit.n_params());
  switch (init.kind) {
    case Initialization::Kind::Random:
      for (auto& t : theta) t = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      break;
    case Initialization::Kind::Warm:
      if (init.warm.size() != n) throw InputError("warm-start bitstring length does not match the problem");
      initial = prepare_warmstart_state(init.warm, layout.constraint_ancillas);
      for (auto& t : theta) t = uniform(rng, -cfg.warm_perturbation, cfg.warm_perturbation);
      break;
    case Initialization::Kind::Theta:
      if (init.theta.size() != theta.size()) throw InputError("initial theta has the wrong length");
      theta = init.theta;
      break;
  }

  const std::size_t min_count =
      cfg.min_register_shots > 0 ? cfg.min_register_shots : (constrained ? std::size_t{10} : std::size_t{1});

  RunRecord rec;
  rec.problem = "qubo n=" + std::to_string(n);
  rec.problem_hash = problem_hash(q);
  rec.n_vars = n;
  for (const auto& c : constraints) rec.constraints.emplace_back(c.i, c.j);
  rec.ansatz = std::string(family_name(spec.family));
  rec.n_qubits = spec.n_qubits;
  rec.layers = spec.layers;
  rec.optimizer = std::string(optimizer_name(cfg.optimizer));
  rec.alpha = cfg.alpha;
  rec.beta1 = cfg.beta1;
  rec.beta2 = cfg.beta2;
  rec.epsilon = cfg.epsilon;
  rec.shots = cfg.shots;
  rec.max_iters = cfg.max_iters;
  rec.seed = cfg.seed;
  rec.known_optimum = q.known_optimum;
  rec.best_cost = std::numeric_limits<double>::infinity();

  auto decode_for = [&](const SolutionDistribution& d) {
    return constrained ? decode_feasible(d, constraints) : decode(d);
  };
  auto consider = [&](const Bitstring& x) {
    const double c = q.cost(x);
    if (c < rec.best_cost) {
      rec.best_cost = c;
      rec.best_bitstring = x;
    }
  };

  TrainState st(std::move(theta));
  std::vector<double> running_min;
  double feasible_sum = 0.0;
  for (int evaluation = 0;; ++evaluation) {
    const StateVector state = run_circuit(circuit, st.theta, initial);
    if (constrained) {
      const double pf = detail::feasible_mass(state, layout);
      ++rec.postselection.evaluations;
      feasible_sum += pf;
      rec.postselection.min_probability = std::min(rec.postselection.min_probability, pf);
      if (pf < cfg.postselect_floor) throw PostselectionError("feasible subspace probability below floor", pf);
    }

    EncodingMasses masses;
    SolutionDistribution dist;
    if (cfg.shots == 0) {
      masses = encoding_masses(state, layout);
      dist = distribution_from_masses(masses);
    } else {
      const auto outcomes = sample(state, cfg.shots, rng);
      dist = extract_shots(outcomes, layout, min_count);
      const ShotTally t = tally_shots(outcomes, layout);
      rec.postselection.shots_total += cfg.shots;
      rec.postselection.shots_discarded += cfg.shots - t.kept;
      masses.joint1.resize(n);
      masses.reg.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        masses.joint1[i] = static_cast<double>(t.ones[i]) / static_cast<double>(cfg.shots);
        masses.reg[i] = static_cast<double>(t.total[i]) / static_cast<double>(cfg.shots);
      }
    }

    const double cost = quenc_cost(q, dist);
    rec.trace.push_back(cost);
    running_min.push_back(running_min.empty() ? cost : std::min(running_min.back(), cost));
    consider(decode_for(dist));
    rec.best_trace.push_back(rec.best_cost);

    if (cfg.target_cost && rec.best_cost <= *cfg.target_cost + 1e-9) {
      rec.stop_reason = "target";
      break;
    }
    if (evaluation >= cfg.max_iters) {
      rec.stop_reason = "max_iters";
      break;
    }
    if (detail::window_converged(running_min, cfg.window, cfg.threshold)) {
      rec.stop_reason = "converged";
      break;
    }

    std::vector<double> grad;
    if (cfg.shots == 0)
      grad = assemble_gradient(q, masses, dist, shifted_masses(circuit, st.theta, initial, layout));
    else
      grad = assemble_gradient(q, masses, dist, shifted_masses(circuit, st.theta, initial, layout, cfg.shots, &rng));
    optimizer_step(st, grad, cfg);
  }

  const StateVector final_state = run_circuit(circuit, st.theta, initial);
  rec.final_bitstring = decode_for(extract_exact(final_state, layout));
  rec.final_cost = q.cost(rec.final_bitstring);
  consider(rec.final_bitstring);
  rec.final_theta = st.theta;
  rec.iterations = static_cast<int>(rec.trace.size());
  if (constrained)
    rec.postselection.mean_probability = feasible_sum / static_cast<double>(rec.postselection.evaluations);
  if (q.known_optimum) {
    const double c_rand = random_bitstring_mean_cost(q, derive_seed(cfg.seed, 0x52414e44));
    if (c_rand != *q.known_optimum) rec.c_norm = normalized_cost(rec.best_cost, *q.known_optimum, c_rand);
  }
  rec.stages = {"quenc"};
  rec.stage_costs = {rec.best_cost};
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

/// train() with constraints and a plain random start.
inline RunRecord constrained_train(const QuboProblem& q, const AnsatzSpec& spec, const TrainConfig& cfg,
                                   std::span<const Constraint> constraints) {
  return train(q, spec, cfg, Initialization::random(), constraints);
}

}  // namespace quenc
