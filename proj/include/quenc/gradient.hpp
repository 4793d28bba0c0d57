#pragma once

// Parameter-shift gradients of the relaxed cost and the GD / ADAM updates.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "quenc/errors.hpp"
#include "quenc/objective.hpp"
#include "quenc/problem.hpp"
#include "quenc/rng.hpp"
#include "quenc/statevector.hpp"

namespace quenc {

inline constexpr double kShift = std::numbers::pi / 2;

enum class OptimizerKind { GD, Adam };

inline std::string_view optimizer_name(OptimizerKind k) { return k == OptimizerKind::GD ? "gd" : "adam"; }

inline OptimizerKind optimizer_from_name(std::string_view s) {
  if (s == "gd") return OptimizerKind::GD;
  if (s == "adam") return OptimizerKind::Adam;
  throw InputError("unknown optimizer '" + std::string(s) + "'");
}

struct TrainConfig {
  double alpha = 0.02;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iters = 200;
  int window = 20;           // convergence window (iterations)
  double threshold = 1e-4;   // relative improvement required per window
  std::size_t shots = 0;     // 0 = exact expectations
  std::uint64_t seed = 0;
  std::optional<double> target_cost;   // stop once a decoded cost <= target
  double warm_perturbation = 0.1;      // theta ~ U[-p, p] for warm starts
  double postselect_floor = 1e-6;      // abort below this feasible probability
  std::size_t min_register_shots = 0;  // 0 = 1 unconstrained, 10 constrained

  void validate() const {
    if (!(alpha > 0.0)) throw InputError("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw InputError("ADAM betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw InputError("ADAM epsilon must be positive");
    if (max_iters < 0) throw InputError("max_iters must be nonnegative");
    if (window < 1) throw InputError("convergence window must be at least 1");
    if (warm_perturbation < 0.0) throw InputError("warm-start perturbation must be nonnegative");
  }
};

struct TrainState {
  std::vector<double> theta;
  std::vector<double> m;
  std::vector<double> v;
  int t = 0;

  explicit TrainState(std::vector<double> initial)
      : theta(std::move(initial)), m(theta.size(), 0.0), v(theta.size(), 0.0) {}
};

inline void check_sizes(const TrainState& s, std::span<const double> grad) {
  if (grad.size() != s.theta.size()) throw InputError("gradient size does not match parameters");
}

/// theta <- theta - alpha * grad
inline void gd_step(TrainState& s, std::span<const double> grad, const TrainConfig& cfg) {
  check_sizes(s, grad);
  for (std::size_t k = 0; k < grad.size(); ++k) s.theta[k] -= cfg.alpha * grad[k];
  ++s.t;
}

/// Exponential moving averages of the gradient and its square, bias
/// corrected by 1 - beta^t, then theta <- theta - alpha * m_hat / (sqrt(v_hat) + eps).
inline void adam_step(TrainState& s, std::span<const double> grad, const TrainConfig& cfg) {
  check_sizes(s, grad);
  ++s.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, s.t);
  const double c2 = 1.0 - std::pow(cfg.beta2, s.t);
  for (std::size_t k = 0; k < grad.size(); ++k) {
    s.m[k] = cfg.beta1 * s.m[k] + (1.0 - cfg.beta1) * grad[k];
    s.v[k] = cfg.beta2 * s.v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
    const double m_hat = s.m[k] / c1;
    const double v_hat = s.v[k] / c2;
    s.theta[k] -= cfg.alpha * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

inline void optimizer_step(TrainState& s, std::span<const double> grad, const TrainConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::GD)
    gd_step(s, grad, cfg);
  else
    adam_step(s, grad, cfg);
}

/// (f(theta_j + pi/2) - f(theta_j - pi/2)) / 2 for an observable f of the
/// output state. Exact for RY/RZ slots.
template <typename Observable>
double shift_derivative(const Circuit& circuit, std::span<const double> theta, std::size_t slot,
                        Observable&& f, const StateVector& initial) {
  if (slot >= circuit.n_params()) throw InputError("shift_derivative: slot out of range");
  std::vector<double> shifted(theta.begin(), theta.end());
  shifted[slot] = theta[slot] + kShift;
  const double plus = f(run_circuit(circuit, shifted, initial));
  shifted[slot] = theta[slot] - kShift;
  const double minus = f(run_circuit(circuit, shifted, initial));
  return 0.5 * (plus - minus);
}

template <typename Observable>
double shift_derivative(const Circuit& circuit, std::span<const double> theta, std::size_t slot, Observable&& f) {
  return shift_derivative(circuit, theta, slot, std::forward<Observable>(f), StateVector(circuit.n_qubits()));
}

/// Readout masses from k shots: joint1[i] = #(a=1, r=i, feasible) / k and
/// reg[i] = #(r=i, feasible) / k.
inline EncodingMasses sampled_masses(const StateVector& state, const EncodingLayout& layout, std::size_t shots,
                                     Rng& rng, ShotTally* tally_out = nullptr) {
  const auto outcomes = sample(state, shots, rng);
  ShotTally t = tally_shots(outcomes, layout);
  EncodingMasses m{std::vector<double>(layout.n_vars), std::vector<double>(layout.n_vars)};
  const double k = static_cast<double>(shots);
  for (std::size_t i = 0; i < layout.n_vars; ++i) {
    m.joint1[i] = static_cast<double>(t.ones[i]) / k;
    m.reg[i] = static_cast<double>(t.total[i]) / k;
  }
  if (tally_out) *tally_out = std::move(t);
  return m;
}

/// Readout masses of every shifted circuit, indexed by slot:
/// plus[j] at theta_j + pi/2 and minus[j] at theta_j - pi/2. Gates before the
/// shifted one are simulated once and shared by both shifts.
struct ShiftedMasses {
  std::vector<EncodingMasses> plus;
  std::vector<EncodingMasses> minus;
};

inline ShiftedMasses shifted_masses(const Circuit& circuit, std::span<const double> theta,
                                    const StateVector& initial, const EncodingLayout& layout,
                                    std::size_t shots = 0, Rng* rng = nullptr) {
  if (shots > 0 && rng == nullptr) throw InputError("shot-mode gradient needs an RNG");
  const std::size_t n_params = circuit.n_params();
  ShiftedMasses out{std::vector<EncodingMasses>(n_params), std::vector<EncodingMasses>(n_params)};
  std::vector<double> shifted(theta.begin(), theta.end());
  const auto& gates = circuit.gates();
  StateVector prefix = initial;
  auto readout = [&](const StateVector& s) {
    return shots > 0 ? sampled_masses(s, layout, shots, *rng) : encoding_masses(s, layout);
  };
  for (std::size_t g = 0; g < gates.size(); ++g) {
    if (gates[g].slot) {
      const std::size_t j = *gates[g].slot;
      for (int sign : {+1, -1}) {
        StateVector s = prefix;
        shifted[j] = theta[j] + sign * kShift;
        detail::apply_unchecked(s, gates[g], shifted);
        shifted[j] = theta[j];
        run_range(s, circuit, shifted, g + 1, gates.size());
        (sign > 0 ? out.plus[j] : out.minus[j]) = readout(s);
      }
    }
    detail::apply_unchecked(prefix, gates[g], theta);
  }
  for (std::size_t j = 0; j < n_params; ++j)
    if (!circuit.slot_gate(j)) {
      out.plus[j] = out.minus[j] = EncodingMasses{std::vector<double>(layout.n_vars, 0.0),
                                                  std::vector<double>(layout.n_vars, 0.0)};
    }
  return out;
}

/// dC/dtheta_j = sum_i (dC/dp_i) dp_i/dtheta_j with the quotient rule
///   dp_i = dJ_i / M_i - J_i dM_i / M_i^2,
/// J_i = Pr(a=1, r=i), M_i = Pr(r=i) at theta and dJ, dM from parameter
/// shifts. Unsupported registers (flagged in `dist`) contribute nothing.
inline std::vector<double> assemble_gradient(const QuboProblem& q, const EncodingMasses& at_theta,
                                             const SolutionDistribution& dist, const ShiftedMasses& shifted) {
  const std::size_t n = q.size();
  const auto sensitivity = quenc_cost_sensitivity(q, dist.p1);
  std::vector<double> grad(shifted.plus.size(), 0.0);
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const auto& p = shifted.plus[j];
    const auto& m = shifted.minus[j];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (dist.unsupported[i]) continue;
      const double M = at_theta.reg[i];
      const double J = at_theta.joint1[i];
      const double dJ = 0.5 * (p.joint1[i] - m.joint1[i]);
      const double dM = 0.5 * (p.reg[i] - m.reg[i]);
      acc += sensitivity[i] * (dJ / M - J * dM / (M * M));
    }
    grad[j] = acc;
  }
  return grad;
}

/// Exact-mode gradient of quenc_cost(extract_exact(circuit(theta) |initial>)).
inline std::vector<double> cost_gradient(const QuboProblem& q, const Circuit& circuit, std::span<const double> theta,
                                         const StateVector& initial, const EncodingLayout& layout) {
  const StateVector state = run_circuit(circuit, theta, initial);
  const EncodingMasses masses = encoding_masses(state, layout);
  const SolutionDistribution dist = distribution_from_masses(masses);
  return assemble_gradient(q, masses, dist, shifted_masses(circuit, theta, initial, layout));
}

/// Unconstrained layout starting from |0...0>.
inline std::vector<double> cost_gradient(const QuboProblem& q, const Circuit& circuit, std::span<const double> theta) {
  const auto layout = EncodingLayout::for_vars(q.size());
  return cost_gradient(q, circuit, theta, StateVector(circuit.n_qubits()), layout);
}

/// Shot-mode gradient: the state at theta and each shifted circuit are sampled
/// with `shots` shots; registers seen fewer than `min_count` times are
/// treated as unsupported.
inline std::vector<double> cost_gradient_shots(const QuboProblem& q, const Circuit& circuit,
                                               std::span<const double> theta, const StateVector& initial,
                                               const EncodingLayout& layout, std::size_t shots, Rng& rng,
                                               std::size_t min_count = 1) {
  if (shots == 0) throw InputError("cost_gradient_shots: shots must be positive");
  const StateVector state = run_circuit(circuit, theta, initial);
  const auto outcomes = sample(state, shots, rng);
  const SolutionDistribution dist = extract_shots(outcomes, layout, min_count);
  const ShotTally t = tally_shots(outcomes, layout);
  EncodingMasses masses{std::vector<double>(layout.n_vars), std::vector<double>(layout.n_vars)};
  for (std::size_t i = 0; i < layout.n_vars; ++i) {
    masses.joint1[i] = static_cast<double>(t.ones[i]) / static_cast<double>(shots);
    masses.reg[i] = static_cast<double>(t.total[i]) / static_cast<double>(shots);
  }
  return assemble_gradient(q, masses, dist, shifted_masses(circuit, theta, initial, layout, shots, &rng));
}

}  // namespace quenc
