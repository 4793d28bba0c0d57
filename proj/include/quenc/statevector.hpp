#pragma once

// Dense state-vector simulator.
//
// Qubit ordering is little-endian: qubit q is bit q of the basis index, so
// qubit 0 is the least-significant bit. Every register-index encoding in the
// library relies on this.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quenc/errors.hpp"
#include "quenc/rng.hpp"

namespace quenc {

using Amplitude = std::complex<double>;

enum class GateKind { RY, RZ, H, X, SWAP, CNOT, MCX };

inline const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::SWAP: return "SWAP";
    case GateKind::CNOT: return "CNOT";
    case GateKind::MCX: return "MCX";
  }
  return "?";
}

inline bool is_parameterized(GateKind k) { return k == GateKind::RY || k == GateKind::RZ; }

/// One gate. RY(t) = exp(-i t Y / 2), RZ(t) = exp(-i t Z / 2). `slot` indexes
/// the parameter vector and is present exactly for RY/RZ.
struct Gate {
  GateKind kind;
  std::vector<int> targets;
  std::vector<int> controls;
  std::optional<std::size_t> slot;

  static Gate ry(int q, std::size_t slot) { return {GateKind::RY, {q}, {}, slot}; }
  static Gate rz(int q, std::size_t slot) { return {GateKind::RZ, {q}, {}, slot}; }
  static Gate h(int q) { return {GateKind::H, {q}, {}, std::nullopt}; }
  static Gate x(int q) { return {GateKind::X, {q}, {}, std::nullopt}; }
  static Gate swap(int a, int b) { return {GateKind::SWAP, {a, b}, {}, std::nullopt}; }
  static Gate cnot(int control, int target) { return {GateKind::CNOT, {target}, {control}, std::nullopt}; }
  static Gate mcx(std::vector<int> controls, int target) {
    return {GateKind::MCX, {target}, std::move(controls), std::nullopt};
  }

  bool operator==(const Gate&) const = default;
};

/// Throws InputError unless `g` is well formed on `n_qubits` qubits.
inline void validate_gate(const Gate& g, int n_qubits) {
  const std::size_t want_targets = g.kind == GateKind::SWAP ? 2 : 1;
  if (g.targets.size() != want_targets)
    throw InputError(std::string(gate_name(g.kind)) + ": wrong number of targets");
  if (g.kind == GateKind::CNOT && g.controls.size() != 1)
    throw InputError("CNOT needs exactly one control");
  if (g.kind != GateKind::CNOT && g.kind != GateKind::MCX && !g.controls.empty())
    throw InputError(std::string(gate_name(g.kind)) + " takes no controls");
  if (is_parameterized(g.kind) != g.slot.has_value())
    throw InputError(std::string(gate_name(g.kind)) + ": parameter slot mismatch");
  std::vector<int> all = g.targets;
  all.insert(all.end(), g.controls.begin(), g.controls.end());
  for (int q : all)
    if (q < 0 || q >= n_qubits)
      throw InputError(std::string(gate_name(g.kind)) + ": qubit " + std::to_string(q) + " out of range");
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw InputError(std::string(gate_name(g.kind)) + ": repeated qubit");
}

/// Ordered gate list over a fixed qubit count. Each parameter slot drives at
/// most one gate; `slot_gate(j)` maps slot j to that gate's position.
class Circuit {
 public:
  explicit Circuit(int n_qubits, std::size_t n_params = 0)
      : n_qubits_(n_qubits), slot_gate_(n_params) {
    if (n_qubits < 1 || n_qubits > 30) throw InputError("circuit qubit count out of range");
  }

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t n_params() const noexcept { return slot_gate_.size(); }
  const std::vector<Gate>& gates() const noexcept { return gates_; }

  /// Gate position driven by parameter slot j, if any gate uses it.
  std::optional<std::size_t> slot_gate(std::size_t j) const { return slot_gate_.at(j); }

  void add(Gate g) {
    validate_gate(g, n_qubits_);
    if (g.slot) {
      if (*g.slot >= slot_gate_.size()) slot_gate_.resize(*g.slot + 1);
      if (slot_gate_[*g.slot]) throw InputError("parameter slot used by more than one gate");
      slot_gate_[*g.slot] = gates_.size();
    }
    gates_.push_back(std::move(g));
  }

  void append(std::span<const Gate> gates) {
    for (const auto& g : gates) add(g);
  }

  /// Same gates on a register of `n_qubits` >= current width.
  Circuit widened(int n_qubits) const {
    if (n_qubits < n_qubits_) throw InputError("cannot narrow a circuit");
    Circuit c = *this;
    c.n_qubits_ = n_qubits;
    return c;
  }

 private:
  int n_qubits_;
  std::vector<Gate> gates_;
  std::vector<std::optional<std::size_t>> slot_gate_;
};

/// Length-2^n amplitude array.
class StateVector {
 public:
  /// |0...0>
  explicit StateVector(int n_qubits) : StateVector(n_qubits, 0) {}

  StateVector(int n_qubits, std::uint64_t basis_index) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 30) throw InputError("state qubit count out of range");
    amps_.assign(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0});
    if (basis_index >= amps_.size()) throw InputError("basis index out of range");
    amps_[basis_index] = 1.0;
  }

  /// Takes ownership of amplitudes; they must be unit norm within 1e-10.
  static StateVector from_amplitudes(int n_qubits, std::vector<Amplitude> amps) {
    StateVector s(n_qubits);
    if (amps.size() != s.amps_.size()) throw InputError("amplitude count does not match qubit count");
    s.amps_ = std::move(amps);
    if (std::abs(s.norm() - 1.0) > 1e-10) throw InputError("amplitudes are not normalized");
    return s;
  }

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t dimension() const noexcept { return amps_.size(); }
  std::span<Amplitude> amplitudes() noexcept { return amps_; }
  std::span<const Amplitude> amplitudes() const noexcept { return amps_; }
  Amplitude operator[](std::size_t i) const { return amps_[i]; }

  double norm() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return std::sqrt(s);
  }

  std::vector<double> probabilities() const {
    std::vector<double> p(amps_.size());
    for (std::size_t i = 0; i < amps_.size(); ++i) p[i] = std::norm(amps_[i]);
    return p;
  }

 private:
  int n_qubits_;
  std::vector<Amplitude> amps_;
};

/// <a|b>
inline Amplitude inner_product(const StateVector& a, const StateVector& b) {
  if (a.dimension() != b.dimension()) throw InputError("inner_product: dimension mismatch");
  Amplitude s{0.0, 0.0};
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

inline double fidelity(const StateVector& a, const StateVector& b) { return std::norm(inner_product(a, b)); }

namespace detail {

template <typename PairOp>
void for_each_pair(std::span<Amplitude> amps, int target, std::uint64_t control_mask, PairOp&& op) {
  const std::size_t stride = std::size_t{1} << target;
  const std::size_t dim = amps.size();
  for (std::size_t base = 0; base < dim; base += 2 * stride)
    for (std::size_t i = base; i < base + stride; ++i)
      if ((i & control_mask) == control_mask) op(amps[i], amps[i + stride]);
}

/// Gate kernel without validation; callers guarantee `g` fits the state.
inline void apply_unchecked(StateVector& state, const Gate& g, std::span<const double> theta) {
  auto amps = state.amplitudes();
  const int t = g.targets[0];
  switch (g.kind) {
    case GateKind::RY: {
      if (*g.slot >= theta.size()) throw InputError("RY: missing parameter");
      const double c = std::cos(theta[*g.slot] / 2), s = std::sin(theta[*g.slot] / 2);
      detail::for_each_pair(amps, t, 0, [c, s](Amplitude& a0, Amplitude& a1) {
        const Amplitude x0 = a0, x1 = a1;
        a0 = c * x0 - s * x1;
        a1 = s * x0 + c * x1;
      });
      break;
    }
    case GateKind::RZ: {
      if (*g.slot >= theta.size()) throw InputError("RZ: missing parameter");
      const Amplitude lo = std::polar(1.0, -theta[*g.slot] / 2);
      const Amplitude hi = std::conj(lo);
      detail::for_each_pair(amps, t, 0, [lo, hi](Amplitude& a0, Amplitude& a1) {
        a0 *= lo;
        a1 *= hi;
      });
      break;
    }
    case GateKind::H: {
      static constexpr double r = 0.70710678118654752440;
      detail::for_each_pair(amps, t, 0, [](Amplitude& a0, Amplitude& a1) {
        const Amplitude x0 = a0, x1 = a1;
        a0 = r * (x0 + x1);
        a1 = r * (x0 - x1);
      });
      break;
    }
    case GateKind::X:
    case GateKind::CNOT:
    case GateKind::MCX: {
      std::uint64_t mask = 0;
      for (int c : g.controls) mask |= std::uint64_t{1} << c;
      detail::for_each_pair(amps, t, mask, [](Amplitude& a0, Amplitude& a1) { std::swap(a0, a1); });
      break;
    }
    case GateKind::SWAP: {
      const std::size_t ba = std::size_t{1} << g.targets[0];
      const std::size_t bb = std::size_t{1} << g.targets[1];
      for (std::size_t i = 0; i < amps.size(); ++i)
        if ((i & ba) && !(i & bb)) std::swap(amps[i], amps[i ^ ba ^ bb]);
      break;
    }
  }
}

}  // namespace detail

/// Applies `g` in place. Parameterized gates read theta[*g.slot].
inline void apply(StateVector& state, const Gate& g, std::span<const double> theta) {
  validate_gate(g, state.n_qubits());
  detail::apply_unchecked(state, g, theta);
}

/// Applies gates [first, last) of `circuit` in order.
inline void run_range(StateVector& state, const Circuit& circuit, std::span<const double> theta,
                      std::size_t first, std::size_t last) {
  if (state.n_qubits() != circuit.n_qubits()) throw InputError("run_range: qubit count mismatch");
  if (theta.size() < circuit.n_params()) throw InputError("run_range: too few parameters");
  const auto& gates = circuit.gates();
  for (std::size_t k = first; k < last; ++k) detail::apply_unchecked(state, gates[k], theta);
}

inline StateVector run_circuit(const Circuit& circuit, std::span<const double> theta, StateVector initial) {
  if (initial.n_qubits() != circuit.n_qubits()) throw InputError("run_circuit: qubit count mismatch");
  if (theta.size() < circuit.n_params()) throw InputError("run_circuit: too few parameters");
  run_range(initial, circuit, theta, 0, circuit.gates().size());
  return initial;
}

inline StateVector run_circuit(const Circuit& circuit, std::span<const double> theta) {
  return run_circuit(circuit, theta, StateVector(circuit.n_qubits()));
}

/// k i.i.d. basis-index draws from |amp|^2 by inverse-CDF lookup.
inline std::vector<std::uint64_t> sample(const StateVector& state, std::size_t k, Rng& rng) {
  if (k == 0) throw InputError("sample: shot count must be positive");
  std::vector<double> cdf(state.dimension());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    acc += std::norm(state[i]);
    cdf[i] = acc;
  }
  std::vector<std::uint64_t> out(k);
  for (auto& o : out) {
    const double u = uniform01(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    o = static_cast<std::uint64_t>(it - cdf.begin());
  }
  return out;
}

inline std::vector<std::uint64_t> sample(const StateVector& state, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  return sample(state, k, rng);
}

/// Total |amp|^2 over basis indices with (index & mask) == value.
inline double projector_mass(const StateVector& state, std::uint64_t mask, std::uint64_t value) {
  double s = 0.0;
  for (std::size_t i = 0; i < state.dimension(); ++i)
    if ((i & mask) == value) s += std::norm(state[i]);
  return s;
}

/// Measures `qubit`, keeps outcome `value` and renormalizes. Returns the
/// post-selected state and the probability of that outcome.
inline std::pair<StateVector, double> postselect(const StateVector& state, int qubit, int value,
                                                 double min_probability = 1e-14) {
  if (qubit < 0 || qubit >= state.n_qubits()) throw InputError("postselect: qubit out of range");
  if (value != 0 && value != 1) throw InputError("postselect: value must be 0 or 1");
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  const double p = projector_mass(state, bit, value ? bit : 0);
  if (p <= min_probability)
    throw PostselectionError("postselect: outcome " + std::to_string(value) + " on qubit " +
                                 std::to_string(qubit) + " has zero probability",
                             p);
  StateVector out = state;
  const double scale = 1.0 / std::sqrt(p);
  auto amps = out.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (((i & bit) != 0) != (value == 1))
      amps[i] = 0.0;
    else
      amps[i] *= scale;
  }
  return {std::move(out), p};
}

/// <psi| (|v><v|_ancilla (x) |i><i|_register) |psi> for the minimal-encoding
/// layout: ancilla on qubit 0, register on qubits [1, n).
inline double projector_expectation(const StateVector& state, int ancilla_value, std::uint64_t register_index) {
  const int reg_bits = state.n_qubits() - 1;
  if (register_index >= (std::uint64_t{1} << reg_bits)) throw InputError("register index out of range");
  const std::uint64_t index = (register_index << 1) | std::uint64_t(ancilla_value ? 1 : 0);
  return std::norm(state[index]);
}

}  // namespace quenc
