#pragma once

// Readout of the minimal encoding and the relaxed QUBO cost.
//
// Layout: algorithm ancilla on qubit 0, register qubits [1, r], constraint
// ancillas on qubits r+1 and up, so basis index = a | (i << 1) | (c << (r+1)).
// Register index i is variable x_i; the conditional probability of
// ancilla = 1 given register i is Pr(x_i = 1). With the ancilla at the head
// of the ansatz CNOT chain it steers every register qubit.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quenc/ansatz.hpp"
#include "quenc/errors.hpp"
#include "quenc/problem.hpp"
#include "quenc/statevector.hpp"

namespace quenc {

struct EncodingLayout {
  std::size_t n_vars = 2;
  int register_qubits = 1;
  int constraint_ancillas = 0;

  static EncodingLayout for_vars(std::size_t n_vars, int constraint_ancillas = 0) {
    return {n_vars, register_qubits_for(n_vars), constraint_ancillas};
  }

  int ancilla() const noexcept { return 0; }
  /// Qubit holding bit k of the register index.
  int register_qubit(int k) const noexcept { return 1 + k; }
  int constraint_ancilla(int k) const noexcept { return register_qubits + 1 + k; }
  int n_qubits() const noexcept { return register_qubits + 1 + constraint_ancillas; }
  std::size_t register_states() const noexcept { return std::size_t{1} << register_qubits; }
  /// Basis indices below this bound have every constraint ancilla at 0.
  std::size_t feasible_bound() const noexcept { return std::size_t{2} << register_qubits; }
};

/// Per-variable masses restricted to constraint ancillas = 0:
/// joint1[i] = Pr(ancilla = 1, register = i), reg[i] = Pr(register = i).
struct EncodingMasses {
  std::vector<double> joint1;
  std::vector<double> reg;
};

inline EncodingMasses encoding_masses(const StateVector& state, const EncodingLayout& layout) {
  if (state.n_qubits() != layout.n_qubits())
    throw InputError("state has " + std::to_string(state.n_qubits()) + " qubits, layout needs " +
                     std::to_string(layout.n_qubits()));
  EncodingMasses m{std::vector<double>(layout.n_vars, 0.0), std::vector<double>(layout.n_vars, 0.0)};
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < layout.n_vars; ++i) {
    const double p0 = std::norm(amps[i << 1]);
    const double p1 = std::norm(amps[(i << 1) | 1u]);
    m.joint1[i] = p1;
    m.reg[i] = p0 + p1;
  }
  return m;
}

/// p1[i] = Pr(x_i = 1). Entries whose register index carries no mass are set
/// to 0.5 and flagged unsupported. `counts` is filled in shot mode only.
struct SolutionDistribution {
  std::vector<double> p1;
  std::vector<std::uint8_t> unsupported;
  std::vector<std::size_t> counts;

  std::size_t size() const noexcept { return p1.size(); }
};

/// Registers with mass below this are treated as unobserved.
inline constexpr double kZeroMass = 1e-14;

inline SolutionDistribution distribution_from_masses(const EncodingMasses& m) {
  SolutionDistribution d;
  d.p1.resize(m.reg.size());
  d.unsupported.assign(m.reg.size(), 0);
  for (std::size_t i = 0; i < m.reg.size(); ++i) {
    if (m.reg[i] <= kZeroMass) {
      d.p1[i] = 0.5;
      d.unsupported[i] = 1;
    } else {
      d.p1[i] = std::min(1.0, std::max(0.0, m.joint1[i] / m.reg[i]));
    }
  }
  return d;
}

inline SolutionDistribution extract_exact(const StateVector& state, const EncodingLayout& layout) {
  return distribution_from_masses(encoding_masses(state, layout));
}

/// Unconstrained layout: state must have 1 + ceil(log2 n_vars) qubits.
inline SolutionDistribution extract_exact(const StateVector& state, std::size_t n_vars) {
  return extract_exact(state, EncodingLayout::for_vars(n_vars));
}

/// Shot tallies per register index, discarding shots with any constraint
/// ancilla at 1.
struct ShotTally {
  std::vector<std::size_t> ones;
  std::vector<std::size_t> total;
  std::size_t kept = 0;
};

inline ShotTally tally_shots(std::span<const std::uint64_t> outcomes, const EncodingLayout& layout) {
  ShotTally t{std::vector<std::size_t>(layout.n_vars, 0), std::vector<std::size_t>(layout.n_vars, 0), 0};
  const std::size_t rs = layout.register_states();
  const std::size_t bound = layout.feasible_bound();
  for (auto o : outcomes) {
    if (o >= bound) continue;
    ++t.kept;
    const std::size_t reg = (o >> 1) & (rs - 1);
    if (reg >= layout.n_vars) continue;
    ++t.total[reg];
    if (o & 1u) ++t.ones[reg];
  }
  return t;
}

/// Frequency estimate of p1. Register indices observed fewer than
/// `min_count` times fall back to 0.5 and are flagged.
inline SolutionDistribution extract_shots(std::span<const std::uint64_t> outcomes, const EncodingLayout& layout,
                                          std::size_t min_count = 1) {
  if (outcomes.empty()) throw InputError("extract_shots: empty outcome set");
  const ShotTally t = tally_shots(outcomes, layout);
  SolutionDistribution d;
  d.p1.resize(layout.n_vars);
  d.unsupported.assign(layout.n_vars, 0);
  d.counts = t.total;
  for (std::size_t i = 0; i < layout.n_vars; ++i) {
    if (t.total[i] < std::max<std::size_t>(min_count, 1)) {
      d.p1[i] = 0.5;
      d.unsupported[i] = 1;
    } else {
      d.p1[i] = static_cast<double>(t.ones[i]) / static_cast<double>(t.total[i]);
    }
  }
  return d;
}

inline SolutionDistribution extract_shots(std::span<const std::uint64_t> outcomes, std::size_t n_vars) {
  return extract_shots(outcomes, EncodingLayout::for_vars(n_vars));
}

/// sum_i Q_ii p_i + sum_{i<j} Q_ij p_i p_j, each stored pair counted once.
/// Equals x^T Q x whenever p is a 0/1 vertex.
inline double quenc_cost(const QuboProblem& q, std::span<const double> p1) {
  const std::size_t n = q.size();
  if (p1.size() != n) throw InputError("quenc_cost: distribution size does not match problem");
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = q(i, i);
    for (std::size_t j = i + 1; j < n; ++j) row += q(i, j) * p1[j];
    c += row * p1[i];
  }
  return c;
}

inline double quenc_cost(const QuboProblem& q, const SolutionDistribution& d) { return quenc_cost(q, d.p1); }

/// dC/dp_i = Q_ii + sum_{j != i} Q_{min(i,j),max(i,j)} p_j.
inline std::vector<double> quenc_cost_sensitivity(const QuboProblem& q, std::span<const double> p1) {
  const std::size_t n = q.size();
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = q(i, i);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double qij = q(i, j);
      if (qij == 0.0) continue;
      g[i] += qij * p1[j];
      g[j] += qij * p1[i];
    }
  return g;
}

/// x_i = 1 iff p1[i] > 0.5; ties go to 0.
inline Bitstring decode(const SolutionDistribution& d) {
  Bitstring x(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) x[i] = static_cast<std::uint8_t>(d.p1[i] > 0.5);
  return x;
}

}  // namespace quenc
