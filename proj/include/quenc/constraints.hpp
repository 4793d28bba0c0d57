#pragma once

// Circuit-level encoding of x_i + x_j = 1 constraints.
//
// Each constraint gets its own ancilla. Its block flips that ancilla exactly
// on the unfeasible subspace of the (ancilla, register i/j) amplitudes, so
// keeping only shots with every constraint ancilla at 0 projects the state
// onto the feasible subspace.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quenc/errors.hpp"
#include "quenc/objective.hpp"
#include "quenc/statevector.hpp"

namespace quenc {

/// x_i + x_j = 1
struct Constraint {
  std::size_t i;
  std::size_t j;

  bool operator==(const Constraint&) const = default;
};

/// Indices in range, i != j, and no variable shared between constraints.
inline void validate_constraints(std::span<const Constraint> constraints, std::size_t n_vars) {
  std::vector<std::uint8_t> used(n_vars, 0);
  for (const auto& c : constraints) {
    if (c.i >= n_vars || c.j >= n_vars)
      throw InputError("constraint (" + std::to_string(c.i) + "," + std::to_string(c.j) + ") out of range");
    if (c.i == c.j) throw InputError("constraint needs two distinct variables");
    if (used[c.i] || used[c.j])
      throw InputError("constraints may not share variables (variable " +
                       std::to_string(used[c.i] ? c.i : c.j) + ")");
    used[c.i] = used[c.j] = 1;
  }
}

/// Adjoint of a sequence of fixed (self-inverse) gates: the reversed list.
inline std::vector<Gate> inverse_sequence(std::span<const Gate> gates) {
  std::vector<Gate> inv(gates.rbegin(), gates.rend());
  for (const auto& g : inv)
    if (g.slot) throw InputError("inverse_sequence: parameterized gates are not supported");
  return inv;
}

/// Bell-basis change on (register qubit r, algorithm ancilla a):
///   (|0_a 0_r> + |1_a 1_r>)/sqrt2 -> |0_r 0_a>    (|0_a 1_r> + |1_a 0_r>)/sqrt2 -> |0_r 1_a>
///   (|0_a 0_r> - |1_a 1_r>)/sqrt2 -> |1_r 0_a>    (|0_a 1_r> - |1_a 0_r>)/sqrt2 -> |1_r 1_a>
/// CNOT(r->a) and H(r) separate the Bell states; the trailing H-CNOT-H is a
/// CZ that fixes the sign of the last one.
inline std::vector<Gate> build_A_block(int register_qubit, int ancilla) {
  if (register_qubit == ancilla) throw InputError("A block needs two distinct qubits");
  return {Gate::cnot(register_qubit, ancilla), Gate::h(register_qubit), Gate::h(ancilla),
          Gate::cnot(register_qubit, ancilla), Gate::h(ancilla)};
}

/// Register permutation sending basis states |i> -> |0> and |j> -> |1> on
/// register qubits [first, first + n_register), bit k on qubit first + k:
///   1. d = lowest bit where i and j differ
///   2. SWAP(q_d, q_0)
///   3. X on every qubit where (swapped) i has a 1, so i -> 0
///   4. CNOT(q_0 -> q_k) for every other bit k set in the transformed j
/// The inverse is the reversed sequence.
inline std::vector<Gate> remap_indices(std::uint64_t i, std::uint64_t j, int n_register, int first = 0) {
  if (i == j) throw InputError("remap_indices: i and j must differ");
  const std::uint64_t limit = std::uint64_t{1} << n_register;
  if (i >= limit || j >= limit) throw InputError("remap_indices: index out of range for register");
  std::vector<Gate> seq;
  int d = 0;
  while (((i ^ j) >> d & 1u) == 0) ++d;
  auto swap_bits = [d](std::uint64_t v) {
    const std::uint64_t b0 = v & 1u, bd = (v >> d) & 1u;
    v &= ~((std::uint64_t{1} << d) | 1u);
    return v | (b0 << d) | bd;
  };
  if (d != 0) {
    seq.push_back(Gate::swap(first, first + d));
    i = swap_bits(i);
    j = swap_bits(j);
  }
  for (int k = 0; k < n_register; ++k)
    if (i >> k & 1u) seq.push_back(Gate::x(first + k));
  j ^= i;
  for (int k = 1; k < n_register; ++k)
    if (j >> k & 1u) seq.push_back(Gate::cnot(first, first + k));
  return seq;
}

/// remap -> A -> (X-framed MCX onto the constraint ancilla, firing iff
/// q_0 = 1 and all other register qubits are 0) -> A^-1 -> remap^-1.
inline std::vector<Gate> build_constraint_block(const Constraint& c, const EncodingLayout& layout,
                                                int constraint_ancilla) {
  const int r = layout.register_qubits;
  if (constraint_ancilla <= r || constraint_ancilla >= layout.n_qubits())
    throw InputError("constraint ancilla must lie above the register");
  if (c.i >= layout.n_vars || c.j >= layout.n_vars || c.i == c.j) throw InputError("invalid constraint");

  const auto remap = remap_indices(c.i, c.j, r, layout.register_qubit(0));
  const auto a_block = build_A_block(layout.register_qubit(0), layout.ancilla());

  std::vector<Gate> frame;
  for (int k = 1; k < r; ++k) frame.push_back(Gate::x(layout.register_qubit(k)));
  std::vector<int> controls(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k) controls[k] = layout.register_qubit(k);

  std::vector<Gate> block = remap;
  block.insert(block.end(), a_block.begin(), a_block.end());
  block.insert(block.end(), frame.begin(), frame.end());
  block.push_back(Gate::mcx(std::move(controls), constraint_ancilla));
  block.insert(block.end(), frame.begin(), frame.end());
  const auto a_inv = inverse_sequence(a_block);
  block.insert(block.end(), a_inv.begin(), a_inv.end());
  const auto remap_inv = inverse_sequence(remap);
  block.insert(block.end(), remap_inv.begin(), remap_inv.end());
  return block;
}

/// Base ansatz (on register + algorithm ancilla) widened to the full layout
/// with one constraint block per constraint appended after it.
struct ConstrainedCircuit {
  Circuit circuit;
  EncodingLayout layout;
  std::vector<int> constraint_ancillas;
  std::size_t base_gate_count = 0;
};

inline ConstrainedCircuit build_constrained_circuit(const Circuit& base, std::size_t n_vars,
                                                    std::span<const Constraint> constraints) {
  validate_constraints(constraints, n_vars);
  EncodingLayout layout = EncodingLayout::for_vars(n_vars, static_cast<int>(constraints.size()));
  if (base.n_qubits() != layout.register_qubits + 1)
    throw InputError("base ansatz must act on register + ancilla qubits");
  ConstrainedCircuit out{base.widened(layout.n_qubits()), layout, {}, base.gates().size()};
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const int anc = layout.constraint_ancilla(static_cast<int>(k));
    out.constraint_ancillas.push_back(anc);
    out.circuit.append(build_constraint_block(constraints[k], layout, anc));
  }
  return out;
}

/// Post-selects every constraint ancilla on 0; returns the state and the
/// overall success probability.
inline std::pair<StateVector, double> postselect_feasible(const StateVector& state, std::span<const int> ancillas,
                                                          double min_probability = 1e-14) {
  StateVector s = state;
  double total = 1.0;
  for (int q : ancillas) {
    auto [next, p] = postselect(s, q, 0, min_probability);
    s = std::move(next);
    total *= p;
  }
  return {std::move(s), total};
}

/// Decode that honours each constraint: of the pair, the variable with the
/// larger p1 is set (ties to x_j), the other cleared. On an exactly
/// post-selected state p1[i] + p1[j] = 1, so this agrees with plain decode.
inline Bitstring decode_feasible(const SolutionDistribution& d, std::span<const Constraint> constraints) {
  Bitstring x = decode(d);
  for (const auto& c : constraints) {
    const bool xi = d.p1[c.i] > d.p1[c.j];
    x[c.i] = xi;
    x[c.j] = !xi;
  }
  return x;
}

inline bool satisfies(std::span<const std::uint8_t> x, std::span<const Constraint> constraints) {
  return std::all_of(constraints.begin(), constraints.end(),
                     [&](const Constraint& c) { return x[c.i] + x[c.j] == 1; });
}

}  // namespace quenc
