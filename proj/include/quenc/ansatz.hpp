#pragma once

// Hardware-efficient circuit templates for the minimal encoding.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "quenc/errors.hpp"
#include "quenc/statevector.hpp"

namespace quenc {

enum class AnsatzFamily { Sequential2QG, Simultaneous2QG, WarmStart };

inline std::string_view family_name(AnsatzFamily f) {
  switch (f) {
    case AnsatzFamily::Sequential2QG: return "sequential";
    case AnsatzFamily::Simultaneous2QG: return "simultaneous";
    case AnsatzFamily::WarmStart: return "warmstart";
  }
  return "?";
}

inline AnsatzFamily family_from_name(std::string_view name) {
  if (name == "seq" || name == "sequential") return AnsatzFamily::Sequential2QG;
  if (name == "sim" || name == "simultaneous") return AnsatzFamily::Simultaneous2QG;
  if (name == "warm" || name == "warmstart") return AnsatzFamily::WarmStart;
  throw InputError("unknown ansatz family '" + std::string(name) + "'");
}

struct AnsatzSpec {
  AnsatzFamily family = AnsatzFamily::Sequential2QG;
  int n_qubits = 2;
  int layers = 1;
};

/// Hadamard on every qubit, then per layer one RY per qubit followed by the
/// CNOT chain 0->1->...->n-1. n_params = layers * n_qubits.
inline Circuit build_sequential(int n_qubits, int layers) {
  if (n_qubits < 2) throw InputError("sequential ansatz needs at least 2 qubits");
  if (layers < 1) throw InputError("ansatz needs at least one layer");
  Circuit c(n_qubits, static_cast<std::size_t>(layers) * n_qubits);
  for (int q = 0; q < n_qubits; ++q) c.add(Gate::h(q));
  std::size_t slot = 0;
  for (int l = 0; l < layers; ++l) {
    for (int q = 0; q < n_qubits; ++q) c.add(Gate::ry(q, slot++));
    for (int q = 0; q + 1 < n_qubits; ++q) c.add(Gate::cnot(q, q + 1));
  }
  return c;
}

/// Brick-wall layers: rotations on every qubit (RY on odd layers, RZ on even
/// ones, counting from 1), then CNOTs on pairs (0,1),(2,3),... followed by
/// (1,2),(3,4),... Depth per layer does not grow with the qubit count.
inline Circuit build_simultaneous(int n_qubits, int layers) {
  if (n_qubits < 2) throw InputError("simultaneous ansatz needs at least 2 qubits");
  if (layers < 1) throw InputError("ansatz needs at least one layer");
  Circuit c(n_qubits, static_cast<std::size_t>(layers) * n_qubits);
  std::size_t slot = 0;
  for (int l = 1; l <= layers; ++l) {
    for (int q = 0; q < n_qubits; ++q) c.add(l % 2 == 1 ? Gate::ry(q, slot++) : Gate::rz(q, slot++));
    for (int q = 0; q + 1 < n_qubits; q += 2) c.add(Gate::cnot(q, q + 1));
    for (int q = 1; q + 1 < n_qubits; q += 2) c.add(Gate::cnot(q, q + 1));
  }
  return c;
}

/// Identity at theta = 0: no Hadamards, and each odd layer runs its CNOT
/// chain in the reverse order of the preceding even layer.
inline Circuit build_warmstart(int n_qubits, int layers) {
  if (n_qubits < 2) throw InputError("warm-start ansatz needs at least 2 qubits");
  if (layers < 2 || layers % 2 != 0) throw InputError("warm-start ansatz needs an even layer count >= 2");
  Circuit c(n_qubits, static_cast<std::size_t>(layers) * n_qubits);
  std::size_t slot = 0;
  for (int l = 0; l < layers; ++l) {
    for (int q = 0; q < n_qubits; ++q) c.add(Gate::ry(q, slot++));
    if (l % 2 == 0)
      for (int q = 0; q + 1 < n_qubits; ++q) c.add(Gate::cnot(q, q + 1));
    else
      for (int q = n_qubits - 2; q >= 0; --q) c.add(Gate::cnot(q, q + 1));
  }
  return c;
}

inline Circuit build_ansatz(const AnsatzSpec& spec) {
  switch (spec.family) {
    case AnsatzFamily::Sequential2QG: return build_sequential(spec.n_qubits, spec.layers);
    case AnsatzFamily::Simultaneous2QG: return build_simultaneous(spec.n_qubits, spec.layers);
    case AnsatzFamily::WarmStart: return build_warmstart(spec.n_qubits, spec.layers);
  }
  throw InputError("unknown ansatz family");
}

/// Register qubits needed for n_vars variables: ceil(log2 n_vars), at least 1.
inline int register_qubits_for(std::size_t n_vars) {
  if (n_vars < 2) throw InputError("the encoding needs at least 2 variables");
  int bits = 0;
  while ((std::size_t{1} << bits) < n_vars) ++bits;
  return bits;
}

/// sum_i 2^{-r/2} |x_i>_a |i>_r over the 2^r padded register indices, with
/// the ancilla on qubit 0 and the register on qubits 1..r; padded entries
/// (i >= x.size()) carry x_i = 0. Written directly into the state.
inline StateVector prepare_warmstart_state(std::span<const std::uint8_t> x, int extra_qubits = 0) {
  const int reg = register_qubits_for(x.size());
  const std::size_t n_reg_states = std::size_t{1} << reg;
  StateVector s(reg + 1 + extra_qubits);
  auto amps = s.amplitudes();
  amps[0] = 0.0;
  const double beta = 1.0 / std::sqrt(static_cast<double>(n_reg_states));
  for (std::size_t i = 0; i < n_reg_states; ++i) {
    const bool bit = i < x.size() && x[i];
    amps[(i << 1) | (bit ? 1u : 0u)] = beta;
  }
  return s;
}

}  // namespace quenc
