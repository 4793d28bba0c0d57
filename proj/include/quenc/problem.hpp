#pragma once

// Classical problem models: weighted MaxCut graphs, upper-triangular QUBO
// matrices and Ising spin glasses, with conversions and cost evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quenc/errors.hpp"
#include "quenc/rng.hpp"

namespace quenc {

/// Binary assignment, one byte per variable (0 or 1). Index 0 prints first.
using Bitstring = std::vector<std::uint8_t>;

inline std::string to_string(const Bitstring& x) {
  std::string s;
  s.reserve(x.size());
  for (auto b : x) s.push_back(b ? '1' : '0');
  return s;
}

inline Bitstring bitstring_from_string(const std::string& s) {
  Bitstring x;
  x.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw InputError("bitstring may only contain 0 and 1: '" + s + "'");
    x.push_back(static_cast<std::uint8_t>(c == '1'));
  }
  return x;
}

/// Bits of `value`, least-significant first, as an n-variable assignment.
inline Bitstring bitstring_from_index(std::uint64_t value, std::size_t n) {
  Bitstring x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((value >> i) & 1u);
  return x;
}

struct Edge {
  std::size_t i;
  std::size_t j;
  double weight;
};

/// Undirected weighted graph. Weights are nonnegative; at most one edge per
/// unordered pair; no self-loops.
class MaxCutGraph {
 public:
  explicit MaxCutGraph(std::size_t nodes) : nodes_(nodes) {
    if (nodes == 0) throw InputError("graph must have at least one node");
  }

  void add_edge(std::size_t i, std::size_t j, double weight) {
    if (i >= nodes_ || j >= nodes_)
      throw InputError("edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    if (i == j) throw InputError("self-loop on node " + std::to_string(i));
    if (!std::isfinite(weight) || weight < 0.0)
      throw InputError("edge weight must be finite and nonnegative");
    if (i > j) std::swap(i, j);
    for (const auto& e : edges_)
      if (e.i == i && e.j == j)
        throw InputError("duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    edges_.push_back({i, j, weight});
  }

  std::size_t size() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

 private:
  std::size_t nodes_;
  std::vector<Edge> edges_;
};

/// QUBO objective x^T Q x with Q stored as a packed upper triangle.
class QuboProblem {
 public:
  explicit QuboProblem(std::size_t n) : n_(n), packed_(n * (n + 1) / 2, 0.0) {
    if (n == 0) throw InputError("QUBO must have at least one variable");
  }

  std::size_t size() const noexcept { return n_; }

  /// Q_ij for i <= j; zero below the diagonal.
  double operator()(std::size_t i, std::size_t j) const {
    if (i > j) return 0.0;
    return packed_[offset(i, j)];
  }

  void set(std::size_t i, std::size_t j, double value) {
    check_index(i, j);
    if (i > j) throw InputError("QUBO entries are upper-triangular (i <= j)");
    packed_[offset(i, j)] = value;
  }

  /// Accumulates into the upper-triangular slot of the unordered pair.
  void add(std::size_t i, std::size_t j, double value) {
    check_index(i, j);
    if (i > j) std::swap(i, j);
    packed_[offset(i, j)] += value;
  }

  double cost(std::span<const std::uint8_t> x) const {
    if (x.size() != n_)
      throw InputError("bitstring length " + std::to_string(x.size()) + " != " + std::to_string(n_));
    double c = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!x[i]) continue;
      const double* row = &packed_[offset(i, i)];
      c += row[0];
      for (std::size_t j = i + 1; j < n_; ++j)
        if (x[j]) c += row[j - i];
    }
    return c;
  }

  /// Dense symmetric coupling matrix S with S_ij = S_ji = Q_ij (i < j) and
  /// S_ii = Q_ii, row-major. Transient helper for incremental evaluators.
  std::vector<double> symmetric_dense() const {
    std::vector<double> s(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) {
        const double q = packed_[offset(i, j)];
        s[i * n_ + j] = q;
        s[j * n_ + i] = q;
      }
    return s;
  }

  bool operator==(const QuboProblem& other) const {
    return n_ == other.n_ && packed_ == other.packed_ && known_optimum == other.known_optimum;
  }

  std::optional<double> known_optimum;

 private:
  std::size_t offset(std::size_t i, std::size_t j) const noexcept {
    return i * n_ - (i * (i + 1)) / 2 + j;
  }

  void check_index(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_)
      throw InputError("QUBO index (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
  }

  std::size_t n_;
  std::vector<double> packed_;
};

/// Q_ij = 2 d_ij on the upper triangle and Q_ii = -sum_j d_ij, so that
/// x^T Q x equals the cut energy -sum_edges d_ij (x_i - x_j)^2.
inline QuboProblem graph_to_qubo(const MaxCutGraph& g) {
  QuboProblem q(g.size());
  for (const auto& e : g.edges()) {
    q.add(e.i, e.j, 2.0 * e.weight);
    q.add(e.i, e.i, -e.weight);
    q.add(e.j, e.j, -e.weight);
  }
  return q;
}

inline double maxcut_energy(const MaxCutGraph& g, std::span<const std::uint8_t> x) {
  if (x.size() != g.size())
    throw InputError("bitstring length " + std::to_string(x.size()) + " != " + std::to_string(g.size()));
  double e = 0.0;
  for (const auto& edge : g.edges())
    if (x[edge.i] != x[edge.j]) e -= edge.weight;
  return e;
}

inline double qubo_cost(const QuboProblem& q, std::span<const std::uint8_t> x) { return q.cost(x); }

/// H(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j, each coupling stored once.
class IsingModel {
 public:
  explicit IsingModel(std::size_t spins) : h_(spins, 0.0), coupling_(spins) {}

  std::size_t size() const noexcept { return h_.size(); }

  void set_field(std::size_t i, double value) { h_.at(i) = value; }
  double field(std::size_t i) const { return h_.at(i); }

  void set_coupling(std::size_t i, std::size_t j, double value) {
    if (i == j) throw InputError("Ising model has no self-couplings");
    coupling_.set(std::min(i, j), std::max(i, j), value);
  }
  double coupling(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return coupling_(std::min(i, j), std::max(i, j));
  }

  /// Spins are +1/-1, passed as signed bytes.
  double energy(std::span<const std::int8_t> s) const {
    const std::size_t n = size();
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e += h_[i] * s[i];
      for (std::size_t j = i + 1; j < n; ++j) e += coupling_(i, j) * s[i] * s[j];
    }
    return e;
  }

 private:
  std::vector<double> h_;
  QuboProblem coupling_;  // reused as upper-triangular storage, diagonal unused
};

struct IsingReduction {
  QuboProblem qubo;
  std::size_t ancilla;  // index of the added spin in the lifted model
  double offset;        // H_g(s) = qubo.cost(x) + offset with x = (s + 1) / 2
};

/// Lifts the fields into couplings to one extra spin a (J_ia = h_i), giving a
/// purely quadratic spin glass, then maps spins to bits via x = (s + 1) / 2.
inline IsingReduction ising_to_maxcut(const IsingModel& m) {
  const std::size_t n = m.size();
  const std::size_t a = n;
  QuboProblem q(n + 1);
  double offset = 0.0;
  auto couple = [&](std::size_t i, std::size_t j, double J) {
    if (J == 0.0) return;
    // s_i s_j = 4 x_i x_j - 2 x_i - 2 x_j + 1
    q.add(i, j, 4.0 * J);
    q.add(i, i, -2.0 * J);
    q.add(j, j, -2.0 * J);
    offset += J;
  };
  for (std::size_t i = 0; i < n; ++i) {
    couple(i, a, m.field(i));
    for (std::size_t j = i + 1; j < n; ++j) couple(i, j, m.coupling(i, j));
  }
  return {std::move(q), a, offset};
}

/// (c - c_glob) / (c_rand - c_glob): 0 at the optimum, 1 at random quality.
inline double normalized_cost(double c, double c_glob, double c_rand) {
  const double denom = c_rand - c_glob;
  if (denom == 0.0 || !std::isfinite(denom))
    throw std::domain_error("normalized_cost: c_rand equals c_glob");
  return (c - c_glob) / denom;
}

/// Complete graph with i.i.d. uniform weights in [lo, hi); edges in (i, j)
/// lexicographic order.
inline MaxCutGraph random_complete_graph(std::size_t n, std::uint64_t seed, double lo = 0.01,
                                         double hi = 1.0) {
  if (n < 2) throw InputError("random_complete_graph needs at least 2 nodes");
  if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw InputError("invalid weight range");
  Rng rng(seed);
  MaxCutGraph g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j, uniform(rng, lo, hi));
  return g;
}

/// Star graph: node 0 joined to every other node with unit weight.
inline MaxCutGraph star_graph(std::size_t n) {
  MaxCutGraph g(n);
  for (std::size_t j = 1; j < n; ++j) g.add_edge(0, j, 1.0);
  return g;
}

inline Bitstring random_bitstring(std::size_t n, Rng& rng) {
  Bitstring x(n);
  for (auto& b : x) b = static_cast<std::uint8_t>(rng() >> 63);
  return x;
}

/// Mean cost of `samples` seeded uniform-random bitstrings (C_rand estimate).
inline double random_bitstring_mean_cost(const QuboProblem& q, std::uint64_t seed,
                                         std::size_t samples = 1000) {
  Rng rng(seed);
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) total += q.cost(random_bitstring(q.size(), rng));
  return total / static_cast<double>(samples);
}

}  // namespace quenc
