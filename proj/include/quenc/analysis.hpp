#pragma once

// Exhaustive optima and expressibility estimates.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "quenc/ansatz.hpp"
#include "quenc/constraints.hpp"
#include "quenc/errors.hpp"
#include "quenc/objective.hpp"
#include "quenc/parallel.hpp"
#include "quenc/problem.hpp"
#include "quenc/rng.hpp"
#include "quenc/statevector.hpp"

namespace quenc {

struct Optimum {
  Bitstring x;
  double cost = 0.0;
};

inline constexpr std::size_t kBruteForceCap = 24;

/// Exhaustive minimum of x^T Q x over all 2^n bitstrings. Costs within 1e-9
/// (relative) of each other count as ties, broken towards the
/// lexicographically smallest string (x_0 most significant).
inline Optimum brute_force_optimum(const QuboProblem& q) {
  const std::size_t n = q.size();
  if (n > kBruteForceCap)
    throw InputError("brute_force_optimum: " + std::to_string(n) + " variables exceeds the cap of " +
                     std::to_string(kBruteForceCap));
  if (n == 0) return {{}, 0.0};
  // Gray-code walk; `field[k]` is the cost change of setting x_k from 0 to 1.
  std::vector<double> field(n);
  for (std::size_t k = 0; k < n; ++k) field[k] = q(k, k);
  Bitstring x(n, 0);
  double cost = 0.0;
  double best = 0.0;
  std::uint64_t best_key = 0;  // x_0 in the top bit: numeric order == lexicographic order
  std::uint64_t key = 0;
  auto tol = [](double a) { return 1e-9 * std::max(1.0, std::abs(a)); };
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t step = 1; step < total; ++step) {
    const std::size_t k = static_cast<std::size_t>(std::countr_zero(step));
    const double sign = x[k] ? -1.0 : 1.0;
    cost += sign * field[k];
    x[k] ^= 1u;
    key ^= std::uint64_t{1} << (n - 1 - k);
    for (std::size_t j = 0; j < n; ++j)
      if (j != k) field[j] += sign * (j < k ? q(j, k) : q(k, j));
    if (cost < best - tol(best)) {
      best = cost;
      best_key = key;
    } else if (cost <= best + tol(best) && key < best_key) {
      best = std::min(best, cost);
      best_key = key;
    }
  }
  Optimum out;
  out.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.x[i] = static_cast<std::uint8_t>(best_key >> (n - 1 - i) & 1u);
  out.cost = q.cost(out.x);
  return out;
}

/// True when x^T Q x = (~x)^T Q (~x) for every x, as for MaxCut QUBOs:
/// each 2 Q_ii + sum_{j != i} Q_ij vanishes.
inline bool complement_symmetric(const QuboProblem& q, double tol = 1e-12) {
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 2.0 * q(i, i), scale = std::abs(q(i, i));
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) {
        const double v = j < i ? q(j, i) : q(i, j);
        s += v;
        scale += std::abs(v);
      }
    if (std::abs(s) > tol * std::max(1.0, scale)) return false;
  }
  return true;
}

inline constexpr std::size_t kExhaustiveCap = 40;

/// Exhaustive minimum for problems beyond the brute-force cap. Variables
/// split into a low block of up to 16 and a high block; for each high
/// assignment the low block is scanned through precomputed tables, so the
/// inner loop is one add-and-compare per assignment. The returned string is
/// an optimum; which one is unspecified.
inline Optimum exhaustive_optimum(const QuboProblem& q) {
  const std::size_t n = q.size();
  if (n > kExhaustiveCap) throw InputError("exhaustive_optimum: too many variables");
  if (n <= 16) return brute_force_optimum(q);
  const std::size_t nl = 16, nh = n - nl;
  constexpr std::size_t kLow = std::size_t{1} << 16;

  // cost restricted to the low block
  std::vector<double> c_low(kLow, 0.0);
  for (std::size_t m = 1; m < kLow; ++m) {
    const std::size_t k = static_cast<std::size_t>(std::countr_zero(m));
    const std::size_t rest = m & (m - 1);
    double d = q(k, k);
    for (std::size_t j = 0; j < nl; ++j)
      if (rest >> j & 1u) d += j < k ? q(j, k) : q(k, j);
    c_low[m] = c_low[rest] + d;
  }

  // With C(x) = C(~x) the top variable can be fixed to 0.
  const std::uint64_t n_high = std::uint64_t{1} << (complement_symmetric(q) ? nh - 1 : nh);
  const unsigned workers = std::max(1u, thread_count());
  struct Partial {
    double cost = std::numeric_limits<double>::infinity();
    std::uint64_t high = 0;
    std::size_t low = 0;
  };
  std::vector<Partial> partial(workers);
  parallel_for(workers, [&](std::size_t w) {
    std::vector<double> lin(nl), ta(256), tb(256), acc(256);
    Partial& best = partial[w];
    for (std::uint64_t h = w; h < n_high; h += workers) {
      double c_high = 0.0;
      std::fill(lin.begin(), lin.end(), 0.0);
      for (std::size_t a = 0; a < nh; ++a) {
        if (!(h >> a & 1u)) continue;
        const std::size_t ia = nl + a;
        c_high += q(ia, ia);
        for (std::size_t b = a + 1; b < nh; ++b)
          if (h >> b & 1u) c_high += q(ia, nl + b);
        for (std::size_t k = 0; k < nl; ++k) lin[k] += q(k, ia);
      }
      for (std::size_t m = 0; m < 256; ++m) {
        double sa = 0.0, sb = 0.0;
        for (std::size_t k = 0; k < 8; ++k)
          if (m >> k & 1u) {
            sa += lin[k];
            sb += lin[k + 8];
          }
        ta[m] = sa;
        tb[m] = sb + c_high;
      }
      // acc[a] = min_b c_low[b, a] + tb[b] is an element-wise min, which
      // vectorizes; the cross-lane minimum is then over 256 entries only.
      std::fill(acc.begin(), acc.end(), std::numeric_limits<double>::infinity());
      for (std::size_t b = 0; b < 256; ++b) {
        const double* row = &c_low[b << 8];
        const double shift = tb[b];
        for (std::size_t a = 0; a < 256; ++a) {
          const double v = row[a] + shift;
          acc[a] = v < acc[a] ? v : acc[a];
        }
      }
      double h_min = std::numeric_limits<double>::infinity();
      std::size_t a_min = 0;
      for (std::size_t a = 0; a < 256; ++a)
        if (acc[a] + ta[a] < h_min) {
          h_min = acc[a] + ta[a];
          a_min = a;
        }
      if (h_min < best.cost) {
        for (std::size_t b = 0; b < 256; ++b)
          if (c_low[(b << 8) | a_min] + tb[b] == acc[a_min]) {
            best = {h_min, h, (b << 8) | a_min};
            break;
          }
      }
    }
  });
  const auto it = std::min_element(partial.begin(), partial.end(),
                                   [](const Partial& a, const Partial& b) { return a.cost < b.cost; });
  Optimum out;
  out.x.resize(n);
  for (std::size_t k = 0; k < nl; ++k) out.x[k] = static_cast<std::uint8_t>(it->low >> k & 1u);
  for (std::size_t a = 0; a < nh; ++a) out.x[nl + a] = static_cast<std::uint8_t>(it->high >> a & 1u);
  out.cost = q.cost(out.x);
  return out;
}

/// Exhaustive minimum over bitstrings satisfying every x_i + x_j = 1
/// constraint; ties go to the lexicographically smallest string.
inline Optimum feasible_optimum(const QuboProblem& q, std::span<const Constraint> constraints) {
  const std::size_t n = q.size();
  if (n > kBruteForceCap) throw InputError("feasible_optimum: too many variables");
  validate_constraints(constraints, n);
  Optimum best{{}, std::numeric_limits<double>::infinity()};
  Bitstring x(n);
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>(m >> (n - 1 - i) & 1u);
    if (!satisfies(x, constraints)) continue;
    const double c = q.cost(x);
    if (c < best.cost - 1e-9 * std::max(1.0, std::abs(c))) best = {x, c};
  }
  return best;
}

/// Optimal cost by whichever exhaustive method is faster for the size.
inline Optimum exact_optimum(const QuboProblem& q) { return exhaustive_optimum(q); }

/// Histogram of fidelities over [0, 1] with uniform bins.
struct FidelityHistogram {
  std::vector<std::size_t> bins;
  std::size_t samples = 0;
  double n_dim = 2.0;

  FidelityHistogram(std::size_t n_bins, double dimension) : bins(n_bins, 0), n_dim(dimension) {
    if (n_bins == 0) throw InputError("histogram needs at least one bin");
  }

  void add(double f) {
    const auto b = static_cast<std::size_t>(std::clamp(f, 0.0, 1.0) * static_cast<double>(bins.size()));
    ++bins[std::min(b, bins.size() - 1)];
    ++samples;
  }

  void merge(const FidelityHistogram& other) {
    if (other.bins.size() != bins.size()) throw InputError("histogram bin counts differ");
    for (std::size_t b = 0; b < bins.size(); ++b) bins[b] += other.bins[b];
    samples += other.samples;
  }
};

/// Haar-random fidelity law in dimension N: density (N-1)(1-F)^(N-2), so bin
/// [a, b) carries (1-a)^(N-1) - (1-b)^(N-1).
inline std::vector<double> haar_bin_probabilities(double n_dim, std::size_t n_bins) {
  std::vector<double> p(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double lo = static_cast<double>(b) / static_cast<double>(n_bins);
    const double hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    p[b] = std::pow(1.0 - lo, n_dim - 1.0) - std::pow(1.0 - hi, n_dim - 1.0);
  }
  return p;
}

inline constexpr double kSmoothing = 1e-9;

/// KL(P || Q) after adding `smoothing` to every bin of both and renormalizing.
inline double kl_divergence(std::span<const double> p, std::span<const double> q, double smoothing = kSmoothing) {
  if (p.size() != q.size() || p.empty()) throw InputError("kl_divergence: size mismatch");
  const double zp = std::accumulate(p.begin(), p.end(), 0.0) + smoothing * static_cast<double>(p.size());
  const double zq = std::accumulate(q.begin(), q.end(), 0.0) + smoothing * static_cast<double>(q.size());
  double kl = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    const double pb = (p[b] + smoothing) / zp;
    const double qb = (q[b] + smoothing) / zq;
    kl += pb * std::log(pb / qb);
  }
  return std::max(kl, 0.0);
}

inline double kl_to_haar(const FidelityHistogram& h) {
  std::vector<double> p(h.bins.size());
  for (std::size_t b = 0; b < p.size(); ++b)
    p[b] = static_cast<double>(h.bins[b]) / static_cast<double>(std::max<std::size_t>(h.samples, 1));
  return kl_divergence(p, haar_bin_probabilities(h.n_dim, h.bins.size()));
}

inline std::vector<double> random_angles(std::size_t count, Rng& rng) {
  std::vector<double> t(count);
  for (auto& v : t) v = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  return t;
}

/// Fidelities |<psi_theta|psi_phi>|^2 of `samples` random parameter pairs.
/// Pair s draws from derive_seed(seed, s), so the result does not depend on
/// the thread count.
inline FidelityHistogram fidelity_histogram(const Circuit& circuit, std::size_t samples, std::size_t n_bins,
                                            std::uint64_t seed) {
  const double dim = std::ldexp(1.0, circuit.n_qubits());
  std::vector<double> fid(samples);
  parallel_for(samples, [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    const auto theta = random_angles(circuit.n_params(), rng);
    const auto phi = random_angles(circuit.n_params(), rng);
    fid[s] = fidelity(run_circuit(circuit, theta), run_circuit(circuit, phi));
  });
  FidelityHistogram h(n_bins, dim);
  for (double f : fid) h.add(f);
  return h;
}

/// KL divergence of the circuit's pair-fidelity histogram from the Haar law.
/// Lower is more expressive.
inline double quantum_expressibility(const Circuit& circuit, std::size_t samples, std::size_t n_bins,
                                     std::uint64_t seed) {
  if (samples < 1000) throw InputError("expressibility needs at least 1000 samples");
  return kl_to_haar(fidelity_histogram(circuit, samples, n_bins, seed));
}

inline double quantum_expressibility(const AnsatzSpec& spec, std::size_t samples, std::size_t n_bins,
                                     std::uint64_t seed) {
  return quantum_expressibility(build_ansatz(spec), samples, n_bins, seed);
}

/// KL divergence of the decoded-solution distribution from uniform over all
/// 2^n_vars bitstrings, with the same per-bin smoothing applied to every
/// (mostly empty) bin. A point mass gives about n_vars * log 2.
inline double classical_expressibility(const AnsatzSpec& spec, std::size_t n_vars, std::size_t samples,
                                       std::uint64_t seed) {
  if (samples < 1000) throw InputError("expressibility needs at least 1000 samples");
  if (n_vars > 64) throw InputError("classical_expressibility supports at most 64 variables");
  const Circuit circuit = build_ansatz(spec);
  const auto layout = EncodingLayout::for_vars(n_vars);
  if (circuit.n_qubits() != layout.n_qubits()) throw InputError("ansatz size does not match the variable count");
  std::vector<std::uint64_t> keys(samples);
  parallel_for(samples, [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    const auto x = decode(extract_exact(run_circuit(circuit, random_angles(circuit.n_params(), rng)), layout));
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < n_vars; ++i) key |= std::uint64_t{x[i]} << i;
    keys[s] = key;
  });
  std::unordered_map<std::uint64_t, std::size_t> counts;
  for (auto k : keys) ++counts[k];

  const double n_bins = std::ldexp(1.0, static_cast<int>(n_vars));
  const double total = static_cast<double>(samples);
  const double zp = 1.0 + kSmoothing * n_bins;
  const double uniform_p = 1.0 / n_bins;
  double kl = 0.0;
  for (const auto& [key, c] : counts) {
    const double pb = (static_cast<double>(c) / total + kSmoothing) / zp;
    kl += pb * std::log(pb / uniform_p);
  }
  const double empty = n_bins - static_cast<double>(counts.size());
  if (empty > 0) {
    const double pe = kSmoothing / zp;
    kl += empty * pe * std::log(pe / uniform_p);
  }
  return std::max(kl, 0.0);
}

/// Ranks starting at 1; tied values share their average rank.
inline std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s;
    while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[s]]) ++e;
    const double avg = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t k = s; k <= e; ++k) r[idx[k]] = avg;
    s = e + 1;
  }
  return r;
}

/// Spearman rank correlation; 0 when either side is constant.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("spearman needs two equal-length series");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace quenc
