#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numbers>

#include "oracle.hpp"
#include "quenc/analysis.hpp"
#include "quenc/constraints.hpp"
#include "quenc/training.hpp"

using namespace quenc;

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t apply_to_basis(const std::vector<Gate>& seq, int n, std::uint64_t b) {
  StateVector s(n, b);
  for (const auto& g : seq) apply(s, g, {});
  for (std::uint64_t k = 0; k < s.dimension(); ++k)
    if (std::norm(s[k]) > 0.5) return k;
  return ~std::uint64_t{0};
}

double state_distance(const StateVector& a, const StateVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

StateVector random_state(int n, Rng& rng) {
  std::vector<Amplitude> a(std::size_t{1} << n);
  double s = 0.0;
  for (auto& x : a) {
    x = {uniform(rng, -1, 1), uniform(rng, -1, 1)};
    s += std::norm(x);
  }
  for (auto& x : a) x /= std::sqrt(s);
  return StateVector::from_amplitudes(n, std::move(a));
}

/// Random state on the ancilla + register qubits, padded with |0> constraint ancillas.
StateVector random_encoded_state(const EncodingLayout& layout, Rng& rng) {
  const auto core = random_state(layout.register_qubits + 1, rng);
  std::vector<Amplitude> a(std::size_t{1} << layout.n_qubits(), 0.0);
  std::copy(core.amplitudes().begin(), core.amplitudes().end(), a.begin());
  return StateVector::from_amplitudes(layout.n_qubits(), std::move(a));
}

StateVector apply_blocks(StateVector s, const std::vector<std::vector<Gate>>& blocks,
                         const std::vector<std::size_t>& order) {
  for (auto k : order)
    for (const auto& g : blocks[k]) apply(s, g, {});
  return s;
}

}  // namespace

TEST_CASE("A block maps the Bell-type basis onto the computational basis", "[constraints][oracle]") {
  // qubit 0 = algorithm ancilla, qubit 1 = register bit
  const auto A = oracle::sequence_matrix(2, build_A_block(1, 0));
  const double r = 1 / std::sqrt(2.0);
  auto idx = [](int reg, int anc) { return static_cast<std::size_t>((reg << 1) | anc); };
  struct Case {
    std::vector<oracle::C> in;
    std::size_t out;
  };
  std::vector<oracle::C> psi0(4), psi1(4), psi0t(4), psi1t(4);
  psi0[idx(0, 0)] = r, psi0[idx(1, 1)] = r;     // (|0>_a|0>_r + |1>_a|1>_r)/sqrt2
  psi1[idx(1, 0)] = r, psi1[idx(0, 1)] = r;     // (|0>_a|1>_r + |1>_a|0>_r)/sqrt2
  psi0t[idx(0, 0)] = r, psi0t[idx(1, 1)] = -r;  // (|0>_a|0>_r - |1>_a|1>_r)/sqrt2
  psi1t[idx(1, 0)] = r, psi1t[idx(0, 1)] = -r;  // (|0>_a|1>_r - |1>_a|0>_r)/sqrt2
  const std::vector<Case> cases = {
      {psi0, idx(0, 0)}, {psi1, idx(0, 1)}, {psi0t, idx(1, 0)}, {psi1t, idx(1, 1)}};
  for (const auto& c : cases) {
    const auto v = A * c.in;
    CHECK(std::norm(v[c.out]) == Catch::Approx(1.0).margin(1e-12));
  }

  const auto seq = build_A_block(1, 0);
  auto round = seq;
  const auto inv = inverse_sequence(seq);
  round.insert(round.end(), inv.begin(), inv.end());
  CHECK(oracle::distance(oracle::sequence_matrix(2, round), oracle::Matrix::identity(4)) < 1e-12);
  CHECK_THROWS_AS(build_A_block(1, 1), InputError);
}

TEST_CASE("remap follows the worked 4-qubit example", "[constraints]") {
  const auto seq = remap_indices(9, 15, 4);
  // swap bits 0,1 -> X on bits 1,3 -> CNOT(q0 -> q2)
  REQUIRE(seq.size() == 4);
  CHECK(seq[0].kind == GateKind::SWAP);
  CHECK(seq[1].kind == GateKind::X);
  CHECK(seq[1].targets[0] == 1);
  CHECK(seq[2].kind == GateKind::X);
  CHECK(seq[2].targets[0] == 3);
  CHECK(seq[3].kind == GateKind::CNOT);
  CHECK(seq[3].controls[0] == 0);
  CHECK(seq[3].targets[0] == 2);
  CHECK(apply_to_basis(seq, 4, 9) == 0);
  CHECK(apply_to_basis(seq, 4, 15) == 1);

  CHECK(remap_indices(0, 1, 3).empty());
  CHECK_THROWS_AS(remap_indices(3, 3, 3), InputError);
  CHECK_THROWS_AS(remap_indices(3, 8, 3), InputError);
}

TEST_CASE("remap sends (i, j) to (0, 1) and inverts", "[constraints]") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const std::uint64_t lim = std::uint64_t{1} << n;
    const std::uint64_t i = rng() % lim;
    std::uint64_t j = rng() % lim;
    while (j == i) j = rng() % lim;
    const auto seq = remap_indices(i, j, n);
    REQUIRE(apply_to_basis(seq, n, i) == 0);
    REQUIRE(apply_to_basis(seq, n, j) == 1);
    auto round = seq;
    const auto inv = inverse_sequence(seq);
    round.insert(round.end(), inv.begin(), inv.end());
    for (std::uint64_t b = 0; b < lim; ++b) REQUIRE(apply_to_basis(round, n, b) == b);
  }
}

TEST_CASE("constraint block separates feasible and unfeasible states", "[constraints]") {
  // two variables, one register qubit: qubits are ancilla 0, register 1,
  // constraint ancilla 2
  const auto layout = EncodingLayout::for_vars(2, 1);
  REQUIRE(layout.n_qubits() == 3);
  const auto block = build_constraint_block({0, 1}, layout, 2);
  const double r = 1 / std::sqrt(2.0);
  auto idx = [](int reg, int anc) { return static_cast<std::size_t>((reg << 1) | anc); };

  // x0 = 0, x1 = 1 and x0 = 1, x1 = 0 encodings are feasible
  for (auto [a0, a1] : {std::pair{0, 1}, std::pair{1, 0}}) {
    std::vector<Amplitude> v(8, 0.0);
    v[idx(0, a0)] = r;
    v[idx(1, a1)] = r;
    StateVector s = StateVector::from_amplitudes(3, v);
    const StateVector in = s;
    for (const auto& g : block) apply(s, g, {});
    CHECK(projector_mass(s, 4, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(fidelity(s, in) == Catch::Approx(1.0).margin(1e-10));
  }
  // x0 = x1 encodings are not
  for (int a : {0, 1}) {
    std::vector<Amplitude> v(8, 0.0);
    v[idx(0, a)] = r;
    v[idx(1, a)] = r;
    StateVector s = StateVector::from_amplitudes(3, v);
    for (const auto& g : block) apply(s, g, {});
    CHECK(projector_mass(s, 4, 4) == Catch::Approx(0.5).margin(1e-12));
    CHECK_FALSE(satisfies(Bitstring{std::uint8_t(a), std::uint8_t(a)}, std::vector<Constraint>{{0, 1}}));
  }
  // the sign-flipped (unfeasible) Bell combination is removed entirely
  std::vector<Amplitude> v(8, 0.0);
  v[idx(0, 0)] = r;
  v[idx(1, 1)] = -r;
  StateVector s = StateVector::from_amplitudes(3, v);
  for (const auto& g : block) apply(s, g, {});
  CHECK(projector_mass(s, 4, 4) == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(postselect(s, 2, 0), PostselectionError);
}

TEST_CASE("post-selected states satisfy the constraint exactly", "[constraints]") {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 30;
    const auto layout = EncodingLayout::for_vars(n, 1);
    const Constraint c{rng() % n, 0};
    Constraint cc = c;
    do cc.j = rng() % n;
    while (cc.j == cc.i);
    StateVector s = random_encoded_state(layout, rng);
    for (const auto& g : build_constraint_block(cc, layout, layout.constraint_ancilla(0))) apply(s, g, {});
    const auto [post, p] = postselect(s, layout.constraint_ancilla(0), 0);
    CHECK(p > 0.0);
    const auto d = extract_exact(post, layout);
    REQUIRE(d.p1[cc.i] + d.p1[cc.j] == Catch::Approx(1.0).margin(1e-9));
    CHECK(satisfies(decode(d), std::vector<Constraint>{cc}));
  }
}

TEST_CASE("block is a projector: idempotent and identity on V", "[constraints]") {
  Rng rng(15);
  const std::size_t n = 16;
  const auto layout = EncodingLayout::for_vars(n, 1);
  const Constraint c{3, 12};
  const auto block = build_constraint_block(c, layout, layout.constraint_ancilla(0));
  const int anc = layout.constraint_ancilla(0);
  for (int trial = 0; trial < 20; ++trial) {
    StateVector s = random_encoded_state(layout, rng);
    for (const auto& g : block) apply(s, g, {});
    const auto [once, p1] = postselect(s, anc, 0);
    StateVector t = once;
    for (const auto& g : block) apply(t, g, {});
    const auto [twice, p2] = postselect(t, anc, 0);
    CHECK(p2 == Catch::Approx(1.0).margin(1e-10));
    CHECK(state_distance(once, twice) < 1e-9);
    CHECK(fidelity(once, t) == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("disjoint constraint blocks commute", "[constraints]") {
  Rng rng(16);
  {
    // pairs {(0,1), (2,3)} in both orders on a 4-variable register
    const auto layout = EncodingLayout::for_vars(4, 2);
    const std::vector<std::vector<Gate>> blocks = {
        build_constraint_block({0, 1}, layout, layout.constraint_ancilla(0)),
        build_constraint_block({2, 3}, layout, layout.constraint_ancilla(1))};
    const std::vector<int> ancs = {layout.constraint_ancilla(0), layout.constraint_ancilla(1)};
    for (int trial = 0; trial < 10; ++trial) {
      const auto s = random_encoded_state(layout, rng);
      const auto a = postselect_feasible(apply_blocks(s, blocks, {0, 1}), ancs).first;
      const auto b = postselect_feasible(apply_blocks(s, blocks, {1, 0}), ancs).first;
      CHECK(state_distance(a, b) < 1e-9);
    }
  }
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 6 + rng() % 59;  // up to 6 register qubits
    const std::size_t m = 1 + rng() % 3;
    std::vector<std::size_t> vars(n);
    for (std::size_t k = 0; k < n; ++k) vars[k] = k;
    std::shuffle(vars.begin(), vars.end(), rng);
    std::vector<Constraint> cons;
    for (std::size_t k = 0; k < m; ++k) cons.push_back({vars[2 * k], vars[2 * k + 1]});
    const auto layout = EncodingLayout::for_vars(n, static_cast<int>(m));
    std::vector<std::vector<Gate>> blocks;
    std::vector<int> ancs;
    for (std::size_t k = 0; k < m; ++k) {
      ancs.push_back(layout.constraint_ancilla(static_cast<int>(k)));
      blocks.push_back(build_constraint_block(cons[k], layout, ancs.back()));
    }
    const auto s = random_encoded_state(layout, rng);
    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < m; ++k) order[k] = k;
    const auto ref = postselect_feasible(apply_blocks(s, blocks, order), ancs).first;
    while (std::next_permutation(order.begin(), order.end())) {
      const auto other = postselect_feasible(apply_blocks(s, blocks, order), ancs).first;
      REQUIRE(state_distance(ref, other) < 1e-9);
    }
  }
}

TEST_CASE("constrained circuit layout", "[constraints]") {
  const auto base = build_sequential(4, 2);
  const std::vector<Constraint> cons = {{0, 2}};
  const auto cc = build_constrained_circuit(base, 5, cons);
  CHECK(cc.circuit.n_qubits() == 5);  // ceil(log2 5) + 1 + 1
  CHECK(cc.constraint_ancillas == std::vector<int>{4});
  CHECK(cc.circuit.n_params() == base.n_params());
  CHECK(cc.base_gate_count == base.gates().size());

  CHECK_THROWS_AS(build_constrained_circuit(base, 5, std::vector<Constraint>{{0, 5}}), InputError);
  CHECK_THROWS_AS(validate_constraints(std::vector<Constraint>{{0, 1}, {1, 2}}, 4), InputError);
  CHECK_THROWS_AS(validate_constraints(std::vector<Constraint>{{2, 2}}, 4), InputError);
  CHECK_THROWS_AS(build_constraint_block({0, 1}, EncodingLayout::for_vars(4, 1), 1), InputError);
}

TEST_CASE("constrained training on the five-node example", "[constraints][train]") {
  MaxCutGraph g(5);
  for (auto [i, j] : {std::pair{0, 1}, {1, 2}, {1, 3}, {2, 4}, {3, 4}}) g.add_edge(i, j, 1.0);
  const auto q = graph_to_qubo(g);
  CHECK(brute_force_optimum(q).cost == -5.0);
  const std::vector<Constraint> cons = {{0, 2}};
  CHECK(feasible_optimum(q, cons).cost == -4.0);

  TrainConfig cfg;
  cfg.alpha = 0.05;
  cfg.seed = 1;
  const auto r = constrained_train(q, ansatz_for(5, AnsatzFamily::Sequential2QG, 5), cfg, cons);
  CHECK(satisfies(r.final_bitstring, cons));
  CHECK(satisfies(r.best_bitstring, cons));
  CHECK(r.n_qubits == 4);
  CHECK(r.postselection.evaluations == r.trace.size());
  CHECK(r.postselection.min_probability > 0.0);
  CHECK(r.postselection.min_probability <= r.postselection.mean_probability);

  cfg.shots = 256;
  cfg.max_iters = 20;
  const auto rs = constrained_train(q, ansatz_for(5, AnsatzFamily::Sequential2QG, 5), cfg, cons);
  CHECK(rs.postselection.shots_total == 256 * rs.trace.size());
  CHECK(rs.postselection.shots_discarded > 0);
  CHECK(satisfies(rs.final_bitstring, cons));

  cfg.shots = 0;
  cfg.postselect_floor = 1.1;  // unreachable
  CHECK_THROWS_AS(constrained_train(q, ansatz_for(5, AnsatzFamily::Sequential2QG, 5), cfg, cons),
                  PostselectionError);
}

TEST_CASE("shot tallies drop shots with a constraint ancilla set", "[constraints]") {
  const auto layout = EncodingLayout::for_vars(4, 1);  // qubits: a, r0, r1, c
  const std::vector<std::uint64_t> shots = {(2u << 1) | 1u, (2u << 1) | 1u | 8u, 1u << 1, (1u << 1) | 8u};
  const auto t = tally_shots(shots, layout);
  CHECK(t.kept == 2);
  CHECK(t.total == std::vector<std::size_t>{0, 1, 1, 0});
  CHECK(t.ones == std::vector<std::size_t>{0, 0, 1, 0});
}
