#pragma once

// RunRecord: everything needed to reproduce and inspect one run, with a
// lossless JSON mapping.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quenc/problem.hpp"

namespace quenc {

struct PostselectionStats {
  std::size_t evaluations = 0;
  double min_probability = 1.0;
  double mean_probability = 1.0;
  std::size_t shots_total = 0;
  std::size_t shots_discarded = 0;

  bool operator==(const PostselectionStats&) const = default;
};

struct RunRecord {
  // problem
  std::string problem;  // short descriptor, e.g. "qubo n=16"
  std::string problem_hash;
  std::size_t n_vars = 0;
  std::vector<std::pair<std::size_t, std::size_t>> constraints;
  // circuit
  std::string ansatz;
  int n_qubits = 0;
  int layers = 0;
  // optimizer
  std::string optimizer;
  double alpha = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double epsilon = 0.0;
  std::size_t shots = 0;
  int max_iters = 0;
  // seeds
  std::uint64_t master_seed = 0;
  std::uint64_t seed = 0;
  int restart = 0;
  // outcome
  std::vector<double> trace;       // relaxed cost per evaluation
  std::vector<double> best_trace;  // best decoded cost so far per evaluation
  int iterations = 0;              // number of evaluations == trace.size()
  std::string stop_reason;
  Bitstring best_bitstring;
  double best_cost = 0.0;
  Bitstring final_bitstring;
  double final_cost = 0.0;
  std::vector<double> final_theta;
  std::optional<double> known_optimum;
  std::optional<double> c_norm;
  PostselectionStats postselection;
  std::vector<std::string> stages;
  std::vector<double> stage_costs;
  // excluded from reproducibility comparisons
  double wall_ms = 0.0;

  bool operator==(const RunRecord&) const = default;
};

/// FNV-1a 64 over the QUBO's size and stored entries, hex encoded.
inline std::string problem_hash(const QuboProblem& q) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= p[k];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t n = q.size();
  feed(&n, sizeof n);
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i; j < q.size(); ++j) {
      const double v = q(i, j);
      feed(&v, sizeof v);
    }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::ordered_json to_json(const RunRecord& r, bool include_timing = true) {
  using nlohmann::ordered_json;
  ordered_json constraints = ordered_json::array();
  for (const auto& [i, j] : r.constraints) constraints.push_back({i, j});
  ordered_json j = {
      {"problem", {{"descriptor", r.problem}, {"hash", r.problem_hash}, {"n_vars", r.n_vars},
                   {"constraints", constraints}}},
      {"ansatz", {{"family", r.ansatz}, {"n_qubits", r.n_qubits}, {"layers", r.layers}}},
      {"optimizer", {{"kind", r.optimizer}, {"alpha", r.alpha}, {"beta1", r.beta1}, {"beta2", r.beta2},
                     {"epsilon", r.epsilon}, {"shots", r.shots}, {"max_iters", r.max_iters}}},
      {"seeds", {{"master_seed", r.master_seed}, {"seed", r.seed}, {"restart", r.restart}}},
      {"trace", r.trace},
      {"best_trace", r.best_trace},
      {"iterations", r.iterations},
      {"stop_reason", r.stop_reason},
      {"best", {{"bitstring", to_string(r.best_bitstring)}, {"cost", r.best_cost}}},
      {"final", {{"bitstring", to_string(r.final_bitstring)}, {"cost", r.final_cost}, {"theta", r.final_theta}}},
      {"known_optimum", r.known_optimum ? ordered_json(*r.known_optimum) : ordered_json(nullptr)},
      {"c_norm", r.c_norm ? ordered_json(*r.c_norm) : ordered_json(nullptr)},
      {"postselection", {{"evaluations", r.postselection.evaluations},
                         {"min_probability", r.postselection.min_probability},
                         {"mean_probability", r.postselection.mean_probability},
                         {"shots_total", r.postselection.shots_total},
                         {"shots_discarded", r.postselection.shots_discarded}}},
      {"stages", r.stages},
      {"stage_costs", r.stage_costs},
  };
  if (include_timing) j["timing"] = {{"wall_ms", r.wall_ms}};
  return j;
}

inline RunRecord run_record_from_json(const nlohmann::ordered_json& j) {
  RunRecord r;
  const auto& p = j.at("problem");
  r.problem = p.at("descriptor").get<std::string>();
  r.problem_hash = p.at("hash").get<std::string>();
  r.n_vars = p.at("n_vars").get<std::size_t>();
  for (const auto& c : p.at("constraints")) r.constraints.emplace_back(c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>());
  const auto& a = j.at("ansatz");
  r.ansatz = a.at("family").get<std::string>();
  r.n_qubits = a.at("n_qubits").get<int>();
  r.layers = a.at("layers").get<int>();
  const auto& o = j.at("optimizer");
  r.optimizer = o.at("kind").get<std::string>();
  r.alpha = o.at("alpha").get<double>();
  r.beta1 = o.at("beta1").get<double>();
  r.beta2 = o.at("beta2").get<double>();
  r.epsilon = o.at("epsilon").get<double>();
  r.shots = o.at("shots").get<std::size_t>();
  r.max_iters = o.at("max_iters").get<int>();
  const auto& s = j.at("seeds");
  r.master_seed = s.at("master_seed").get<std::uint64_t>();
  r.seed = s.at("seed").get<std::uint64_t>();
  r.restart = s.at("restart").get<int>();
  r.trace = j.at("trace").get<std::vector<double>>();
  r.best_trace = j.at("best_trace").get<std::vector<double>>();
  r.iterations = j.at("iterations").get<int>();
  r.stop_reason = j.at("stop_reason").get<std::string>();
  r.best_bitstring = bitstring_from_string(j.at("best").at("bitstring").get<std::string>());
  r.best_cost = j.at("best").at("cost").get<double>();
  r.final_bitstring = bitstring_from_string(j.at("final").at("bitstring").get<std::string>());
  r.final_cost = j.at("final").at("cost").get<double>();
  r.final_theta = j.at("final").at("theta").get<std::vector<double>>();
  if (!j.at("known_optimum").is_null()) r.known_optimum = j.at("known_optimum").get<double>();
  if (!j.at("c_norm").is_null()) r.c_norm = j.at("c_norm").get<double>();
  const auto& ps = j.at("postselection");
  r.postselection.evaluations = ps.at("evaluations").get<std::size_t>();
  r.postselection.min_probability = ps.at("min_probability").get<double>();
  r.postselection.mean_probability = ps.at("mean_probability").get<double>();
  r.postselection.shots_total = ps.at("shots_total").get<std::size_t>();
  r.postselection.shots_discarded = ps.at("shots_discarded").get<std::size_t>();
  r.stages = j.at("stages").get<std::vector<std::string>>();
  r.stage_costs = j.at("stage_costs").get<std::vector<double>>();
  if (j.contains("timing")) r.wall_ms = j.at("timing").at("wall_ms").get<double>();
  return r;
}

}  // namespace quenc
