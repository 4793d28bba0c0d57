#pragma once

// Configurable experiment grids behind `quenc experiment`. Each runner reads
// a flat JSON config, writes its CSV tables plus summary.json and
// manifest.json into the output directory.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "quenc/analysis.hpp"
#include "quenc/ansatz.hpp"
#include "quenc/errors.hpp"
#include "quenc/gradient.hpp"
#include "quenc/hybrid.hpp"
#include "quenc/io.hpp"
#include "quenc/problem.hpp"
#include "quenc/rng.hpp"
#include "quenc/training.hpp"
#include "quenc/version.hpp"

namespace quenc {

using Json = nlohmann::ordered_json;

/// Typed access to a flat config with a whitelist of keys.
class ExperimentConfig {
 public:
  ExperimentConfig(Json j, std::set<std::string> allowed, std::string source)
      : j_(std::move(j)), source_(std::move(source)) {
    if (!j_.is_object()) fail("config must be a JSON object");
    allowed.insert("schema_version");
    allowed.insert("seed");
    for (const auto& [key, _] : j_.items())
      if (!allowed.count(key)) fail("unknown key '" + key + "'");
    if (!j_.contains("schema_version")) fail("missing 'schema_version'");
    if (integer("schema_version") != kSchemaVersion)
      fail("unsupported schema_version " + std::to_string(integer("schema_version")));
    if (!j_.contains("seed")) fail("missing 'seed'");
  }

  const Json& raw() const { return j_; }

  std::int64_t integer(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    return j_.contains(key) ? integer(key) : fallback;
  }
  std::int64_t positive(const std::string& key, std::int64_t fallback) const {
    const auto v = integer(key, fallback);
    if (v < 1) fail("'" + key + "' must be positive");
    return v;
  }
  std::uint64_t seed() const {
    const auto& v = at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail("'seed' must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  double real(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  double real(const std::string& key, double fallback) const { return j_.contains(key) ? real(key) : fallback; }
  std::string text(const std::string& key, const std::string& fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_string()) fail("'" + key + "' must be a string");
    return j_.at(key).get<std::string>();
  }
  std::vector<std::int64_t> integers(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_array() || v.empty()) fail("'" + key + "' must be a non-empty array of integers");
    std::vector<std::int64_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) fail("'" + key + "' must contain integers");
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }
  std::vector<double> reals(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_array() || v.empty()) fail("'" + key + "' must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail("'" + key + "' must contain numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback) const {
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array() || v.empty()) fail("'" + key + "' must be a non-empty array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail("'" + key + "' must contain strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const { throw InputError(source_ + ": " + what); }

 private:
  const Json& at(const std::string& key) const {
    if (!j_.contains(key)) fail("missing '" + key + "'");
    return j_.at(key);
  }

  Json j_;
  std::string source_;
};

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path, std::set<std::string> allowed) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
  return ExperimentConfig(std::move(j), std::move(allowed), path.string());
}

namespace detail {

inline const std::set<std::string> kTrainingKeys = {"alpha", "optimizer", "max_iters", "window", "threshold"};

inline std::set<std::string> with_training_keys(std::set<std::string> keys) {
  keys.insert(kTrainingKeys.begin(), kTrainingKeys.end());
  return keys;
}

inline TrainConfig training_from(const ExperimentConfig& c, double default_alpha) {
  TrainConfig t;
  t.alpha = c.real("alpha", default_alpha);
  t.optimizer = optimizer_from_name(c.text("optimizer", "adam"));
  t.max_iters = static_cast<int>(c.integer("max_iters", t.max_iters));
  t.window = static_cast<int>(c.integer("window", t.window));
  t.threshold = c.real("threshold", t.threshold);
  t.validate();
  return t;
}

/// Seeded random complete graphs with uniform weights in [0.01, 1).
inline std::vector<QuboProblem> random_maxcut_problems(std::size_t n_vars, std::size_t count, std::uint64_t seed,
                                                       bool with_optimum) {
  std::vector<QuboProblem> out;
  for (std::size_t p = 0; p < count; ++p) {
    out.push_back(graph_to_qubo(random_complete_graph(n_vars, derive_seed(seed ^ 0x70726f626c656dULL, p))));
    if (with_optimum) out.back().known_optimum = exact_optimum(out.back()).cost;
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<ExperimentRow>& rows,
                      const std::string& prefix_header = "", const std::vector<std::string>& prefixes = {}) {
  std::ostringstream body;
  write_experiment_csv(body, rows);
  if (prefix_header.empty()) {
    write_text_file(path, body.str());
    return;
  }
  std::istringstream in(body.str());
  std::ostringstream out;
  std::string line;
  std::getline(in, line);
  out << prefix_header << ',' << line << '\n';
  for (std::size_t r = 0; std::getline(in, line); ++r) out << prefixes.at(r) << ',' << line << '\n';
  write_text_file(path, out.str());
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& experiment,
                           const ExperimentConfig& cfg, const std::vector<std::string>& outputs) {
  Json m = {{"experiment", experiment},
            {"software", "quenc"},
            {"version", kVersion},
            {"schema_version", kSchemaVersion},
            {"master_seed", cfg.seed()},
            {"config", cfg.raw()},
            {"outputs", outputs}};
  write_json_file(dir / "manifest.json", m);
}

inline ExperimentRow row_from(const RunRecord& r, double relative) {
  return {r.n_vars, r.layers, r.shots, r.alpha, r.seed, r.final_cost, relative, r.iterations, r.wall_ms};
}

}  // namespace detail

/// Global-optimum probability per layer count on random MaxCut problems.
/// Keys: n_c, layers[], problems, restarts, ansatz, + training keys.
inline Json run_local_minima(const ExperimentConfig& c, const std::filesystem::path& out) {
  const auto n = static_cast<std::size_t>(c.positive("n_c", 16));
  const auto problems = static_cast<std::size_t>(c.positive("problems", 20));
  const auto restarts = static_cast<std::size_t>(c.positive("restarts", 10));
  const auto family = family_from_name(c.text("ansatz", "seq"));
  const auto layers = c.integers("layers");
  const TrainConfig base = detail::training_from(c, default_learning_rate(n, 0).value_or(0.02));
  const std::uint64_t seed = c.seed();

  const auto qs = detail::random_maxcut_problems(n, problems, seed, true);
  std::vector<double> c_rand(qs.size());
  for (std::size_t p = 0; p < qs.size(); ++p) c_rand[p] = random_bitstring_mean_cost(qs[p], derive_seed(seed, p));

  std::vector<ExperimentRow> rows;
  Json cells = Json::array();
  std::vector<double> ls, probs;
  for (auto L : layers) {
    std::vector<RunRecord> recs;
    const auto stats = global_opt_probability(qs, ansatz_for(n, family, static_cast<int>(L)), restarts, base,
                                              derive_seed(seed, static_cast<std::uint64_t>(L)), &recs);
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const std::size_t p = k / restarts;
      rows.push_back(detail::row_from(recs[k], normalized_cost(recs[k].final_cost, *qs[p].known_optimum, c_rand[p])));
    }
    cells.push_back({{"L", L}, {"runs", stats.runs}, {"hits", stats.hits}, {"probability", stats.probability()}});
    ls.push_back(static_cast<double>(L));
    probs.push_back(stats.probability());
  }
  detail::write_csv(out / "local_minima.csv", rows);
  Json summary = {{"experiment", "local-minima"}, {"n_c", n}, {"ansatz", family_name(family)}, {"cells", cells}};
  if (ls.size() >= 2) summary["spearman_L_probability"] = spearman(ls, probs);
  write_json_file(out / "summary.json", summary);
  detail::write_manifest(out, "local-minima", c, {"local_minima.csv", "summary.json"});
  return summary;
}

/// Relative cost per (shots, alpha) cell against the exact-mode baseline.
/// Keys: n_c, layers, problems, shots[] (0 = exact), alphas[], baseline_alpha,
/// ansatz, + training keys.
inline Json run_shots(const ExperimentConfig& c, const std::filesystem::path& out) {
  const auto n = static_cast<std::size_t>(c.positive("n_c", 16));
  const auto problems = static_cast<std::size_t>(c.positive("problems", 50));
  const int layers = static_cast<int>(c.positive("layers", 4));
  const auto family = family_from_name(c.text("ansatz", "seq"));
  const double alpha0 = c.real("baseline_alpha", default_learning_rate(n, 0).value_or(0.02));
  std::vector<std::size_t> shots;
  for (auto k : c.integers("shots")) {
    if (k < 0) c.fail("'shots' entries must be nonnegative");
    shots.push_back(static_cast<std::size_t>(k));
  }
  const auto alphas = c.reals("alphas");
  const TrainConfig base = detail::training_from(c, alpha0);
  const std::uint64_t seed = c.seed();

  const auto qs = detail::random_maxcut_problems(n, problems, seed, false);
  const auto table = shot_scaling_experiment(qs, ansatz_for(n, family, layers), shots, alphas, alpha0, base, seed);

  std::vector<ExperimentRow> rows;
  Json cells = Json::array();
  for (const auto& cell : table.cells) {
    for (std::size_t p = 0; p < cell.runs.size(); ++p) {
      const double base_p = table.baseline_runs[p].final_cost;
      const double rand_p = random_bitstring_mean_cost(qs[p], derive_seed(seed ^ 0x52414e44, p));
      rows.push_back(detail::row_from(cell.runs[p], rand_p != base_p ? relative_cost(cell.runs[p].final_cost, base_p, rand_p) : 0.0));
    }
    cells.push_back({{"k", cell.shots}, {"alpha", cell.alpha}, {"mean_cost", cell.mean_cost},
                     {"relative_cost", cell.relative}});
  }
  detail::write_csv(out / "shots.csv", rows);
  Json summary = {{"experiment", "shots"},        {"n_c", n},
                  {"baseline_alpha", alpha0},     {"baseline_mean_cost", table.baseline_mean},
                  {"random_mean_cost", table.random_mean}, {"cells", cells}};
  write_json_file(out / "summary.json", summary);
  detail::write_manifest(out, "shots", c, {"shots.csv", "summary.json"});
  return summary;
}

/// KL-to-Haar expressibility per (ansatz, qubits, layers) plus histograms.
/// Keys: qubits[], layers[], ansatz[], samples, bins.
inline Json run_expressibility(const ExperimentConfig& c, const std::filesystem::path& out) {
  const auto qubits = c.integers("qubits");
  const auto layers = c.integers("layers");
  const auto families = c.texts("ansatz", {"seq", "sim"});
  const auto samples = static_cast<std::size_t>(c.positive("samples", 10000));
  const auto bins = static_cast<std::size_t>(c.positive("bins", 75));
  const std::uint64_t seed = c.seed();

  std::ostringstream table, hist;
  table << "ansatz,n_qubits,L,samples,kl\n";
  hist << "ansatz,n_qubits,L,bin_lo,bin_hi,count,haar_probability\n";
  Json cells = Json::array();
  for (const auto& f : families) {
    const auto family = family_from_name(f);
    for (auto nq : qubits)
      for (auto L : layers) {
        const AnsatzSpec spec{family, static_cast<int>(nq), static_cast<int>(L)};
        const auto h = fidelity_histogram(build_ansatz(spec), samples, bins,
                                          derive_seed(seed, static_cast<std::uint64_t>(nq * 1000 + L)));
        const double kl = kl_to_haar(h);
        const auto haar = haar_bin_probabilities(h.n_dim, bins);
        const std::string name(family_name(family));
        table << name << ',' << nq << ',' << L << ',' << samples << ',' << format_real(kl) << '\n';
        for (std::size_t b = 0; b < bins; ++b)
          hist << name << ',' << nq << ',' << L << ',' << format_real(double(b) / double(bins)) << ','
               << format_real(double(b + 1) / double(bins)) << ',' << h.bins[b] << ',' << format_real(haar[b]) << '\n';
        cells.push_back({{"ansatz", name}, {"n_qubits", nq}, {"L", L}, {"kl", kl}});
      }
  }
  write_text_file(out / "expressibility.csv", table.str());
  write_text_file(out / "histograms.csv", hist.str());
  Json summary = {{"experiment", "expressibility"}, {"samples", samples}, {"bins", bins}, {"cells", cells}};
  write_json_file(out / "summary.json", summary);
  detail::write_manifest(out, "expressibility", c, {"expressibility.csv", "histograms.csv", "summary.json"});
  return summary;
}

/// Sequential vs simultaneous ansatz at equal effective layers: optimum
/// probability and mean normalized cost. Keys: n_c, layers[], problems,
/// restarts, + training keys.
inline Json run_ansatz_compare(const ExperimentConfig& c, const std::filesystem::path& out) {
  const auto n = static_cast<std::size_t>(c.positive("n_c", 16));
  const auto problems = static_cast<std::size_t>(c.positive("problems", 10));
  const auto restarts = static_cast<std::size_t>(c.positive("restarts", 10));
  const auto layers = c.integers("layers");
  const TrainConfig base = detail::training_from(c, default_learning_rate(n, 0).value_or(0.02));
  const std::uint64_t seed = c.seed();

  const auto qs = detail::random_maxcut_problems(n, problems, seed, true);
  std::vector<double> c_rand(qs.size());
  for (std::size_t p = 0; p < qs.size(); ++p) c_rand[p] = random_bitstring_mean_cost(qs[p], derive_seed(seed, p));

  std::vector<ExperimentRow> rows;
  std::vector<std::string> names;
  Json cells = Json::array();
  for (auto family : {AnsatzFamily::Sequential2QG, AnsatzFamily::Simultaneous2QG}) {
    for (auto L : layers) {
      std::vector<RunRecord> recs;
      const auto stats = global_opt_probability(qs, ansatz_for(n, family, static_cast<int>(L)), restarts, base,
                                                derive_seed(seed, static_cast<std::uint64_t>(L)), &recs);
      double mean_norm = 0.0;
      for (std::size_t k = 0; k < recs.size(); ++k) {
        const std::size_t p = k / restarts;
        const double rel = normalized_cost(recs[k].final_cost, *qs[p].known_optimum, c_rand[p]);
        mean_norm += rel;
        rows.push_back(detail::row_from(recs[k], rel));
        names.emplace_back(family_name(family));
      }
      cells.push_back({{"ansatz", family_name(family)}, {"L", L}, {"probability", stats.probability()},
                       {"mean_normalized_cost", mean_norm / static_cast<double>(recs.size())}});
    }
  }
  detail::write_csv(out / "ansatz_compare.csv", rows, "ansatz", names);
  Json summary = {{"experiment", "ansatz-compare"}, {"n_c", n}, {"cells", cells}};
  write_json_file(out / "summary.json", summary);
  detail::write_manifest(out, "ansatz-compare", c, {"ansatz_compare.csv", "summary.json"});
  return summary;
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"local-minima", "shots", "expressibility", "ansatz-compare"};
  return names;
}

/// Dispatches by name; unknown names are input errors.
inline Json run_experiment(const std::string& name, const std::filesystem::path& config,
                           const std::filesystem::path& out) {
  using detail::with_training_keys;
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw InputError("unknown experiment '" + name + "'");
  std::filesystem::create_directories(out);
  if (name == "local-minima")
    return run_local_minima(
        load_experiment_config(config, with_training_keys({"n_c", "layers", "problems", "restarts", "ansatz"})), out);
  if (name == "shots")
    return run_shots(load_experiment_config(config, with_training_keys({"n_c", "layers", "problems", "shots", "alphas",
                                                                        "baseline_alpha", "ansatz"})),
                     out);
  if (name == "expressibility")
    return run_expressibility(
        load_experiment_config(config, {"qubits", "layers", "ansatz", "samples", "bins"}), out);
  if (name == "ansatz-compare")
    return run_ansatz_compare(
        load_experiment_config(config, with_training_keys({"n_c", "layers", "problems", "restarts"})), out);
  throw InputError("unknown experiment '" + name + "'");
}

}  // namespace quenc
