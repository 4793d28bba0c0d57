// quenc: solve QUBO / MaxCut instances with a minimal-encoding variational
// circuit and run the analysis experiments.
//
// Exit codes: 0 success, 2 input error, 3 post-selection failure.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quenc/quenc.hpp"

namespace fs = std::filesystem;
using namespace quenc;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitPostselection = 3;
constexpr int kMaxQubits = 24;

struct SolveArgs {
  std::string graph;
  std::string qubo;
  std::string constraints;
  int layers = 0;
  std::string ansatz = "seq";
  std::size_t shots = 0;
  std::string optimizer = "adam";
  std::optional<double> alpha;
  int iters = 200;
  int restarts = 1;
  std::string warmstart;
  std::string refine;
  std::size_t flip_budget = 0;
  std::uint64_t seed = 0;
  std::string out;
};

Bitstring read_warmstart(const std::string& arg, std::size_t n) {
  const bool literal = !arg.empty() && arg.find_first_not_of("01") == std::string::npos;
  std::string bits = arg;
  if (!literal) {
    std::ifstream in(arg);
    if (!in) throw InputError("--warmstart: '" + arg + "' is neither a bitstring nor a readable file");
    if (!(in >> bits)) throw InputError("--warmstart: '" + arg + "' holds no bitstring");
  }
  Bitstring x;
  try {
    x = bitstring_from_string(bits);
  } catch (const std::exception& e) {
    throw InputError(std::string("--warmstart: ") + e.what());
  }
  if (x.size() != n)
    throw InputError("--warmstart: bitstring has " + std::to_string(x.size()) + " bits, problem has " +
                     std::to_string(n));
  return x;
}

int solve(const SolveArgs& a) {
  QuboProblem q(2);
  std::string descriptor;
  if (!a.graph.empty()) {
    const auto g = load_graph(a.graph);
    q = graph_to_qubo(g);
    descriptor = "maxcut " + fs::path(a.graph).filename().string() + " n=" + std::to_string(g.size());
  } else {
    q = load_qubo(a.qubo);
    descriptor = "qubo " + fs::path(a.qubo).filename().string() + " n=" + std::to_string(q.size());
  }
  const std::size_t n = q.size();

  std::vector<Constraint> constraints;
  if (!a.constraints.empty()) {
    constraints = load_constraints(a.constraints);
    validate_constraints(constraints, n);
  }
  const auto layout = EncodingLayout::for_vars(n, static_cast<int>(constraints.size()));
  if (layout.n_qubits() > kMaxQubits)
    throw InputError("qubit budget exceeded: " + std::to_string(layout.n_qubits()) + " qubits needed, limit " +
                     std::to_string(kMaxQubits));

  TrainConfig cfg;
  cfg.optimizer = optimizer_from_name(a.optimizer);
  cfg.shots = a.shots;
  cfg.max_iters = a.iters;
  if (a.alpha) {
    cfg.alpha = *a.alpha;
  } else if (auto d = default_learning_rate(n, a.shots)) {
    cfg.alpha = *d;
  } else {
    throw InputError("no tuned learning rate for " + std::to_string(n) + " variables with " + std::to_string(a.shots) +
                     " shots; pass --alpha");
  }
  cfg.validate();

  const auto family = family_from_name(a.ansatz);
  if (family == AnsatzFamily::WarmStart) throw InputError("--ansatz must be seq or sim");
  const int warm_layers = a.layers + a.layers % 2;

  PipelineSpec spec;
  spec.restarts = a.restarts;
  spec.seed = a.seed;
  spec.stages.push_back(std::make_shared<QuEncStage>(family, a.layers, cfg, warm_layers, constraints));
  if (a.refine == "local") {
    const std::size_t budget = a.flip_budget > 0 ? a.flip_budget : n * n;
    spec.stages.push_back(std::make_shared<LocalSearchStage>(budget));
  }
  if (!a.warmstart.empty()) spec.initial = read_warmstart(a.warmstart, n);

  if (constraints.empty() && n <= kBruteForceCap)
    q.known_optimum = exact_optimum(q).cost;
  else if (!constraints.empty() && n <= 16)
    q.known_optimum = feasible_optimum(q, constraints).cost;

  RunRecord rec = run_pipeline(q, spec);
  rec.problem = descriptor;

  const fs::path out(a.out);
  fs::create_directories(out);
  write_json_file(out / "result.json", to_json(rec));
  std::ostringstream trace;
  write_trace_csv(trace, rec);
  write_text_file(out / "trace.csv", trace.str());
  write_text_file(out / "solution.txt", to_string(rec.best_bitstring) + "\n");

  std::cout << "best " << to_string(rec.best_bitstring) << " cost " << format_real(rec.best_cost);
  if (!constraints.empty()) std::cout << (satisfies(rec.best_bitstring, constraints) ? " feasible" : " infeasible");
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal-encoding variational QUBO solver"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  SolveArgs s;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one MaxCut graph or QUBO");
  auto* g = solve_cmd->add_option("--graph", s.graph, "MaxCut graph file ('n' then 'i j w' lines)");
  auto* qo = solve_cmd->add_option("--qubo", s.qubo, "QUBO file ('n' then 'i j q' lines)");
  g->excludes(qo);
  qo->excludes(g);
  solve_cmd->add_option("--constraints", s.constraints, "constraint file ('i j' lines: x_i + x_j = 1)");
  solve_cmd->add_option("--layers", s.layers, "ansatz layers")->required()->check(CLI::PositiveNumber);
  solve_cmd->add_option("--ansatz", s.ansatz, "seq or sim")->check(CLI::IsMember({"seq", "sim"}));
  solve_cmd->add_option("--shots", s.shots, "shots per evaluation (0 = exact expectations)");
  solve_cmd->add_option("--optimizer", s.optimizer, "gd or adam")->check(CLI::IsMember({"gd", "adam"}));
  solve_cmd->add_option("--alpha", s.alpha, "learning rate (defaults exist for 16 variables only)");
  solve_cmd->add_option("--iters", s.iters, "maximum gradient steps")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--restarts", s.restarts, "independent restarts")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--warmstart", s.warmstart, "initial bitstring, literal or file");
  solve_cmd->add_option("--refine", s.refine, "classical refinement stage")->check(CLI::IsMember({"local"}));
  solve_cmd->add_option("--flip-budget", s.flip_budget, "flip budget for --refine local (default n^2)");
  solve_cmd->add_option("--seed", s.seed, "master seed")->required();
  solve_cmd->add_option("--out", s.out, "output directory")->required();

  std::string exp_name, exp_config, exp_out;
  auto* exp_cmd = app.add_subcommand("experiment", "Run an experiment grid from a JSON config");
  exp_cmd->add_option("name", exp_name, "local-minima | shots | expressibility | ansatz-compare")->required();
  exp_cmd->add_option("--config", exp_config, "JSON config file")->required();
  exp_cmd->add_option("--out", exp_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*solve_cmd) {
      if (s.graph.empty() && s.qubo.empty()) throw InputError("one of --graph or --qubo is required");
      return solve(s);
    }
    const auto summary = run_experiment(exp_name, exp_config, exp_out);
    std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const PostselectionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPostselection;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
