#pragma once

// Text formats for problems and constraints, and the CSV / JSON writers.
//
// Graph file:      first line n, then "i j w" per edge.
// QUBO file:       first line n, then "i j q" per nonzero entry (i <= j;
//                  i > j is folded onto the upper triangle).
// Constraint file: "i j" per line, meaning x_i + x_j = 1.
// Blank lines and anything after '#' are ignored.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "quenc/constraints.hpp"
#include "quenc/errors.hpp"
#include "quenc/problem.hpp"
#include "quenc/record.hpp"

namespace quenc {

namespace detail {

/// Splits the stream into (line number, tokens) for non-empty lines.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> tokenize(std::istream& in) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string t; ss >> t;) tokens.push_back(std::move(t));
    if (!tokens.empty()) lines.emplace_back(number, std::move(tokens));
  }
  return lines;
}

inline std::size_t parse_index(const std::string& tok, const std::string& source, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (!tok.empty() && tok[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(source, line, "expected a nonnegative integer, got '" + tok + "'");
  }
  if (pos != tok.size()) throw ParseError(source, line, "expected a nonnegative integer, got '" + tok + "'");
  return static_cast<std::size_t>(v);
}

inline double parse_real(const std::string& tok, const std::string& source, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(source, line, "expected a number, got '" + tok + "'");
  }
  if (pos != tok.size() || !std::isfinite(v)) throw ParseError(source, line, "expected a finite number, got '" + tok + "'");
  return v;
}

inline std::size_t parse_header(const std::vector<std::pair<std::size_t, std::vector<std::string>>>& lines,
                                const std::string& source) {
  if (lines.empty()) throw ParseError(source, 0, "empty file: expected the variable count");
  const auto& [ln, tok] = lines.front();
  if (tok.size() != 1) throw ParseError(source, ln, "first line must hold only the variable count");
  const std::size_t n = parse_index(tok[0], source, ln);
  if (n < 2) throw ParseError(source, ln, "need at least 2 variables");
  return n;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  return in;
}

}  // namespace detail

inline MaxCutGraph parse_graph(std::istream& in, const std::string& source = "<graph>") {
  const auto lines = detail::tokenize(in);
  const std::size_t n = detail::parse_header(lines, source);
  MaxCutGraph g(n);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [ln, tok] = lines[k];
    if (tok.size() != 3) throw ParseError(source, ln, "expected 'i j w'");
    const std::size_t i = detail::parse_index(tok[0], source, ln);
    const std::size_t j = detail::parse_index(tok[1], source, ln);
    const double w = detail::parse_real(tok[2], source, ln);
    try {
      g.add_edge(i, j, w);
    } catch (const InputError& e) {
      throw ParseError(source, ln, e.what());
    }
  }
  return g;
}

inline QuboProblem parse_qubo(std::istream& in, const std::string& source = "<qubo>") {
  const auto lines = detail::tokenize(in);
  const std::size_t n = detail::parse_header(lines, source);
  QuboProblem q(n);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [ln, tok] = lines[k];
    if (tok.size() != 3) throw ParseError(source, ln, "expected 'i j q'");
    std::size_t i = detail::parse_index(tok[0], source, ln);
    std::size_t j = detail::parse_index(tok[1], source, ln);
    const double v = detail::parse_real(tok[2], source, ln);
    if (i >= n || j >= n) throw ParseError(source, ln, "index out of range for " + std::to_string(n) + " variables");
    if (i > j) std::swap(i, j);
    if (!seen.emplace(i, j).second) throw ParseError(source, ln, "duplicate entry");
    q.set(i, j, v);
  }
  return q;
}

inline std::vector<Constraint> parse_constraints(std::istream& in, const std::string& source = "<constraints>") {
  std::vector<Constraint> out;
  for (const auto& [ln, tok] : detail::tokenize(in)) {
    if (tok.size() != 2) throw ParseError(source, ln, "expected 'i j'");
    out.push_back({detail::parse_index(tok[0], source, ln), detail::parse_index(tok[1], source, ln)});
  }
  return out;
}

inline MaxCutGraph load_graph(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_graph(in, path.string());
}

inline QuboProblem load_qubo(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_qubo(in, path.string());
}

inline std::vector<Constraint> load_constraints(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_constraints(in, path.string());
}

inline void write_graph(std::ostream& out, const MaxCutGraph& g) {
  out << g.size() << '\n';
  char buf[64];
  for (const auto& e : g.edges()) {
    std::snprintf(buf, sizeof buf, "%.17g", e.weight);
    out << e.i << ' ' << e.j << ' ' << buf << '\n';
  }
}

/// Shortest text that reads back to the same double.
inline std::string format_real(double v) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// iter,cost,best_cost with one row per evaluation.
inline void write_trace_csv(std::ostream& out, const RunRecord& r) {
  out << "iter,cost,best_cost\n";
  for (std::size_t t = 0; t < r.trace.size(); ++t)
    out << t << ',' << format_real(r.trace[t]) << ',' << format_real(r.best_trace[t]) << '\n';
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline RunRecord load_run_record(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  try {
    return run_record_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

/// One row per experiment cell.
struct ExperimentRow {
  std::size_t n_vars = 0;
  int layers = 0;
  std::size_t shots = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double cost = 0.0;
  double relative_cost = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
};

inline void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows, bool include_timing = true) {
  out << "n_c,L,k,alpha,seed,cost,relative_cost,iterations" << (include_timing ? ",wall_ms" : "") << '\n';
  for (const auto& r : rows) {
    out << r.n_vars << ',' << r.layers << ',' << r.shots << ',' << format_real(r.alpha) << ',' << r.seed << ','
        << format_real(r.cost) << ',' << format_real(r.relative_cost) << ',' << r.iterations;
    if (include_timing) out << ',' << format_real(std::round(r.wall_ms * 1000.0) / 1000.0);
    out << '\n';
  }
}

}  // namespace quenc
