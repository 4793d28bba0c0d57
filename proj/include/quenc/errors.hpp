#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quenc {

/// Malformed or inconsistent user input (files, sizes, configs).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Text-format error tied to a 1-based line number.
class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The requested measurement branch has (near) zero probability.
class PostselectionError : public std::runtime_error {
 public:
  PostselectionError(const std::string& what, double probability)
      : std::runtime_error(what), probability_(probability) {}

  double probability() const noexcept { return probability_; }

 private:
  double probability_;
};

}  // namespace quenc
