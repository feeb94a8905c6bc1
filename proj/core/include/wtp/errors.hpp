#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace wtp {

// Every error carries a short machine-greppable code ("E_CONFIG", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("E_CONFIG", what) {}
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::string node)
      : Error("E_SOLVER", what), node_(std::move(node)) {}

  // Name of the node (or pump) that made the nodal system singular.
  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

class QualityError : public Error {
 public:
  explicit QualityError(const std::string& what) : Error("E_QUALITY", what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error("E_RANGE", what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("E_PARSE", what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("E_FORMAT", what) {}
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error("E_FIT", what) {}
};

class SeriesError : public Error {
 public:
  explicit SeriesError(const std::string& what) : Error("E_SERIES", what) {}
};

class ComparisonError : public Error {
 public:
  explicit ComparisonError(const std::string& what) : Error("E_COMPARE", what) {}
};

}  // namespace wtp
