#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tvnet {

// Every failure raised by the library derives from Error and names a stable
// category string; the CLI reports the category and maps it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error("capacity", what) {}
};

class EmptyWindowError : public Error {
 public:
  EmptyWindowError(double tau, double bandwidth, const std::string& what)
      : Error("empty_window", what), tau_(tau), bandwidth_(bandwidth) {}

  double tau() const noexcept { return tau_; }
  double bandwidth() const noexcept { return bandwidth_; }

 private:
  double tau_;
  double bandwidth_;
};

// Raised when an iterative solver hits its iteration cap. Carries the last
// iterate and the objective trace so callers can inspect or resume.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate,
                   std::vector<double> objective_trace)
      : Error("convergence", what),
        last_iterate_(std::move(last_iterate)),
        objective_trace_(std::move(objective_trace)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  const std::vector<double>& objective_trace() const noexcept { return objective_trace_; }

 private:
  std::vector<double> last_iterate_;
  std::vector<double> objective_trace_;
};

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& what) : Error("generation", what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : Error("parse", what), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error("io", what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace tvnet
