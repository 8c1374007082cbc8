#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tunnelshock {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed expressions, inconsistent scenario values, violated
/// preconditions that the caller controls. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::string message, std::size_t offset, std::vector<std::string> expected)
      : ValidationError(std::move(message)), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

enum class Failure {
  domain,
  range,
  no_root,
  step_rejected,
  fold_contact,
  admissibility,
  no_singularity,
  branch_exhausted,
  tangential_merge,
  tuning,
  support_clipping,
  stability,
  boundary_contact,
  empty_comparison,
  regularity,
  off_grid,
  uncovered,
  non_convergence,
};

const char* to_string(Failure kind) noexcept;

/// A computation that could not produce a valid result. Exit code 3 in the CLI.
class NumericalError : public Error {
 public:
  NumericalError(Failure kind, const std::string& message)
      : Error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  Failure kind() const noexcept { return kind_; }

 private:
  Failure kind_;
};

inline const char* to_string(Failure kind) noexcept {
  switch (kind) {
    case Failure::domain: return "domain error";
    case Failure::range: return "range error";
    case Failure::no_root: return "no root";
    case Failure::step_rejected: return "step rejected";
    case Failure::fold_contact: return "fold contact";
    case Failure::admissibility: return "admissibility failure";
    case Failure::no_singularity: return "no singularity";
    case Failure::branch_exhausted: return "branch exhausted";
    case Failure::tangential_merge: return "tangential merge";
    case Failure::tuning: return "tuning failure";
    case Failure::support_clipping: return "support clipping";
    case Failure::stability: return "stability bound violated";
    case Failure::boundary_contact: return "boundary contact";
    case Failure::empty_comparison: return "empty comparison set";
    case Failure::regularity: return "regularity check failed";
    case Failure::off_grid: return "off grid";
    case Failure::uncovered: return "uncovered point";
    case Failure::non_convergence: return "no convergence";
  }
  return "numerical error";
}

}  // namespace tunnelshock
