#pragma once

#include <stdexcept>
#include <string>

namespace softshape {

/// Failure classes. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  Input = 2,
  Solver = 3,
  Safety = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InputError : Error {
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& what) : Error(ErrorKind::Solver, what) {}
};

struct SafetyError : Error {
  explicit SafetyError(const std::string& what) : Error(ErrorKind::Safety, what) {}
};

}  // namespace softshape
