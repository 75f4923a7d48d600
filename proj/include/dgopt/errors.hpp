#ifndef DGOPT_ERRORS_HPP
#define DGOPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dgopt {

/// Malformed or hypothesis-violating input. The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A dense eigensolver failed to converge.
class EigenSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration produced a non-finite state. The CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}

  /// First time at which a non-finite entry was observed.
  double time() const { return time_; }

 private:
  double time_;
};

/// Evaluation outside the domain of a scalar function (e.g. log of a
/// non-positive number, or a square root of a negative discriminant).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace dgopt

#endif  // DGOPT_ERRORS_HPP
