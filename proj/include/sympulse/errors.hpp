#pragma once

#include <stdexcept>
#include <string>

namespace sympulse {

/// Bad caller input (stage count out of range, malformed perturbation, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A Hamiltonian was evaluated outside its domain (e.g. the Kepler singularity).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative procedure gave up: stage solver, Kepler equation, reference run.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The energy-defect function showed no sign change up to the bracket limit.
class NoRootError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace sympulse
