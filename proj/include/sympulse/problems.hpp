#pragma once

#include "sympulse/tableau.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sympulse {

/// A first integral with its gradient, e.g. angular momentum.
struct FirstIntegral {
  std::string name;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// Canonical Hamiltonian system y' = J grad H(y) on R^{2m}, y = (q, p).
struct HamiltonianSystem {
  std::string name;
  int dof = 0;
  std::function<double(const Vector&)> energy;
  std::function<Vector(const Vector&)> gradient;
  /// Optional; the vector-field Jacobian falls back to differencing the gradient.
  std::function<Matrix(const Vector&)> hessian;
  std::vector<FirstIntegral> quadratic_invariants;

  int dimension() const { return 2 * dof; }

  /// J grad H(y).
  Vector vector_field(const Vector& y) const;
  /// J Hess H(y).
  Matrix vector_field_jacobian(const Vector& y) const;
};

/// Applies J = [[0, I], [-I, 0]] to a 2m-vector.
Vector apply_symplectic_unit(const Vector& v);

struct InitialCondition {
  Vector y0;
  double t0 = 0.0;
  std::string label;
};

struct Problem {
  HamiltonianSystem system;
  InitialCondition initial;
};

/// Two-body problem with unit masses; q1 = 1-e, p2 = sqrt((1+e)/(1-e)). 0 <= e < 1.
Problem kepler(double eccentricity);

/// H = (p1^2+p2^2)/2 + (q1^2+q2^2)^2 with angular momentum; default start (1, 0, 0, 1).
Problem quartic(std::optional<Vector> y0 = std::nullopt);

/// Henon-Heiles from (0, 0, sqrt(3/10), 0), H = 0.15.
Problem henon_heiles(std::optional<Vector> y0 = std::nullopt);

/// H = (p^2 + q^2) / 2 from (1, 0).
Problem harmonic(std::optional<Vector> y0 = std::nullopt);

/// Henon-Heiles potential U(q1, q2).
double henon_heiles_potential(double q1, double q2);

/// Problem lookup by CLI name: kepler, quartic, henon-heiles, harmonic.
Problem make_problem(const std::string& name, double eccentricity = 0.6,
                     std::optional<Vector> y0 = std::nullopt);

/// Exact Kepler state at time t for the standard initial condition.
Vector kepler_reference(double eccentricity, double t);

}  // namespace sympulse
