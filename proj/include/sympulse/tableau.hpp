#pragma once

#include <Eigen/Dense>

#include <vector>

namespace sympulse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr int kMaxStages = 10;

/// Gauss-Legendre rule on [0, 1]: nodes strictly increasing, weights positive.
struct QuadratureRule {
  int stages = 0;
  Vector nodes;
  Vector weights;
};

/// Orthonormal shifted Legendre polynomials sampled at the quadrature nodes.
/// values(i, j) holds the degree-j polynomial at node i; inverse = values^T * diag(weights).
struct LegendreBasis {
  Matrix values;
  Matrix inverse;
};

/// One perturbed subdiagonal pair of X_s: xi_j -> xi_j + value (1 <= index <= s-1).
struct PerturbationEntry {
  int index = 0;
  double value = 0.0;
};

/// Skew-symmetric low-rank perturbation added to X_s.
class PerturbationSpec {
 public:
  PerturbationSpec() = default;
  explicit PerturbationSpec(int stages, std::vector<PerturbationEntry> entries = {});

  /// Single-parameter perturbation at subdiagonal `index`.
  static PerturbationSpec single(int stages, int index, double alpha);

  int stages() const { return stages_; }
  const std::vector<PerturbationEntry>& entries() const { return entries_; }
  bool is_zero() const;

  /// Smallest index carrying a nonzero value, or 0 when the perturbation vanishes.
  int lowest_active_index() const;

  /// The matrix W~ (s x s); antisymmetric by construction.
  Matrix skew_matrix() const;

 private:
  int stages_ = 0;
  std::vector<PerturbationEntry> entries_;
};

struct ButcherTableau {
  QuadratureRule quadrature;
  LegendreBasis basis;
  Matrix A;
  PerturbationSpec perturbation;
  int order = 0;

  int stages() const { return quadrature.stages; }
  const Vector& c() const { return quadrature.nodes; }
  const Vector& b() const { return quadrature.weights; }
};

/// Nodes and weights of the s-point Gauss-Legendre rule on [0, 1], 1 <= s <= 10.
QuadratureRule gauss_quadrature(int stages);

LegendreBasis legendre_basis(const QuadratureRule& rule);

/// Orthonormal shifted Legendre polynomial of the given degree at tau, and its
/// integral over [0, tau]. Positive leading coefficient.
double shifted_legendre(int degree, double tau);
double shifted_legendre_integral(int degree, double tau);

/// xi_j = 1 / (2 sqrt((2j+1)(2j-1))).
double xi(int j);

/// Gauss tableau in the Legendre basis: X(0,0) = 1/2, X(j,j-1) = xi_j, X(j-1,j) = -xi_j.
Matrix xs_matrix(int stages);

/// A = P (X_s + W~) P^{-1}.
ButcherTableau butcher(const QuadratureRule& rule, const PerturbationSpec& perturbation);

/// Gamma = P X_s^{-1} W P^{-1}, with W the unit skew pair at `perturb_index`
/// (the last subdiagonal when omitted). Solves A(0) Gamma = P W P^{-1}.
Matrix gamma_matrix(const QuadratureRule& rule, int perturb_index = 0);

/// Omega A + A^T Omega - omega omega^T; zero for a symplectic tableau.
Matrix symplecticity_defect(const ButcherTableau& tableau);

/// One-parameter family A(alpha) = A + alpha P W P^{-1} sharing quadrature and basis.
/// Building a member is O(s^2), so root searches can afford one per evaluation.
class TableauFamily {
 public:
  /// perturb_index == 0 means the family is the Gauss method for every alpha.
  TableauFamily(int stages, int perturb_index);

  ButcherTableau at(double alpha) const;

  int stages() const { return gauss_.stages(); }
  int perturb_index() const { return perturb_index_; }
  const ButcherTableau& gauss() const { return gauss_; }
  const Matrix& direction() const { return direction_; }

 private:
  ButcherTableau gauss_;
  int perturb_index_ = 0;
  Matrix direction_;
};

}  // namespace sympulse
