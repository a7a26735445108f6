#pragma once

#include "sympulse/problems.hpp"
#include "sympulse/tableau.hpp"

namespace sympulse {

enum class StageSolver { fixed_point, simplified_newton };
enum class StageGuess { from_y0, extrapolated };

struct StepConfig {
  double h = 0.0;
  double stage_tol = 1e-14;
  int max_iters = 100;
  StageSolver solver = StageSolver::fixed_point;
  StageGuess stage_guess = StageGuess::from_y0;

  /// Throws InvalidArgument for h == 0, non-positive tolerance or max_iters < 1.
  void validate() const;
};

struct StepResult {
  Vector y0;
  double h = 0.0;
  Vector y1;
  /// Row i holds stage Y_i.
  Matrix stages;
  /// Row i holds f(Y_i) at the returned stages.
  Matrix stage_derivatives;
  int iterations = 0;
  bool converged = false;
  double stage_residual = 0.0;
  /// True when the Newton fallback produced the stages.
  bool newton_used = false;
};

/// One step of the Runge-Kutta method (c, A, b). Solves
///   Y_i = y0 + h sum_j A_ij f(Y_j),   y1 = y0 + h sum_j b_j f(Y_j).
///
/// The default solver is plain Picard iteration; when it fails to halve the
/// scaled increment within ten sweeps the solver switches to simplified Newton
/// (Jacobian of f frozen at y0, refreshed at the current stages if Newton
/// itself stalls). Convergence is the max-norm stage increment divided by
/// 1 + |y0|_inf. Non-convergence is reported through `converged`, not thrown.
///
/// `guess` (s x 2m), when given, seeds the stages instead of y0.
StepResult step(const HamiltonianSystem& system, const ButcherTableau& tableau, const Vector& y0,
                const StepConfig& cfg, const Matrix* guess = nullptr);

/// Quasi-collocation polynomial sigma(t0 + tau h) through the computed stages.
/// `gamma` is the unscaled matrix from gamma_matrix(); alpha scales it.
/// Throws InvalidArgument for tau outside [0, 1].
Vector dense_output(const StepResult& result, const ButcherTableau& tableau, const Matrix& gamma,
                    double alpha, double tau);

/// Residuals of sigma'(t0 + c_i h) = f(sigma_i) + alpha sum_j gamma_ij f(sigma_j)
/// at each node, with sigma' taken from the differentiated dense output.
Vector collocation_defect(const StepResult& result, const HamiltonianSystem& system,
                          const ButcherTableau& tableau, const Matrix& gamma, double alpha);

}  // namespace sympulse
