#pragma once

#include "sympulse/problems.hpp"
#include "sympulse/stepper.hpp"
#include "sympulse/tableau.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace sympulse {

enum class AlphaStrategy { bisection, secant };

struct AlphaSearchConfig {
  AlphaStrategy strategy = AlphaStrategy::bisection;
  /// Absolute tolerance on g, multiplied by max(1, |H(y0)|).
  double g_tol = 1e-13;
  double alpha_tol = 1e-16;
  int max_g_evals = 60;
  /// First bracket half-width; 10 h^2 when unset, capped at bracket_max / 20.
  std::optional<double> bracket_seed;
  double bracket_growth = 2.0;
  double bracket_max = 0.5;
  /// Secant second iterate on a cold start; the bracket seed when unset.
  std::optional<double> secant_warm_coefficient;

  void validate() const;
  double seed_for(double h) const;
};

/// Outcome of one per-step root search for g(alpha) = H(y1(alpha)) - H(y0).
struct AlphaSolveRecord {
  double alpha_star = 0.0;
  double g_residual = 0.0;
  int g_evals = 0;
  std::optional<std::pair<double, double>> bracket;
  bool degenerate = false;
  /// True when the secant strategy handed over to bracketing.
  bool secant_fallback = false;
  /// The step taken with alpha_star.
  StepResult step;
  /// Stage iterations summed over every evaluation of g.
  int stage_iterations = 0;
};

struct EnergyProbe {
  double g = 0.0;
  StepResult step;
};

/// H(y1) - H(y0) for a finished step. The line integral of grad H along the
/// unrounded increment replaces the direct difference when the two agree to
/// rounding, which resolves g below one ulp of H.
double energy_increment(const HamiltonianSystem& system, const StepResult& step, const ButcherTableau& tableau,
                        double h0);

/// g(alpha) at (y0, h) for the single-parameter family perturbing `perturb_index`.
/// Throws NumericalFailure when the stage solver does not converge.
EnergyProbe g_eval(const HamiltonianSystem& system, const TableauFamily& family, const Vector& y0,
                   double alpha, const StepConfig& cfg, const Matrix* guess = nullptr);

EnergyProbe g_eval(const HamiltonianSystem& system, int stages, int perturb_index, const Vector& y0,
                   double h, double alpha, const StepConfig& cfg);

/// Finds alpha* with g(alpha*) = 0. `previous` (the prior step's record) warm-starts
/// the secant strategy. Throws NoRootError when no sign change exists up to
/// bracket_max, NumericalFailure when the stage solver fails.
AlphaSolveRecord solve_alpha(const HamiltonianSystem& system, const TableauFamily& family,
                             const Vector& y0, const AlphaSearchConfig& search,
                             const StepConfig& step_cfg, const AlphaSolveRecord* previous = nullptr);

AlphaSolveRecord solve_alpha(const HamiltonianSystem& system, int stages, int perturb_index,
                             const Vector& y0, double h, const AlphaSearchConfig& search,
                             const StepConfig& step_cfg);

struct LevelGrid {
  std::vector<double> h_values;
  std::vector<double> alpha_values;
  /// values(i, j) = g(alpha_values[i], h_values[j]); NaN where the stage solver failed.
  Matrix values;
  int failed_cells = 0;
};

/// g on the full (alpha, h) grid. Per-cell failures are recorded, never thrown.
LevelGrid level_grid(const HamiltonianSystem& system, int stages, int perturb_index,
                     const Vector& y0, const std::vector<double>& h_values,
                     const std::vector<double>& alpha_values, const StepConfig& step_cfg);

/// Zero crossings of g along alpha in column j, linearly interpolated.
std::vector<double> grid_column_roots(const LevelGrid& grid, int column);

}  // namespace sympulse
