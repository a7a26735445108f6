#pragma once

#include "sympulse/conserve.hpp"
#include "sympulse/errors.hpp"
#include "sympulse/problems.hpp"
#include "sympulse/stepper.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sympulse {

enum class Method {
  gauss,           // alpha = 0
  fixed_alpha,     // constant alpha at the chosen subdiagonal
  ep_gauss,        // per-step alpha* on the last subdiagonal
  ep_gauss_type2,  // per-step alpha* on an interior subdiagonal (default 1)
};

const char* method_name(Method method);
Method parse_method(const std::string& name);

struct RunSpec {
  Problem problem;
  Method method = Method::ep_gauss;
  int stages = 2;
  /// 0 selects the method default: s-1, or 1 for ep_gauss_type2.
  int perturb_index = 0;
  double fixed_alpha = 0.0;
  double h = 0.0;
  double t_end = 0.0;
  AlphaSearchConfig search;
  StepConfig step_cfg;

  void validate() const;
  /// 0 for the Gauss method.
  int resolved_perturb_index() const;
  /// Exponent r in alpha* = O(h^{2r}); s minus the perturbed index.
  int r() const;
  bool tunes_alpha() const { return method == Method::ep_gauss || method == Method::ep_gauss_type2; }
};

struct TrajectoryRecord {
  std::vector<double> times;
  /// Row k is the state after k steps; row 0 is the initial state.
  Matrix states;
  std::vector<double> energy_error;
  std::vector<std::string> invariant_names;
  /// Column k tracks invariant k minus its initial value.
  Matrix invariant_errors;
  /// Entry k belongs to the step ending at row k (entry 0 is the initial row, always 0).
  std::vector<double> alpha_trace;
  std::vector<int> g_evals;
  std::vector<int> stage_iterations;
  bool final_partial_step = false;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  double max_abs_energy_error() const;
  double max_abs_invariant_error(int k) const;
  /// max alpha* - min alpha* over the full-length steps.
  double alpha_band() const;
};

/// Raised when a step of a run fails; carries the step index and the state it started from.
class IntegrationFailure : public NumericalFailure {
 public:
  IntegrationFailure(const std::string& what, std::size_t step_index, double time, Vector state);
  std::size_t step_index() const { return step_index_; }
  double time() const { return time_; }
  const Vector& state() const { return state_; }

 private:
  std::size_t step_index_;
  double time_;
  Vector state_;
};

TrajectoryRecord integrate(const RunSpec& spec);

struct ConvergenceRow {
  double h = 0.0;
  double e_h = 0.0;
  std::optional<double> order;
  double delta_h = 0.0;
  double delta_scaled = 0.0;
};

/// Final state of a fine-step 3-stage Gauss run, accepted once two successive
/// halvings of the stepsize agree to `agreement_tol`.
struct ReferenceSolution {
  Vector state;
  double h = 0.0;
  double agreement = 0.0;
};

ReferenceSolution fine_reference(const Problem& problem, double t_end, double h_min,
                                 double agreement_tol = 1e-12);

/// Exact solution for the standard Kepler start, fine-step reference otherwise.
Vector reference_state(const Problem& problem, double eccentricity, double t_end, double h_min);

/// One row per stepsize (strictly decreasing). Error is the Euclidean norm at t_end.
/// Rows run on up to `threads` workers; the result order never depends on scheduling.
std::vector<ConvergenceRow> convergence_table(const RunSpec& base, const std::vector<double>& h_list,
                                              const Vector& reference, int threads = 1);

struct DefectOrder {
  double slope = 0.0;
  bool degenerate = false;
  std::vector<double> g;
};

/// Least-squares slope of log|g(alpha, h)| against log h at the problem's start.
DefectOrder energy_defect_order(const Problem& problem, int stages, int perturb_index, double alpha,
                                const std::vector<double>& h_list, const StepConfig& step_cfg = {});

/// alpha* of the very first step for each stepsize.
std::vector<double> first_step_alpha(const Problem& problem, int stages, int perturb_index,
                                     const std::vector<double>& h_list,
                                     const AlphaSearchConfig& search = {},
                                     const StepConfig& step_cfg = {});

}  // namespace sympulse
