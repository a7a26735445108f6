#include "sympulse/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace sympulse {

const char* method_name(Method method) {
  switch (method) {
    case Method::gauss: return "gauss";
    case Method::fixed_alpha: return "fixed-alpha";
    case Method::ep_gauss: return "ep-gauss";
    case Method::ep_gauss_type2: return "ep-gauss-type2";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "gauss") return Method::gauss;
  if (name == "fixed-alpha") return Method::fixed_alpha;
  if (name == "ep-gauss") return Method::ep_gauss;
  if (name == "ep-gauss-type2") return Method::ep_gauss_type2;
  throw InvalidArgument("unknown method '" + name + "'");
}

int RunSpec::resolved_perturb_index() const {
  if (method == Method::gauss) return 0;
  if (perturb_index != 0) return perturb_index;
  return method == Method::ep_gauss_type2 ? 1 : stages - 1;
}

int RunSpec::r() const {
  const int idx = resolved_perturb_index();
  return idx == 0 ? 0 : stages - idx;
}

void RunSpec::validate() const {
  if (stages < 1 || stages > kMaxStages) throw InvalidArgument("stage count must be in 1..10");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("stepsize must be positive");
  if (!(t_end > problem.initial.t0)) throw InvalidArgument("t_end must exceed the initial time");
  if (problem.initial.y0.size() != problem.system.dimension()) {
    throw InvalidArgument("initial state dimension does not match the system");
  }
  if (method != Method::gauss) {
    if (stages < 2) throw InvalidArgument(std::string(method_name(method)) + " needs at least two stages");
    const int idx = resolved_perturb_index();
    if (idx < 1 || idx > stages - 1) throw InvalidArgument("perturbation index outside 1..s-1");
  }
  if (method == Method::ep_gauss && perturb_index != 0 && perturb_index != stages - 1) {
    throw InvalidArgument("ep-gauss perturbs the last subdiagonal; use ep-gauss-type2 for other indices");
  }
  if (tunes_alpha()) search.validate();
}

double TrajectoryRecord::max_abs_energy_error() const {
  double m = 0.0;
  for (double e : energy_error) m = std::max(m, std::abs(e));
  return m;
}

double TrajectoryRecord::max_abs_invariant_error(int k) const {
  return invariant_errors.rows() == 0 ? 0.0 : invariant_errors.col(k).cwiseAbs().maxCoeff();
}

double TrajectoryRecord::alpha_band() const {
  std::size_t last = alpha_trace.size();
  if (final_partial_step && last > 0) --last;
  if (last <= 1) return 0.0;
  const auto [lo, hi] = std::minmax_element(alpha_trace.begin() + 1, alpha_trace.begin() + static_cast<long>(last));
  return *hi - *lo;
}

IntegrationFailure::IntegrationFailure(const std::string& what, std::size_t step_index, double time,
                                       Vector state)
    : NumericalFailure(what), step_index_(step_index), time_(time), state_(std::move(state)) {}

namespace {

std::string failure_message(const std::string& cause, std::size_t k, double t, const Vector& y) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "step " << k << " at t = " << t << " from y = (";
  for (Eigen::Index i = 0; i < y.size(); ++i) msg << (i ? ", " : "") << y[i];
  msg << "): " << cause;
  return msg.str();
}

}  // namespace

TrajectoryRecord integrate(const RunSpec& spec) {
  spec.validate();
  const HamiltonianSystem& sys = spec.problem.system;
  const double t0 = spec.problem.initial.t0;
  const double span = spec.t_end - t0;
  const double ratio = span / spec.h;
  auto full_steps = static_cast<std::size_t>(std::floor(ratio + 1e-9));
  double remainder = span - static_cast<double>(full_steps) * spec.h;
  if (std::abs(remainder) <= 1e-12 * std::max(1.0, std::abs(spec.t_end))) remainder = 0.0;
  const std::size_t total = full_steps + (remainder > 0.0 ? 1 : 0);

  const int idx = spec.resolved_perturb_index();
  const TableauFamily family(spec.stages, idx);
  const ButcherTableau fixed = family.at(spec.method == Method::fixed_alpha ? spec.fixed_alpha : 0.0);

  const int n = sys.dimension();
  const auto& invariants = sys.quadratic_invariants;
  TrajectoryRecord rec;
  rec.final_partial_step = remainder > 0.0;
  rec.times.resize(total + 1);
  rec.states.resize(static_cast<Eigen::Index>(total + 1), n);
  rec.energy_error.resize(total + 1);
  rec.invariant_errors.resize(static_cast<Eigen::Index>(total + 1), static_cast<Eigen::Index>(invariants.size()));
  rec.alpha_trace.assign(total + 1, 0.0);
  rec.g_evals.assign(total + 1, 0);
  rec.stage_iterations.assign(total + 1, 0);
  for (const auto& inv : invariants) rec.invariant_names.push_back(inv.name);

  Vector y = spec.problem.initial.y0;
  const double energy0 = sys.energy(y);
  std::vector<double> invariant0;
  for (const auto& inv : invariants) invariant0.push_back(inv.value(y));

  auto record_row = [&](std::size_t k, double t) {
    rec.times[k] = t;
    rec.states.row(static_cast<Eigen::Index>(k)) = y.transpose();
    rec.energy_error[k] = sys.energy(y) - energy0;
    for (std::size_t i = 0; i < invariants.size(); ++i) {
      rec.invariant_errors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          invariants[i].value(y) - invariant0[i];
    }
  };
  record_row(0, t0);

  std::optional<AlphaSolveRecord> previous;
  Matrix last_stages;
  Vector last_y0;
  for (std::size_t k = 1; k <= total; ++k) {
    const bool partial = k > full_steps;
    const double h = partial ? remainder : spec.h;
    const double t_start = t0 + static_cast<double>(k - 1) * spec.h;
    StepConfig cfg = spec.step_cfg;
    cfg.h = h;
    try {
      if (spec.tunes_alpha()) {
        AlphaSolveRecord r = solve_alpha(sys, family, y, spec.search, cfg, previous ? &*previous : nullptr);
        rec.alpha_trace[k] = r.alpha_star;
        rec.g_evals[k] = r.g_evals;
        rec.stage_iterations[k] = r.stage_iterations;
        y = r.step.y1;
        previous = std::move(r);
      } else {
        Matrix guess;
        const Matrix* guess_ptr = nullptr;
        if (cfg.stage_guess == StageGuess::extrapolated && last_stages.size() != 0) {
          guess = last_stages;
          guess.rowwise() += (y - last_y0).transpose();
          guess_ptr = &guess;
        }
        StepResult r = step(sys, fixed, y, cfg, guess_ptr);
        if (!r.converged) throw NumericalFailure("stage solver did not converge");
        rec.alpha_trace[k] = spec.method == Method::fixed_alpha ? spec.fixed_alpha : 0.0;
        rec.stage_iterations[k] = r.iterations;
        last_stages = r.stages;
        last_y0 = y;
        y = r.y1;
      }
    } catch (const NumericalFailure& e) {
      throw IntegrationFailure(failure_message(e.what(), k, t_start, y), k, t_start, y);
    } catch (const DomainError& e) {
      throw IntegrationFailure(failure_message(e.what(), k, t_start, y), k, t_start, y);
    }
    record_row(k, partial ? spec.t_end : t0 + static_cast<double>(k) * spec.h);
  }
  return rec;
}

ReferenceSolution fine_reference(const Problem& problem, double t_end, double h_min,
                                 double agreement_tol) {
  RunSpec spec;
  spec.problem = problem;
  spec.method = Method::gauss;
  spec.stages = 3;
  spec.t_end = t_end;
  double h = h_min / 8.0;
  spec.h = h;
  Vector coarse = integrate(spec).states.bottomRows(1).transpose();
  double agreement = 0.0;
  for (int refinement = 0; refinement < 5; ++refinement) {
    spec.h = h / 2.0;
    Vector fine = integrate(spec).states.bottomRows(1).transpose();
    agreement = (fine - coarse).norm();
    h = spec.h;
    coarse = std::move(fine);
    if (agreement <= agreement_tol) return {coarse, h, agreement};
  }
  std::ostringstream msg;
  msg << "fine-step reference did not settle: successive runs differ by " << agreement;
  throw NumericalFailure(msg.str());
}

Vector reference_state(const Problem& problem, double eccentricity, double t_end, double h_min) {
  if (problem.system.name == "kepler" && problem.initial.t0 == 0.0 &&
      problem.initial.y0 == kepler(eccentricity).initial.y0) {
    return kepler_reference(eccentricity, t_end);
  }
  return fine_reference(problem, t_end, h_min).state;
}

std::vector<ConvergenceRow> convergence_table(const RunSpec& base, const std::vector<double>& h_list,
                                              const Vector& reference, int threads) {
  if (h_list.empty()) throw InvalidArgument("convergence table needs at least one stepsize");
  for (std::size_t i = 1; i < h_list.size(); ++i) {
    if (!(h_list[i] < h_list[i - 1])) throw InvalidArgument("stepsizes must be strictly decreasing");
  }
  std::vector<ConvergenceRow> rows(h_list.size());
  std::vector<std::exception_ptr> errors(h_list.size());
  const int r = base.r();

  auto run_row = [&](std::size_t i) {
    try {
      RunSpec spec = base;
      spec.h = h_list[i];
      const TrajectoryRecord traj = integrate(spec);
      ConvergenceRow& row = rows[i];
      row.h = h_list[i];
      row.e_h = (traj.states.bottomRows(1).transpose() - reference).norm();
      row.delta_h = base.tunes_alpha() ? traj.alpha_band() : 0.0;
      row.delta_scaled = row.delta_h / std::pow(row.h, 2 * std::max(r, 1));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const int workers = std::clamp(threads, 1, static_cast<int>(h_list.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < h_list.size(); ++i) run_row(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < h_list.size(); i = next++) run_row(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    rows[i].order = std::log2(rows[i - 1].e_h / rows[i].e_h);
  }
  return rows;
}

DefectOrder energy_defect_order(const Problem& problem, int stages, int perturb_index, double alpha,
                                const std::vector<double>& h_list, const StepConfig& step_cfg) {
  if (h_list.size() < 3) throw InvalidArgument("energy defect order needs at least three stepsizes");
  if (alpha != 0.0 && perturb_index == 0) perturb_index = stages - 1;
  const TableauFamily family(stages, alpha == 0.0 ? 0 : perturb_index);
  DefectOrder out;
  std::vector<double> xs, ys;
  for (double h : h_list) {
    StepConfig cfg = step_cfg;
    cfg.h = h;
    const double g = g_eval(problem.system, family, problem.initial.y0, alpha, cfg).g;
    out.g.push_back(g);
    if (std::abs(g) > 1e-15) {
      xs.push_back(std::log(std::abs(h)));
      ys.push_back(std::log(std::abs(g)));
    }
  }
  if (xs.size() < 2) {
    out.degenerate = true;
    return out;
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

std::vector<double> first_step_alpha(const Problem& problem, int stages, int perturb_index,
                                     const std::vector<double>& h_list,
                                     const AlphaSearchConfig& search, const StepConfig& step_cfg) {
  const TableauFamily family(stages, perturb_index);
  std::vector<double> out;
  for (double h : h_list) {
    StepConfig cfg = step_cfg;
    cfg.h = h;
    out.push_back(solve_alpha(problem.system, family, problem.initial.y0, search, cfg).alpha_star);
  }
  return out;
}

}  // namespace sympulse
