#include "sympulse/sympulse.h"

#include "sympulse/conserve.hpp"
#include "sympulse/errors.hpp"
#include "sympulse/experiments.hpp"
#include "sympulse/output.hpp"
#include "sympulse/problems.hpp"
#include "sympulse/tableau.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

using namespace sympulse;

struct sp_tableau {
  ButcherTableau tableau;
};

struct sp_problem {
  Problem problem;
  double eccentricity = 0.6;
};

struct sp_trajectory {
  TrajectoryRecord record;
};

struct sp_table {
  std::vector<ConvergenceRow> rows;
};

struct sp_grid {
  LevelGrid grid;
};

namespace {

thread_local std::string last_error;

sp_status fail(sp_status status, const std::string& msg) {
  last_error = msg;
  return status;
}

// Maps the exception in flight onto a status code.
sp_status translate() {
  try {
    throw;
  } catch (const InvalidArgument& e) {
    return fail(SP_INVALID_ARGUMENT, e.what());
  } catch (const DomainError& e) {
    return fail(SP_DOMAIN_ERROR, e.what());
  } catch (const NoRootError& e) {
    return fail(SP_NO_ROOT, e.what());
  } catch (const NumericalFailure& e) {
    return fail(SP_NUMERICAL_FAILURE, e.what());
  } catch (const std::system_error& e) {
    return fail(SP_IO_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SP_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(SP_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(SP_INTERNAL_ERROR, "unknown error");
  }
}

template <class F>
sp_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return SP_OK;
  } catch (...) {
    return translate();
  }
}

#define SP_REQUIRE(cond, msg) \
  do {                        \
    if (!(cond)) return fail(SP_INVALID_ARGUMENT, msg); \
  } while (0)

std::vector<std::string> header_lines(const char* const* header, size_t n) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.emplace_back(header[i] ? header[i] : "");
  return out;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

RunSpec make_spec(const sp_problem* p, const sp_run_options* o) {
  RunSpec spec;
  spec.problem = p->problem;
  switch (o->method) {
    case SP_METHOD_GAUSS: spec.method = Method::gauss; break;
    case SP_METHOD_FIXED_ALPHA: spec.method = Method::fixed_alpha; break;
    case SP_METHOD_EP_GAUSS: spec.method = Method::ep_gauss; break;
    case SP_METHOD_EP_GAUSS_TYPE2: spec.method = Method::ep_gauss_type2; break;
    default: throw InvalidArgument("unknown method code");
  }
  spec.stages = o->stages;
  spec.perturb_index = o->perturb_index;
  spec.fixed_alpha = o->fixed_alpha;
  spec.h = o->h;
  spec.t_end = o->t_end;
  spec.search.strategy = o->alpha_strategy == SP_ALPHA_SECANT ? AlphaStrategy::secant : AlphaStrategy::bisection;
  spec.search.g_tol = o->g_tol;
  spec.search.alpha_tol = o->alpha_tol;
  spec.search.max_g_evals = o->max_g_evals;
  if (o->bracket_seed > 0.0) spec.search.bracket_seed = o->bracket_seed;
  spec.search.bracket_growth = o->bracket_growth;
  spec.search.bracket_max = o->bracket_max;
  spec.step_cfg.stage_tol = o->stage_tol;
  spec.step_cfg.max_iters = o->max_stage_iters;
  spec.step_cfg.solver =
      o->stage_solver == SP_SOLVER_SIMPLIFIED_NEWTON ? StageSolver::simplified_newton : StageSolver::fixed_point;
  spec.step_cfg.stage_guess =
      o->stage_guess == SP_GUESS_EXTRAPOLATED ? StageGuess::extrapolated : StageGuess::from_y0;
  return spec;
}

}  // namespace

extern "C" {

const char* sp_last_error(void) { return last_error.c_str(); }

const char* sp_version(void) { return "0.1.0"; }

const char* sp_status_name(sp_status status) {
  switch (status) {
    case SP_OK: return "ok";
    case SP_INVALID_ARGUMENT: return "invalid argument";
    case SP_DOMAIN_ERROR: return "domain error";
    case SP_NO_ROOT: return "no root";
    case SP_NUMERICAL_FAILURE: return "numerical failure";
    case SP_IO_ERROR: return "i/o error";
    case SP_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

void sp_string_free(char* s) { std::free(s); }

sp_status sp_write_file_atomic(const char* path, const char* content) {
  SP_REQUIRE(path && content, "path and content must not be null");
  return guarded([&] { write_file_atomic(path, content); });
}

sp_status sp_tableau_create(int stages, int perturb_index, double alpha, sp_tableau** out) {
  SP_REQUIRE(out, "out must not be null");
  *out = nullptr;
  return guarded([&] {
    if (stages < 1 || stages > kMaxStages) throw InvalidArgument("stage count must be in 1..10");
    if (perturb_index < 0 || (perturb_index > 0 && perturb_index > stages - 1)) {
      throw InvalidArgument("perturbation index outside 1..s-1");
    }
    const TableauFamily family(stages, perturb_index);
    *out = new sp_tableau{family.at(alpha)};
  });
}

void sp_tableau_destroy(sp_tableau* t) { delete t; }

int sp_tableau_stages(const sp_tableau* t) { return t ? t->tableau.stages() : 0; }

int sp_tableau_order(const sp_tableau* t) { return t ? t->tableau.order : 0; }

sp_status sp_tableau_coefficients(const sp_tableau* t, double* a, double* b, double* c) {
  SP_REQUIRE(t, "tableau must not be null");
  const int s = t->tableau.stages();
  for (int i = 0; i < s; ++i) {
    if (b) b[i] = t->tableau.b()[i];
    if (c) c[i] = t->tableau.c()[i];
    for (int j = 0; j < s && a; ++j) a[i * s + j] = t->tableau.A(i, j);
  }
  last_error.clear();
  return SP_OK;
}

sp_status sp_tableau_symplecticity_defect(const sp_tableau* t, double* out) {
  SP_REQUIRE(t && out, "tableau and out must not be null");
  return guarded([&] { *out = symplecticity_defect(t->tableau).cwiseAbs().maxCoeff(); });
}

sp_status sp_tableau_csv(const sp_tableau* t, const char* const* header, size_t header_lines_n, char** out) {
  SP_REQUIRE(t && out, "tableau and out must not be null");
  SP_REQUIRE(header || header_lines_n == 0, "header must not be null when lines are given");
  return guarded([&] { *out = dup_string(tableau_csv(t->tableau, header_lines(header, header_lines_n))); });
}

sp_status sp_tableau_json(const sp_tableau* t, char** out) {
  SP_REQUIRE(t && out, "tableau and out must not be null");
  return guarded([&] { *out = dup_string(tableau_json(t->tableau)); });
}

sp_status sp_problem_create(const char* name, double eccentricity, const double* y0, size_t y0_len,
                            sp_problem** out) {
  SP_REQUIRE(name && out, "name and out must not be null");
  SP_REQUIRE(y0 || y0_len == 0, "y0 must not be null when a length is given");
  *out = nullptr;
  return guarded([&] {
    std::optional<Vector> start;
    if (y0) start = Eigen::Map<const Vector>(y0, static_cast<Eigen::Index>(y0_len));
    Problem p;
    try {
      p = make_problem(name, eccentricity, start);
    } catch (const DomainError& e) {
      throw InvalidArgument(e.what());
    }
    *out = new sp_problem{std::move(p), eccentricity};
  });
}

void sp_problem_destroy(sp_problem* p) { delete p; }

size_t sp_problem_dimension(const sp_problem* p) {
  return p ? static_cast<size_t>(p->problem.system.dimension()) : 0;
}

sp_status sp_problem_initial_state(const sp_problem* p, double* out) {
  SP_REQUIRE(p && out, "problem and out must not be null");
  const Vector& y = p->problem.initial.y0;
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = y[i];
  last_error.clear();
  return SP_OK;
}

sp_status sp_problem_energy(const sp_problem* p, const double* y, double* out) {
  SP_REQUIRE(p && y && out, "problem, y and out must not be null");
  return guarded([&] {
    const Vector v = Eigen::Map<const Vector>(y, p->problem.system.dimension());
    *out = p->problem.system.energy(v);
  });
}

void sp_run_options_init(sp_run_options* o) {
  if (!o) return;
  const AlphaSearchConfig search;
  const StepConfig step_cfg;
  o->method = SP_METHOD_EP_GAUSS;
  o->stages = 2;
  o->perturb_index = 0;
  o->fixed_alpha = 0.0;
  o->h = 0.0;
  o->t_end = 0.0;
  o->alpha_strategy = SP_ALPHA_BISECTION;
  o->g_tol = search.g_tol;
  o->alpha_tol = search.alpha_tol;
  o->max_g_evals = search.max_g_evals;
  o->bracket_seed = 0.0;
  o->bracket_growth = search.bracket_growth;
  o->bracket_max = search.bracket_max;
  o->stage_tol = step_cfg.stage_tol;
  o->max_stage_iters = step_cfg.max_iters;
  o->stage_solver = SP_SOLVER_FIXED_POINT;
  o->stage_guess = SP_GUESS_FROM_Y0;
}

sp_status sp_method_parse(const char* name, sp_method* out) {
  SP_REQUIRE(name && out, "name and out must not be null");
  return guarded([&] {
    switch (parse_method(name)) {
      case Method::gauss: *out = SP_METHOD_GAUSS; break;
      case Method::fixed_alpha: *out = SP_METHOD_FIXED_ALPHA; break;
      case Method::ep_gauss: *out = SP_METHOD_EP_GAUSS; break;
      case Method::ep_gauss_type2: *out = SP_METHOD_EP_GAUSS_TYPE2; break;
    }
  });
}

const char* sp_method_name(sp_method method) {
  switch (method) {
    case SP_METHOD_GAUSS: return method_name(Method::gauss);
    case SP_METHOD_FIXED_ALPHA: return method_name(Method::fixed_alpha);
    case SP_METHOD_EP_GAUSS: return method_name(Method::ep_gauss);
    case SP_METHOD_EP_GAUSS_TYPE2: return method_name(Method::ep_gauss_type2);
  }
  return "unknown";
}

sp_status sp_integrate(const sp_problem* p, const sp_run_options* opts, sp_trajectory** out) {
  SP_REQUIRE(p && opts && out, "problem, options and out must not be null");
  *out = nullptr;
  return guarded([&] {
    const RunSpec spec = make_spec(p, opts);
    *out = new sp_trajectory{integrate(spec)};
  });
}

void sp_trajectory_destroy(sp_trajectory* tr) { delete tr; }

size_t sp_trajectory_rows(const sp_trajectory* tr) { return tr ? tr->record.times.size() : 0; }

sp_status sp_trajectory_row(const sp_trajectory* tr, size_t k, double* t, double* state, double* alpha) {
  SP_REQUIRE(tr, "trajectory must not be null");
  SP_REQUIRE(k < tr->record.times.size(), "row index out of range");
  const auto row = static_cast<Eigen::Index>(k);
  if (t) *t = tr->record.times[k];
  if (alpha) *alpha = tr->record.alpha_trace[k];
  if (state) {
    for (Eigen::Index i = 0; i < tr->record.states.cols(); ++i) state[i] = tr->record.states(row, i);
  }
  last_error.clear();
  return SP_OK;
}

double sp_trajectory_max_energy_error(const sp_trajectory* tr) {
  return tr ? tr->record.max_abs_energy_error() : 0.0;
}

size_t sp_trajectory_invariant_count(const sp_trajectory* tr) {
  return tr ? tr->record.invariant_names.size() : 0;
}

double sp_trajectory_max_invariant_error(const sp_trajectory* tr, size_t k) {
  if (!tr || k >= tr->record.invariant_names.size()) return 0.0;
  return tr->record.max_abs_invariant_error(static_cast<int>(k));
}

double sp_trajectory_alpha_band(const sp_trajectory* tr) { return tr ? tr->record.alpha_band() : 0.0; }

sp_status sp_trajectory_csv(const sp_trajectory* tr, const char* const* header, size_t header_lines_n,
                            char** out) {
  SP_REQUIRE(tr && out, "trajectory and out must not be null");
  SP_REQUIRE(header || header_lines_n == 0, "header must not be null when lines are given");
  return guarded([&] { *out = dup_string(trajectory_csv(tr->record, header_lines(header, header_lines_n))); });
}

sp_status sp_converge(const sp_problem* p, const sp_run_options* opts, const double* h_list, size_t n,
                      int threads, sp_table** out) {
  SP_REQUIRE(p && opts && out, "problem, options and out must not be null");
  SP_REQUIRE(h_list && n > 0, "at least one stepsize is required");
  *out = nullptr;
  return guarded([&] {
    RunSpec spec = make_spec(p, opts);
    std::vector<double> hs(h_list, h_list + n);
    spec.h = hs.front();
    spec.validate();
    const Vector reference = reference_state(spec.problem, p->eccentricity, spec.t_end, hs.back());
    *out = new sp_table{convergence_table(spec, hs, reference, threads < 1 ? 1 : threads)};
  });
}

void sp_table_destroy(sp_table* tab) { delete tab; }

size_t sp_table_rows(const sp_table* tab) { return tab ? tab->rows.size() : 0; }

sp_status sp_table_row(const sp_table* tab, size_t i, sp_convergence_row* out) {
  SP_REQUIRE(tab && out, "table and out must not be null");
  SP_REQUIRE(i < tab->rows.size(), "row index out of range");
  const ConvergenceRow& r = tab->rows[i];
  out->h = r.h;
  out->e_h = r.e_h;
  out->has_order = r.order.has_value();
  out->order = r.order.value_or(0.0);
  out->delta_h = r.delta_h;
  out->delta_scaled = r.delta_scaled;
  last_error.clear();
  return SP_OK;
}

sp_status sp_table_csv(const sp_table* tab, const char* const* header, size_t header_lines_n, char** out) {
  SP_REQUIRE(tab && out, "table and out must not be null");
  SP_REQUIRE(header || header_lines_n == 0, "header must not be null when lines are given");
  return guarded([&] { *out = dup_string(convergence_csv(tab->rows, header_lines(header, header_lines_n))); });
}

sp_status sp_levelmap(const sp_problem* p, int stages, int perturb_index, const double* h_values, size_t nh,
                      const double* alpha_values, size_t na, const sp_run_options* opts, sp_grid** out) {
  SP_REQUIRE(p && out, "problem and out must not be null");
  SP_REQUIRE(h_values && nh > 0 && alpha_values && na > 0, "level grid needs nonempty axes");
  *out = nullptr;
  return guarded([&] {
    if (stages < 2 || stages > kMaxStages) throw InvalidArgument("level grid needs 2..10 stages");
    const int idx = perturb_index == 0 ? stages - 1 : perturb_index;
    if (idx < 1 || idx > stages - 1) throw InvalidArgument("perturbation index outside 1..s-1");
    StepConfig cfg;
    if (opts) {
      cfg.stage_tol = opts->stage_tol;
      cfg.max_iters = opts->max_stage_iters;
      cfg.solver = opts->stage_solver == SP_SOLVER_SIMPLIFIED_NEWTON ? StageSolver::simplified_newton
                                                                      : StageSolver::fixed_point;
    }
    *out = new sp_grid{level_grid(p->problem.system, stages, idx, p->problem.initial.y0,
                                  std::vector<double>(h_values, h_values + nh),
                                  std::vector<double>(alpha_values, alpha_values + na), cfg)};
  });
}

void sp_grid_destroy(sp_grid* g) { delete g; }

sp_status sp_grid_value(const sp_grid* g, size_t alpha_index, size_t h_index, double* out) {
  SP_REQUIRE(g && out, "grid and out must not be null");
  SP_REQUIRE(alpha_index < g->grid.alpha_values.size() && h_index < g->grid.h_values.size(),
             "grid index out of range");
  *out = g->grid.values(static_cast<Eigen::Index>(alpha_index), static_cast<Eigen::Index>(h_index));
  last_error.clear();
  return SP_OK;
}

size_t sp_grid_failed_cells(const sp_grid* g) { return g ? static_cast<size_t>(g->grid.failed_cells) : 0; }

sp_status sp_grid_csv(const sp_grid* g, const char* const* header, size_t header_lines_n, char** out) {
  SP_REQUIRE(g && out, "grid and out must not be null");
  SP_REQUIRE(header || header_lines_n == 0, "header must not be null when lines are given");
  return guarded([&] { *out = dup_string(level_grid_csv(g->grid, header_lines(header, header_lines_n))); });
}

}  // extern "C"
