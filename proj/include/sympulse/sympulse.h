#ifndef SYMPULSE_SYMPULSE_H
#define SYMPULSE_SYMPULSE_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(SYMPULSE_BUILDING)
#define SP_API __declspec(dllexport)
#else
#define SP_API __declspec(dllimport)
#endif
#else
#define SP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sp_status {
  SP_OK = 0,
  SP_INVALID_ARGUMENT = 1,
  SP_DOMAIN_ERROR = 2,
  SP_NO_ROOT = 3,
  SP_NUMERICAL_FAILURE = 4,
  SP_IO_ERROR = 5,
  SP_INTERNAL_ERROR = 6
} sp_status;

typedef enum sp_method {
  SP_METHOD_GAUSS = 0,
  SP_METHOD_FIXED_ALPHA = 1,
  SP_METHOD_EP_GAUSS = 2,
  SP_METHOD_EP_GAUSS_TYPE2 = 3
} sp_method;

typedef enum sp_alpha_strategy { SP_ALPHA_BISECTION = 0, SP_ALPHA_SECANT = 1 } sp_alpha_strategy;
typedef enum sp_stage_solver { SP_SOLVER_FIXED_POINT = 0, SP_SOLVER_SIMPLIFIED_NEWTON = 1 } sp_stage_solver;
typedef enum sp_stage_guess { SP_GUESS_FROM_Y0 = 0, SP_GUESS_EXTRAPOLATED = 1 } sp_stage_guess;

typedef struct sp_tableau sp_tableau;
typedef struct sp_problem sp_problem;
typedef struct sp_trajectory sp_trajectory;
typedef struct sp_table sp_table;
typedef struct sp_grid sp_grid;

/* Message for the most recent failed call on this thread; "" when none. */
SP_API const char* sp_last_error(void);
SP_API const char* sp_version(void);
SP_API const char* sp_status_name(sp_status status);

/* Strings returned through char** are owned by the caller. */
SP_API void sp_string_free(char* s);

/* Writes to a temporary sibling, then renames over path. */
SP_API sp_status sp_write_file_atomic(const char* path, const char* content);

/* ---- tableau ---- */

/* perturb_index 0 gives the Gauss method regardless of alpha. */
SP_API sp_status sp_tableau_create(int stages, int perturb_index, double alpha, sp_tableau** out);
SP_API void sp_tableau_destroy(sp_tableau* t);
SP_API int sp_tableau_stages(const sp_tableau* t);
SP_API int sp_tableau_order(const sp_tableau* t);
/* a: s*s row-major; b, c: s entries. Any pointer may be NULL. */
SP_API sp_status sp_tableau_coefficients(const sp_tableau* t, double* a, double* b, double* c);
/* max-norm of Omega A + A^T Omega - b b^T. */
SP_API sp_status sp_tableau_symplecticity_defect(const sp_tableau* t, double* out);
SP_API sp_status sp_tableau_csv(const sp_tableau* t, const char* const* header, size_t header_lines, char** out);
SP_API sp_status sp_tableau_json(const sp_tableau* t, char** out);

/* ---- problems ---- */

/* name: kepler, quartic, henon-heiles, harmonic. y0 may be NULL for the default start;
   eccentricity is used by kepler only. */
SP_API sp_status sp_problem_create(const char* name, double eccentricity, const double* y0, size_t y0_len,
                                   sp_problem** out);
SP_API void sp_problem_destroy(sp_problem* p);
SP_API size_t sp_problem_dimension(const sp_problem* p);
SP_API sp_status sp_problem_initial_state(const sp_problem* p, double* out);
SP_API sp_status sp_problem_energy(const sp_problem* p, const double* y, double* out);

/* ---- runs ---- */

typedef struct sp_run_options {
  sp_method method;
  int stages;
  int perturb_index; /* 0: method default */
  double fixed_alpha;
  double h;
  double t_end;
  sp_alpha_strategy alpha_strategy;
  double g_tol;
  double alpha_tol;
  int max_g_evals;
  double bracket_seed; /* <= 0: 10 h^2 */
  double bracket_growth;
  double bracket_max;
  double stage_tol;
  int max_stage_iters;
  sp_stage_solver stage_solver;
  sp_stage_guess stage_guess;
} sp_run_options;

SP_API void sp_run_options_init(sp_run_options* opts);
SP_API sp_status sp_method_parse(const char* name, sp_method* out);
SP_API const char* sp_method_name(sp_method method);

SP_API sp_status sp_integrate(const sp_problem* p, const sp_run_options* opts, sp_trajectory** out);
SP_API void sp_trajectory_destroy(sp_trajectory* tr);
/* Rows are steps + 1 (row 0 is the initial state). */
SP_API size_t sp_trajectory_rows(const sp_trajectory* tr);
SP_API sp_status sp_trajectory_row(const sp_trajectory* tr, size_t k, double* t, double* state, double* alpha);
SP_API double sp_trajectory_max_energy_error(const sp_trajectory* tr);
SP_API size_t sp_trajectory_invariant_count(const sp_trajectory* tr);
SP_API double sp_trajectory_max_invariant_error(const sp_trajectory* tr, size_t k);
SP_API double sp_trajectory_alpha_band(const sp_trajectory* tr);
SP_API sp_status sp_trajectory_csv(const sp_trajectory* tr, const char* const* header, size_t header_lines,
                                   char** out);

typedef struct sp_convergence_row {
  double h;
  double e_h;
  int has_order;
  double order;
  double delta_h;
  double delta_scaled;
} sp_convergence_row;

/* h_list strictly decreasing. opts->h is ignored. threads <= 0 means 1. */
SP_API sp_status sp_converge(const sp_problem* p, const sp_run_options* opts, const double* h_list, size_t n,
                             int threads, sp_table** out);
SP_API void sp_table_destroy(sp_table* tab);
SP_API size_t sp_table_rows(const sp_table* tab);
SP_API sp_status sp_table_row(const sp_table* tab, size_t i, sp_convergence_row* out);
SP_API sp_status sp_table_csv(const sp_table* tab, const char* const* header, size_t header_lines, char** out);

/* g(alpha, h) at the problem's start; only stage settings of opts are used. */
SP_API sp_status sp_levelmap(const sp_problem* p, int stages, int perturb_index, const double* h_values,
                             size_t nh, const double* alpha_values, size_t na, const sp_run_options* opts,
                             sp_grid** out);
SP_API void sp_grid_destroy(sp_grid* g);
SP_API sp_status sp_grid_value(const sp_grid* g, size_t alpha_index, size_t h_index, double* out);
SP_API size_t sp_grid_failed_cells(const sp_grid* g);
SP_API sp_status sp_grid_csv(const sp_grid* g, const char* const* header, size_t header_lines, char** out);

#ifdef __cplusplus
}
#endif

#endif
