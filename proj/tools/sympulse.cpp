// sympulse command-line front end. Talks to the library through the C API only.

#include "sympulse/sympulse.h"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
  ApiError(sp_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  sp_status status;
};

void check(sp_status s, const char* context) {
  if (s != SP_OK) {
    throw ApiError(s, fmt::format("{}: {}: {}", context, sp_status_name(s), sp_last_error()));
  }
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// Plain decimal or a dyadic literal 2^k, which is built exactly with ldexp.
double parse_number(const std::string& text) {
  const std::string s = trim(text);
  if (s.rfind("2^", 0) == 0) {
    const std::string exp = s.substr(2);
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(exp, &used);
    } catch (const std::exception&) {
      throw UsageError("bad power-of-two literal '" + s + "'");
    }
    if (used != exp.size()) throw UsageError("bad power-of-two literal '" + s + "'");
    return std::ldexp(1.0, k);
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError("not a number: '" + s + "'");
  return v;
}

// "a,b,c", "hi:lo" (halving from hi down to lo), or "lo:hi:n" (n evenly spaced points).
std::vector<double> parse_list(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() == 2) {
      const double hi = parse_number(parts[0]);
      const double lo = parse_number(parts[1]);
      if (!(hi > 0.0 && lo > 0.0 && lo <= hi)) throw UsageError("halving range needs 0 < lo <= hi: " + text);
      std::vector<double> out;
      for (double h = hi; h >= lo; h *= 0.5) out.push_back(h);
      if (out.back() != lo) throw UsageError("range end is not a halving of its start: " + text);
      return out;
    }
    if (parts.size() == 3) {
      const double lo = parse_number(parts[0]);
      const double hi = parse_number(parts[1]);
      const double n = parse_number(parts[2]);
      if (n < 2 || n != std::floor(n) || n > 1e6) throw UsageError("point count must be an integer >= 2: " + text);
      const int count = static_cast<int>(n);
      std::vector<double> out(count);
      for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
      out.back() = hi;
      return out;
    }
    throw UsageError("bad range: " + text);
  }
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(parse_number(p));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
  return out;
}

struct Defaults {
  double h;
  double t_end;
};

Defaults problem_defaults(const std::string& problem) {
  if (problem == "kepler") return {std::ldexp(1.0, -5), 50.0};
  if (problem == "henon-heiles") return {0.25, 500.0};
  if (problem == "quartic") return {std::ldexp(1.0, -4), 50.0};
  if (problem == "harmonic") return {0.1, 10.0};
  throw UsageError("unknown problem '" + problem + "'");
}

int thread_count() {
  const char* env = std::getenv("SYMPULSE_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) throw UsageError("SYMPULSE_THREADS must be a positive integer");
  return static_cast<int>(n);
}

struct CString {
  char* p = nullptr;
  CString() = default;
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  ~CString() { sp_string_free(p); }
};

template <class T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(Handle&& other) noexcept : p(std::exchange(other.p, nullptr)) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle& operator=(Handle&&) = delete;
  ~Handle() { Destroy(p); }
};

struct Options {
  std::string problem = "kepler";
  double e = 0.6;
  std::string y0;
  std::string method = "ep-gauss";
  int stages = 2;
  int perturb_index = 0;
  std::string alpha = "0";
  std::string h;
  std::string h_list;
  std::string alpha_list;
  std::string t_end;
  std::string alpha_strategy = "bisection";
  std::optional<double> g_tol;
  std::optional<double> bracket_seed;
  std::optional<double> stage_tol;
  std::string stage_solver = "fixed-point";
  std::string format = "csv";
  std::string output;
};

class Runner {
 public:
  explicit Runner(const Options& o) : o_(o) {}

  int tableau() {
    const double alpha = parse_number(o_.alpha);
    header("command", "tableau");
    header("stages", std::to_string(o_.stages));
    header("perturb_index", std::to_string(o_.perturb_index));
    header("alpha", num(alpha));
    Handle<sp_tableau, sp_tableau_destroy> t;
    check(sp_tableau_create(o_.stages, o_.perturb_index, alpha, &t.p), "tableau");
    CString text;
    if (o_.format == "json") {
      check(sp_tableau_json(t.p, &text.p), "tableau");
    } else {
      const auto lines = header_ptrs();
      check(sp_tableau_csv(t.p, lines.data(), lines.size(), &text.p), "tableau");
    }
    return emit(text.p);
  }

  int integrate() {
    const Handle<sp_problem, sp_problem_destroy> p = problem();
    sp_run_options opts = run_options();
    const Defaults d = problem_defaults(o_.problem);
    opts.h = o_.h.empty() ? d.h : parse_number(o_.h);
    opts.t_end = o_.t_end.empty() ? d.t_end : parse_number(o_.t_end);
    header("h", num(opts.h));
    header("t_end", num(opts.t_end));
    Handle<sp_trajectory, sp_trajectory_destroy> tr;
    check(sp_integrate(p.p, &opts, &tr.p), "integrate");
    CString text;
    const auto lines = header_ptrs();
    check(sp_trajectory_csv(tr.p, lines.data(), lines.size(), &text.p), "integrate");
    return emit(text.p);
  }

  int converge() {
    if (o_.h_list.empty()) throw UsageError("converge needs --h-list");
    const Handle<sp_problem, sp_problem_destroy> p = problem();
    sp_run_options opts = run_options();
    const std::vector<double> hs = parse_list(o_.h_list);
    opts.t_end = o_.t_end.empty() ? problem_defaults(o_.problem).t_end : parse_number(o_.t_end);
    const int threads = thread_count();
    header("h_list", join(hs));
    header("t_end", num(opts.t_end));
    header("error_norm", "euclidean");
    Handle<sp_table, sp_table_destroy> tab;
    check(sp_converge(p.p, &opts, hs.data(), hs.size(), threads, &tab.p), "converge");
    CString text;
    const auto lines = header_ptrs();
    check(sp_table_csv(tab.p, lines.data(), lines.size(), &text.p), "converge");
    return emit(text.p);
  }

  int levelmap() {
    const Handle<sp_problem, sp_problem_destroy> p = problem();
    sp_run_options opts = run_options();
    const std::vector<double> hs = parse_list(o_.h_list.empty() ? "0.01:0.2:20" : o_.h_list);
    const std::vector<double> as = parse_list(o_.alpha_list.empty() ? "-0.0005:0.004:91" : o_.alpha_list);
    header("h_list", join(hs));
    header("alpha_list", join(as));
    Handle<sp_grid, sp_grid_destroy> g;
    check(sp_levelmap(p.p, o_.stages, o_.perturb_index, hs.data(), hs.size(), as.data(), as.size(), &opts, &g.p),
          "levelmap");
    CString text;
    const auto lines = header_ptrs();
    check(sp_grid_csv(g.p, lines.data(), lines.size(), &text.p), "levelmap");
    return emit(text.p);
  }

 private:
  void header(const std::string& key, const std::string& value) { header_.push_back(key + "=" + value); }

  std::vector<const char*> header_ptrs() const {
    std::vector<const char*> out;
    for (const auto& line : header_) out.push_back(line.c_str());
    return out;
  }

  Handle<sp_problem, sp_problem_destroy> problem() {
    std::vector<double> y0;
    if (!o_.y0.empty()) {
      for (const auto& v : split(o_.y0, ',')) y0.push_back(parse_number(v));
    }
    problem_defaults(o_.problem);
    header("problem", o_.problem);
    if (o_.problem == "kepler") header("e", num(o_.e));
    if (!y0.empty()) header("y0", join(y0));
    Handle<sp_problem, sp_problem_destroy> p;
    const sp_status s = sp_problem_create(o_.problem.c_str(), o_.e, y0.empty() ? nullptr : y0.data(), y0.size(), &p.p);
    if (s == SP_INVALID_ARGUMENT) throw UsageError(sp_last_error());
    check(s, "problem");
    return p;
  }

  sp_run_options run_options() {
    sp_run_options opts;
    sp_run_options_init(&opts);
    if (sp_method_parse(o_.method.c_str(), &opts.method) != SP_OK) throw UsageError(sp_last_error());
    opts.stages = o_.stages;
    opts.perturb_index = o_.perturb_index;
    opts.fixed_alpha = parse_number(o_.alpha);
    opts.alpha_strategy = o_.alpha_strategy == "secant" ? SP_ALPHA_SECANT : SP_ALPHA_BISECTION;
    if (o_.g_tol) opts.g_tol = *o_.g_tol;
    if (o_.bracket_seed) opts.bracket_seed = *o_.bracket_seed;
    if (o_.stage_tol) opts.stage_tol = *o_.stage_tol;
    opts.stage_solver = o_.stage_solver == "newton" ? SP_SOLVER_SIMPLIFIED_NEWTON : SP_SOLVER_FIXED_POINT;

    header("method", sp_method_name(opts.method));
    header("stages", std::to_string(opts.stages));
    header("perturb_index", std::to_string(opts.perturb_index));
    if (opts.method == SP_METHOD_FIXED_ALPHA) header("alpha", num(opts.fixed_alpha));
    header("alpha_strategy", o_.alpha_strategy);
    header("g_tol", num(opts.g_tol));
    if (o_.bracket_seed) header("bracket_seed", num(opts.bracket_seed));
    header("stage_tol", num(opts.stage_tol));
    header("stage_solver", o_.stage_solver);
    return opts;
  }

  int emit(const char* text) {
    if (o_.output.empty()) {
      std::fputs(text, stdout);
      std::fflush(stdout);
      return kExitOk;
    }
    check(sp_write_file_atomic(o_.output.c_str(), text), "output");
    return kExitOk;
  }

  const Options& o_;
  std::vector<std::string> header_;
};

void add_problem_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--problem", o.problem, "kepler, quartic, henon-heiles or harmonic")
      ->check(CLI::IsMember({"kepler", "quartic", "henon-heiles", "harmonic"}));
  cmd->add_option("--e", o.e, "Kepler eccentricity in [0, 1)");
  cmd->add_option("--y0", o.y0, "initial state, comma separated");
}

void add_method_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--method", o.method, "gauss, fixed-alpha, ep-gauss or ep-gauss-type2");
  cmd->add_option("--stages", o.stages, "number of stages s");
  cmd->add_option("--perturb-index", o.perturb_index, "perturbed subdiagonal, 0 for the method default");
  cmd->add_option("--alpha", o.alpha, "alpha for fixed-alpha");
  cmd->add_option("--alpha-strategy", o.alpha_strategy)->check(CLI::IsMember({"bisection", "secant"}));
  cmd->add_option("--g-tol", o.g_tol, "tolerance on the energy defect");
  cmd->add_option("--bracket-seed", o.bracket_seed, "first bracket half-width");
  cmd->add_option("--stage-tol", o.stage_tol, "stage solver tolerance");
  cmd->add_option("--stage-solver", o.stage_solver)->check(CLI::IsMember({"fixed-point", "newton"}));
}

void add_output_flag(CLI::App* cmd, Options& o) {
  cmd->add_option("-o,--output", o.output, "output file, stdout when omitted");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-preserving perturbed Gauss collocation methods"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", sp_version());
  Options o;

  auto* tab = app.add_subcommand("tableau", "print c, b and A(alpha)");
  tab->add_option("--stages", o.stages, "number of stages s")->required();
  tab->add_option("--alpha", o.alpha, "perturbation parameter");
  tab->add_option("--perturb-index", o.perturb_index, "perturbed subdiagonal, 0 for plain Gauss");
  tab->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));
  add_output_flag(tab, o);

  auto* integ = app.add_subcommand("integrate", "single run, one row per step");
  add_problem_flags(integ, o);
  add_method_flags(integ, o);
  integ->add_option("--h", o.h, "stepsize, decimal or 2^-k");
  integ->add_option("--t-end", o.t_end, "final time");
  add_output_flag(integ, o);

  auto* conv = app.add_subcommand("converge", "error, order and energy drift over a stepsize list");
  add_problem_flags(conv, o);
  add_method_flags(conv, o);
  conv->add_option("--h-list", o.h_list, "e.g. 2^-1:2^-7, 0.1,0.05 or lo:hi:n")->required();
  conv->add_option("--t-end", o.t_end, "final time");
  add_output_flag(conv, o);

  auto* lvl = app.add_subcommand("levelmap", "g(alpha, h) on a grid at the initial state");
  add_problem_flags(lvl, o);
  lvl->add_option("--stages", o.stages, "number of stages s");
  lvl->add_option("--perturb-index", o.perturb_index, "perturbed subdiagonal, 0 for s-1");
  lvl->add_option("--h-list", o.h_list, "stepsizes, default 0.01:0.2:20");
  lvl->add_option("--alpha-list", o.alpha_list, "alpha values, default -0.0005:0.004:91");
  lvl->add_option("--stage-tol", o.stage_tol, "stage solver tolerance");
  lvl->add_option("--stage-solver", o.stage_solver)->check(CLI::IsMember({"fixed-point", "newton"}));
  add_output_flag(lvl, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    Runner run(o);
    if (*tab) return run.tableau();
    if (*integ) return run.integrate();
    if (*conv) return run.converge();
    return run.levelmap();
  } catch (const UsageError& e) {
    std::cerr << "sympulse: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ApiError& e) {
    std::cerr << "sympulse: " << e.what() << "\n";
    switch (e.status) {
      case SP_NO_ROOT:
      case SP_NUMERICAL_FAILURE:
      case SP_DOMAIN_ERROR:
        return kExitNumerical;
      default:
        return kExitUsage;
    }
  }
}
