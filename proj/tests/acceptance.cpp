// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--known-deviation N]...
// Exit status is 0 when the failing criteria are exactly the listed deviations.

#include "sympulse/conserve.hpp"
#include "sympulse/experiments.hpp"
#include "sympulse/problems.hpp"
#include "sympulse/stepper.hpp"
#include "sympulse/tableau.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

using namespace sympulse;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int worker_count() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

std::vector<double> dyadic(int from, int to) {
  std::vector<double> out;
  for (int k = from; k <= to; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

RunSpec run(Problem p, Method m, int s, double h, double t_end) {
  RunSpec spec;
  spec.problem = std::move(p);
  spec.method = m;
  spec.stages = s;
  spec.h = h;
  spec.t_end = t_end;
  return spec;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

bool within_rel(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

// Lagrange-basis collocation integrals through monomial coefficients.
Matrix collocation_oracle(const Vector& c) {
  const int s = static_cast<int>(c.size());
  Matrix vander(s, s);
  for (int i = 0; i < s; ++i)
    for (int k = 0; k < s; ++k) vander(i, k) = std::pow(c[i], k);
  const Matrix coeffs = vander.inverse();
  Matrix a(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      double sum = 0.0;
      for (int k = 0; k < s; ++k) sum += coeffs(k, j) * std::pow(c[i], k + 1) / (k + 1);
      a(i, j) = sum;
    }
  return a;
}

Verdict criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 1; s <= 8; ++s) {
    for (int k = 0; k < 100; ++k) {
      const int idx = s == 1 ? 0 : 1 + k % (s - 1);
      worst = std::max(worst, max_abs(symplecticity_defect(TableauFamily(s, idx).at(dist(rng)))));
    }
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.require(worst <= 1e-13, fmt::format("max defect {:.3g} <= 1e-13", worst));
  v.require(secs < 1.0, fmt::format("{:.3f} s < 1 s", secs));
  return v;
}

Verdict criterion2() {
  const auto t0 = Clock::now();
  double tableau_err = 0.0;
  for (int s : {2, 3}) {
    const QuadratureRule r = gauss_quadrature(s);
    tableau_err = std::max(tableau_err, max_abs(TableauFamily(s, 0).at(0.0).A - collocation_oracle(r.nodes)));
  }
  double gram_err = 0.0;
  for (int s = 1; s <= 8; ++s) {
    const QuadratureRule r = gauss_quadrature(s);
    const LegendreBasis p = legendre_basis(r);
    const Matrix gram = p.values.transpose() * r.weights.asDiagonal() * p.values;
    gram_err = std::max(gram_err, max_abs(gram - Matrix::Identity(s, s)));
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.require(tableau_err <= 1e-14, fmt::format("|A(0) - collocation| {:.3g} <= 1e-14", tableau_err));
  v.require(gram_err <= 1e-13, fmt::format("|P^T Omega P - I| {:.3g} <= 1e-13", gram_err));
  v.require(secs < 1.0, fmt::format("{:.3f} s < 1 s", secs));
  return v;
}

Verdict criterion3() {
  const auto t0 = Clock::now();
  const std::vector<double> hs = dyadic(1, 7);
  const double published_e[] = {2.62, 3.85e-1, 2.50e-2, 1.59e-3, 1.00e-4, 6.28e-6, 3.93e-7};
  const double published_order[] = {0.0, 2.763, 3.945, 3.970, 3.991, 3.997, 3.999};
  const auto rows = convergence_table(run(kepler(0.6), Method::ep_gauss, 2, hs[0], 50.0), hs,
                                      kepler_reference(0.6, 50.0), worker_count());
  const double secs = seconds_since(t0);
  Verdict v;
  double worst_order = 0.0, worst_e = 1.0, worst_delta = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double ratio = rows[i].e_h / published_e[i];
    worst_e = std::max({worst_e, ratio, 1.0 / ratio});
    if (rows[i].h <= 0.0625) {
      worst_order = std::max(worst_order, std::abs(*rows[i].order - published_order[i]));
      worst_delta = std::max(worst_delta, std::abs(rows[i].delta_scaled / 0.1586 - 1.0));
    }
  }
  v.require(worst_order <= 0.05, fmt::format("order deviation {:.4f} <= 0.05 for h <= 2^-4", worst_order));
  v.require(worst_e <= 1.5, fmt::format("e(h) within factor {:.3f} <= 1.5", worst_e));
  v.require(worst_delta <= 0.05, fmt::format("delta/h^2 deviation {:.2f}% <= 5%", 100 * worst_delta));
  v.require(secs < 120.0, fmt::format("{:.1f} s < 120 s", secs));
  return v;
}

Verdict criterion4() {
  const double h = 1.0 / 32.0;
  const TrajectoryRecord ep = integrate(run(kepler(0.6), Method::ep_gauss, 2, h, 50.0));
  const TrajectoryRecord gauss = integrate(run(kepler(0.6), Method::gauss, 2, h, 50.0));
  const double eh = ep.max_abs_energy_error();
  const double el = ep.max_abs_invariant_error(0);
  const double gh = gauss.max_abs_energy_error();
  Verdict v;
  v.require(eh <= 1e-12, fmt::format("ep |H err| {:.2g} <= 1e-12", eh));
  v.require(el <= 1e-12, fmt::format("ep |L err| {:.2g} <= 1e-12", el));
  v.require(gh > 1e-12 && gh < 1e-5, fmt::format("gauss |H err| {:.2g} in (1e-12, 1e-5)", gh));
  return v;
}

// Successive ratios of the scaled delta column, worst relative departure from 1.
double worst_successive(const std::vector<ConvergenceRow>& rows) {
  double worst = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    worst = std::max(worst, std::abs(rows[i].delta_scaled / rows[i - 1].delta_scaled - 1.0));
  }
  return worst;
}

Verdict criterion5() {
  const auto t0 = Clock::now();
  const Problem p = quartic();
  // h = 2^-1 is left out: the type-2 energy defect has no root there at this start.
  const std::vector<double> hs = dyadic(2, 6);
  const Vector ref = fine_reference(p, 50.0, hs.back() / 4.0).state;
  Verdict v;
  for (Method m : {Method::ep_gauss, Method::ep_gauss_type2}) {
    const auto rows = convergence_table(run(p, m, 3, hs[0], 50.0), hs, ref, worker_count());
    const bool type2 = m == Method::ep_gauss_type2;
    const double order_tol = type2 ? 0.15 : 0.1;
    const double ratio_tol = type2 ? 0.25 : 0.10;
    double worst_order = 0.0;
    for (std::size_t i = rows.size() - 2; i < rows.size(); ++i) {
      worst_order = std::max(worst_order, std::abs(*rows[i].order - 6.0));
    }
    const double worst_ratio = worst_successive(rows);
    const char* name = method_name(m);
    v.require(worst_order <= order_tol,
              fmt::format("{} order |p-6| {:.3f} <= {}", name, worst_order, order_tol));
    v.require(worst_ratio <= ratio_tol, fmt::format("{} delta/h^{} ratios within {:.1f}% <= {:.0f}%", name,
                                                    type2 ? 4 : 2, 100 * worst_ratio, 100 * ratio_tol));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 300.0, fmt::format("{:.1f} s < 300 s", secs));
  return v;
}

// Ratios alpha*(h)/alpha*(h/2); they must close in on the target and end within tolerance.
void check_ratios(Verdict& v, const std::string& label, const std::vector<double>& alphas, double target,
                  double tol) {
  std::vector<double> ratios;
  for (std::size_t i = 0; i + 1 < alphas.size(); ++i) ratios.push_back(alphas[i] / alphas[i + 1]);
  bool closing = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    closing = closing && std::abs(ratios[i] - target) <= std::abs(ratios[i - 1] - target);
  }
  std::string list;
  for (double r : ratios) list += fmt::format("{}{:.3f}", list.empty() ? "" : ",", r);
  v.require(closing && within_rel(ratios.back(), target, tol),
            fmt::format("{} ratios [{}] -> {} +- {:.0f}%", label, list, target, 100 * tol));
}

Verdict criterion6() {
  const std::vector<double> hs = dyadic(3, 6);
  Verdict v;
  check_ratios(v, "kepler ep-gauss s=2", first_step_alpha(kepler(0.6), 2, 1, hs), 4.0, 0.10);
  check_ratios(v, "quartic type2 s=3", first_step_alpha(quartic(), 3, 1, hs), 16.0, 0.15);
  return v;
}

Verdict criterion7() {
  // Time-symmetric starts make g even in h and shift the slopes; use generic states.
  const Problem kep = make_problem("kepler", 0.6, kepler_reference(0.6, 1.0));
  const Problem qrt = quartic(fine_reference(quartic(), 0.5, 1.0 / 64.0).state);
  const std::vector<double> hs = dyadic(5, 8);
  Verdict v;
  struct Case {
    const char* name;
    const Problem* p;
    int s;
  };
  for (const Case& c : {Case{"kepler s=2", &kep, 2}, Case{"quartic s=3", &qrt, 3}}) {
    const double g0 = energy_defect_order(*c.p, c.s, c.s - 1, 0.0, hs).slope;
    const double ga = energy_defect_order(*c.p, c.s, c.s - 1, 1e-3, hs).slope;
    v.require(std::abs(g0 - (2 * c.s + 1)) <= 0.2, fmt::format("{} slope(alpha=0) {:.3f} vs {}", c.name, g0, 2 * c.s + 1));
    v.require(std::abs(ga - (2 * c.s - 1)) <= 0.2,
              fmt::format("{} slope(alpha=1e-3) {:.3f} vs {}", c.name, ga, 2 * c.s - 1));
  }
  return v;
}

struct GridScan {
  int columns_with_root = 0;
  int columns = 0;
  double spread = 0.0;
  double lo = 0.0, hi = 0.0;
};

GridScan scan_grid(const std::vector<double>& hs, const std::vector<double>& as) {
  const Problem p = kepler(0.6);
  const LevelGrid g = level_grid(p.system, 2, 1, p.initial.y0, hs, as, {});
  GridScan out;
  out.columns = static_cast<int>(hs.size());
  std::vector<double> scaled;
  for (int j = 0; j < out.columns; ++j) {
    const auto roots = grid_column_roots(g, j);
    if (roots.empty()) continue;
    ++out.columns_with_root;
    const double nearest = *std::min_element(roots.begin(), roots.end(),
                                             [](double a, double b) { return std::abs(a) < std::abs(b); });
    scaled.push_back(nearest / (hs[j] * hs[j]));
  }
  if (!scaled.empty()) {
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    out.lo = *lo;
    out.hi = *hi;
    const double mid = 0.5 * (*lo + *hi);
    out.spread = mid == 0.0 ? 0.0 : std::max(std::abs(*hi - mid), std::abs(*lo - mid)) / std::abs(mid);
  }
  return out;
}

Verdict criterion8() {
  const std::vector<double> hs = linspace(0.01, 0.2, 20);
  const GridScan s = scan_grid(hs, linspace(-0.5e-3, 4e-3, 91));
  Verdict v;
  v.require(s.columns_with_root == s.columns,
            fmt::format("{}/{} columns have a sign change", s.columns_with_root, s.columns));
  v.require(s.columns_with_root > 0 && s.spread <= 0.15,
            fmt::format("alpha*/h^2 in [{:.4f}, {:.4f}], spread {:.1f}% <= 15%", s.lo, s.hi, 100 * s.spread));
  const GridScan mirrored = scan_grid(hs, linspace(-4e-3, 0.5e-3, 91));
  fmt::print("info 8: mirrored window alpha in [-4e-3, 0.5e-3]: {}/{} columns with a root, "
             "alpha*/h^2 in [{:.4f}, {:.4f}], spread {:.1f}%\n",
             mirrored.columns_with_root, mirrored.columns, mirrored.lo, mirrored.hi, 100 * mirrored.spread);
  return v;
}

bool inside_triangle(double x, double y) {
  // Vertices (0, 1), (-sqrt(3)/2, -1/2), (sqrt(3)/2, -1/2).
  const double r3 = std::sqrt(3.0);
  return y >= -0.5 && y <= 1.0 - r3 * x && y <= 1.0 + r3 * x;
}

Verdict criterion9() {
  const auto t0 = Clock::now();
  const TrajectoryRecord ep = integrate(run(henon_heiles(), Method::ep_gauss_type2, 3, 0.25, 500.0));
  const TrajectoryRecord gauss = integrate(run(henon_heiles(), Method::gauss, 3, 0.25, 500.0));
  const double secs = seconds_since(t0);
  bool inside = true;
  for (Eigen::Index k = 0; k < ep.states.rows(); ++k) inside = inside && inside_triangle(ep.states(k, 0), ep.states(k, 1));
  const double eh = ep.max_abs_energy_error();
  const double gh = gauss.max_abs_energy_error();
  Verdict v;
  v.require(eh <= 1e-11, fmt::format("ep |H err| {:.2g} <= 1e-11", eh));
  v.require(inside, "orbit stays inside the triangle");
  v.require(gh > eh, fmt::format("gauss |H err| {:.2g} > ep", gh));
  v.require(secs < 120.0, fmt::format("{:.1f} s < 120 s", secs));
  return v;
}

Verdict criterion10() {
  const Problem kep = kepler(0.6);
  double worst_trip = 0.0;
  for (int s : {2, 3}) {
    const ButcherTableau t = TableauFamily(s, s - 1).at(0.05);
    StepConfig fwd, back;
    fwd.h = 0.1;
    back.h = -0.1;
    Vector y = kep.initial.y0;
    for (int k = 0; k < 20; ++k) y = step(kep.system, t, y, fwd).y1;
    for (int k = 0; k < 20; ++k) y = step(kep.system, t, y, back).y1;
    worst_trip = std::max(worst_trip, (y - kep.initial.y0).cwiseAbs().maxCoeff());
  }
  const TrajectoryRecord osc = integrate(run(harmonic(), Method::ep_gauss, 2, 0.1, 10.0));
  const bool all_zero = std::all_of(osc.alpha_trace.begin(), osc.alpha_trace.end(), [](double a) { return a == 0.0; });
  Verdict v;
  v.require(worst_trip <= 1e-12, fmt::format("h/-h round trip {:.2g} <= 1e-12", worst_trip));
  v.require(all_zero, fmt::format("harmonic alpha* == 0 on all {} steps", osc.steps()));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-deviation" && i + 1 < argc) {
      known.insert(std::atoi(argv[++i]));
    } else {
      fmt::print(stderr, "usage: acceptance [--known-deviation N]...\n");
      return 2;
    }
  }

  const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10};
  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) failed.insert(id);
    fmt::print("{} {}: {}\n", v.pass ? "PASS" : "FAIL", id, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failed.size(), criteria.size());
  if (failed == known) return 0;
  for (int id : known) {
    if (!failed.count(id)) fmt::print("known deviation {} now passes; update the list\n", id);
  }
  return 1;
}
