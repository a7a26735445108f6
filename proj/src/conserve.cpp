#include "sympulse/conserve.hpp"

#include "sympulse/errors.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>

namespace sympulse {

void AlphaSearchConfig::validate() const {
  if (!(g_tol > 0.0) || !(alpha_tol > 0.0)) throw InvalidArgument("alpha-search tolerances must be positive");
  if (max_g_evals < 3) throw InvalidArgument("max_g_evals must be at least 3");
  if (!(bracket_growth > 1.0)) throw InvalidArgument("bracket growth factor must exceed 1");
  if (!(bracket_max > 0.0)) throw InvalidArgument("bracket_max must be positive");
  if (bracket_seed && !(*bracket_seed > 0.0 && *bracket_seed < bracket_max)) {
    throw InvalidArgument("bracket seed must lie in (0, bracket_max)");
  }
}

double AlphaSearchConfig::seed_for(double h) const {
  if (bracket_seed) return *bracket_seed;
  return std::min(10.0 * h * h, 0.05 * bracket_max);
}

namespace {

const QuadratureRule& line_rule() {
  static const QuadratureRule rule = gauss_quadrature(10);
  return rule;
}

}  // namespace

double energy_increment(const HamiltonianSystem& system, const StepResult& step, const ButcherTableau& tableau,
                        double h0) {
  const double direct = system.energy(step.y1) - h0;
  if (!std::isfinite(direct)) return direct;
  const Vector delta = step.h * (step.stage_derivatives.transpose() * tableau.b());
  const QuadratureRule& rule = line_rule();
  double integral = 0.0;
  for (int k = 0; k < rule.stages; ++k) {
    integral += rule.weights[k] * system.gradient(step.y0 + rule.nodes[k] * delta).dot(delta);
  }
  const Vector grad1 = system.gradient(step.y1);
  const double rounding = 4.0 * std::numeric_limits<double>::epsilon() *
                          (std::abs(h0) + grad1.cwiseAbs().dot(step.y1.cwiseAbs()));
  return std::abs(integral - direct) <= rounding ? integral : direct;
}

EnergyProbe g_eval(const HamiltonianSystem& system, const TableauFamily& family, const Vector& y0,
                   double alpha, const StepConfig& cfg, const Matrix* guess) {
  const ButcherTableau tableau = family.at(alpha);
  EnergyProbe probe{0.0, step(system, tableau, y0, cfg, guess)};
  if (!probe.step.converged) {
    std::ostringstream msg;
    msg << "stage solver did not converge (alpha = " << alpha << ", h = " << cfg.h
        << ", iterations = " << probe.step.iterations << ", residual = " << probe.step.stage_residual << ")";
    throw NumericalFailure(msg.str());
  }
  probe.g = energy_increment(system, probe.step, tableau, system.energy(y0));
  return probe;
}

EnergyProbe g_eval(const HamiltonianSystem& system, int stages, int perturb_index, const Vector& y0,
                   double h, double alpha, const StepConfig& cfg) {
  StepConfig c = cfg;
  c.h = h;
  return g_eval(system, TableauFamily(stages, perturb_index), y0, alpha, c);
}

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Memoized g(alpha) with stage warm starts from the latest evaluation.
class EnergyDefect {
 public:
  EnergyDefect(const HamiltonianSystem& system, const TableauFamily& family, const Vector& y0,
               const StepConfig& cfg, int budget)
      : system_(system), family_(family), y0_(y0), cfg_(cfg), h0_(system.energy(y0)), budget_(budget) {}

  double operator()(double alpha) {
    if (auto it = cache_.find(alpha); it != cache_.end()) return it->second.g;
    if (evals_ >= budget_) throw budget_exhausted{};
    const Matrix* guess = last_stages_.size() ? &last_stages_ : nullptr;
    const ButcherTableau tableau = family_.at(alpha);
    StepResult result = step(system_, tableau, y0_, cfg_, guess);
    ++evals_;
    stage_iterations_ += result.iterations;
    if (!result.converged) {
      std::ostringstream msg;
      msg << "stage solver did not converge (alpha = " << alpha << ", h = " << cfg_.h
          << ", iterations = " << result.iterations << ", residual = " << result.stage_residual << ")";
      throw NumericalFailure(msg.str());
    }
    last_stages_ = result.stages;
    const double g = energy_increment(system_, result, tableau, h0_);
    cache_.emplace(alpha, EnergyProbe{g, std::move(result)});
    return g;
  }

  struct budget_exhausted {};

  void extend_budget(int extra) { budget_ = evals_ + extra; }
  int evals() const { return evals_; }
  int stage_iterations() const { return stage_iterations_; }
  double energy0() const { return h0_; }
  const EnergyProbe& probe(double alpha) const { return cache_.at(alpha); }

 private:
  const HamiltonianSystem& system_;
  const TableauFamily& family_;
  const Vector& y0_;
  StepConfig cfg_;
  double h0_;
  int budget_;
  int evals_ = 0;
  int stage_iterations_ = 0;
  Matrix last_stages_;
  std::map<double, EnergyProbe> cache_;
};

AlphaSolveRecord finish(EnergyDefect& g, double alpha) {
  AlphaSolveRecord rec;
  rec.alpha_star = alpha;
  rec.g_residual = g.probe(alpha).g;
  rec.step = g.probe(alpha).step;
  rec.g_evals = g.evals();
  rec.stage_iterations = g.stage_iterations();
  return rec;
}

std::string describe(double h, const char* what) {
  std::ostringstream msg;
  msg << what << " (h = " << h << ")";
  return msg.str();
}

// Expanding scan for the sign change of g nearest alpha = 0, then bisection
// down to alpha_tol or until the midpoint is no longer representable.
AlphaSolveRecord bracket_and_bisect(EnergyDefect& g, const AlphaSearchConfig& search, double h,
                                    double g_tol) {
  const double g0 = g(0.0);
  if (g0 == 0.0) return finish(g, 0.0);

  // Per-side scan state; sign is +1 or -1, inner is the largest radius known
  // to keep the sign of g(0).
  struct Side {
    double sign;
    double inner = 0.0;
    double g_inner;
    bool alive = true;
    std::optional<double> hit;  // radius of the first sign change
    double g_hit = 0.0;
  };
  Side sides[2] = {{1.0, 0.0, g0, true, std::nullopt, 0.0}, {-1.0, 0.0, g0, true, std::nullopt, 0.0}};

  auto try_g = [&](double alpha) -> std::optional<double> {
    try {
      return g(alpha);
    } catch (const NumericalFailure&) {
    } catch (const DomainError&) {
    }
    return std::nullopt;
  };

  // Far-out alphas can make the stage equations unsolvable at large h. A
  // failed radius is approached from the inside before the side is dropped.
  auto visit = [&](Side& side, double a) {
    if (!side.alive || side.hit) return;
    double lo_r = side.inner, hi_r = a;
    for (int k = 0; k < 12; ++k) {
      const double target = k == 0 ? a : lo_r + 0.5 * (hi_r - lo_r);
      const auto v = try_g(side.sign * target);
      if (!v) {
        hi_r = target;
        continue;
      }
      if (sign(*v) != sign(g0)) {
        side.hit = target;
        side.g_hit = *v;
        return;
      }
      side.inner = lo_r = target;
      side.g_inner = *v;
      if (target == a) return;
    }
    side.alive = false;
  };

  double seed = search.seed_for(h);
  if (std::abs(g0) <= g_tol) {
    const auto gp = try_g(seed);
    const auto gm = try_g(-seed);
    if (gp && gm && std::abs(*gp) <= g_tol && std::abs(*gm) <= g_tol) {
      AlphaSolveRecord rec = finish(g, 0.0);
      rec.degenerate = true;
      return rec;
    }
  }
  for (double a = seed; a <= search.bracket_max; a *= search.bracket_growth) {
    visit(sides[0], a);
    visit(sides[1], a);
    if (sides[0].hit || sides[1].hit) break;
    if (!sides[0].alive && !sides[1].alive) break;
  }

  const Side* chosen = nullptr;
  if (sides[0].hit && sides[1].hit) {
    // Prefer the side whose secant-interpolated root is closer to zero.
    auto root = [](const Side& sd) {
      return sd.inner + (*sd.hit - sd.inner) * sd.g_inner / (sd.g_inner - sd.g_hit);
    };
    chosen = root(sides[0]) <= root(sides[1]) ? &sides[0] : &sides[1];
  } else if (sides[0].hit) {
    chosen = &sides[0];
  } else if (sides[1].hit) {
    chosen = &sides[1];
  }
  if (!chosen) throw NoRootError(describe(h, "no sign change of the energy defect up to bracket_max"));
  double lo = chosen->sign * chosen->inner, g_lo = chosen->g_inner;
  double hi = chosen->sign * *chosen->hit, g_hi = chosen->g_hit;

  const std::pair<double, double> bracket{std::min(lo, hi), std::max(lo, hi)};
  try {
    while (std::abs(hi - lo) > search.alpha_tol) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid == lo || mid == hi) break;
      const double gm = g(mid);
      // An exact zero counts as the far side: where g is flat to rounding the
      // search settles on the edge of the zero band nearest alpha = 0.
      if (gm != 0.0 && sign(gm) == sign(g_lo)) {
        lo = mid, g_lo = gm;
      } else {
        hi = mid, g_hi = gm;
      }
    }
  } catch (const EnergyDefect::budget_exhausted&) {
  }
  const double best = std::abs(g_lo) <= std::abs(g_hi) ? lo : hi;
  AlphaSolveRecord rec = finish(g, best);
  rec.bracket = bracket;
  if (std::abs(rec.g_residual) > g_tol) {
    throw NumericalFailure(describe(h, "bisection exhausted its evaluation budget above g_tol"));
  }
  return rec;
}

// Secant iteration; returns nullopt when the safeguards call for bracketing.
std::optional<AlphaSolveRecord> secant(EnergyDefect& g, const AlphaSearchConfig& search, double h,
                                       double g_tol, const AlphaSolveRecord* previous) {
  double a0 = 0.0;
  double a1 = search.secant_warm_coefficient.value_or(search.seed_for(h));
  const bool warm = previous != nullptr && !previous->degenerate;
  if (warm) {
    a0 = previous->alpha_star;
    a1 = 1.01 * a0 + 1e-12;
  }
  try {
    double g0 = g(a0);
    double g1 = g(a1);
    if (!warm && std::abs(g0) <= g_tol && std::abs(g1) <= g_tol) return std::nullopt;
    double best = std::abs(g0) < std::abs(g1) ? a0 : a1;
    double best_abs = std::min(std::abs(g0), std::abs(g1));
    int growing = 0;
    while (g1 != 0.0) {
      if (g1 == g0) break;
      const double a2 = a1 - g1 * (a1 - a0) / (g1 - g0);
      if (!std::isfinite(a2) || std::abs(a2) > search.bracket_max) return std::nullopt;
      const double g2 = g(a2);
      growing = std::abs(g2) > std::abs(g1) ? growing + 1 : 0;
      if (growing >= 3) return std::nullopt;
      if (std::abs(g2) < best_abs || (std::abs(g2) == best_abs && a2 == best)) {
        best = a2;
        best_abs = std::abs(g2);
      }
      const double da = std::abs(a2 - a1);
      a0 = a1, g0 = g1;
      a1 = a2, g1 = g2;
      if (da <= std::max(search.alpha_tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(a2))) break;
    }
    if (best_abs > g_tol) return std::nullopt;
    return finish(g, best);
  } catch (const EnergyDefect::budget_exhausted&) {
    return std::nullopt;
  }
}

}  // namespace

AlphaSolveRecord solve_alpha(const HamiltonianSystem& system, const TableauFamily& family,
                             const Vector& y0, const AlphaSearchConfig& search,
                             const StepConfig& step_cfg, const AlphaSolveRecord* previous) {
  search.validate();
  step_cfg.validate();
  if (family.perturb_index() == 0) throw InvalidArgument("alpha search needs a perturbed family");
  const double h = step_cfg.h;
  EnergyDefect g(system, family, y0, step_cfg, search.max_g_evals);
  const double g_tol = search.g_tol * std::max(1.0, std::abs(g.energy0()));

  if (search.strategy == AlphaStrategy::secant) {
    if (auto rec = secant(g, search, h, g_tol, previous)) return *rec;
    g.extend_budget(search.max_g_evals);
    AlphaSolveRecord rec = [&] {
      try {
        return bracket_and_bisect(g, search, h, g_tol);
      } catch (const EnergyDefect::budget_exhausted&) {
        throw NoRootError(describe(h, "evaluation budget exhausted while bracketing"));
      }
    }();
    rec.secant_fallback = true;
    return rec;
  }
  try {
    return bracket_and_bisect(g, search, h, g_tol);
  } catch (const EnergyDefect::budget_exhausted&) {
    throw NoRootError(describe(h, "evaluation budget exhausted while bracketing"));
  }
}

AlphaSolveRecord solve_alpha(const HamiltonianSystem& system, int stages, int perturb_index,
                             const Vector& y0, double h, const AlphaSearchConfig& search,
                             const StepConfig& step_cfg) {
  StepConfig c = step_cfg;
  c.h = h;
  return solve_alpha(system, TableauFamily(stages, perturb_index), y0, search, c);
}

LevelGrid level_grid(const HamiltonianSystem& system, int stages, int perturb_index,
                     const Vector& y0, const std::vector<double>& h_values,
                     const std::vector<double>& alpha_values, const StepConfig& step_cfg) {
  if (h_values.empty() || alpha_values.empty()) throw InvalidArgument("level grid needs nonempty axes");
  const TableauFamily family(stages, perturb_index);
  LevelGrid grid;
  grid.h_values = h_values;
  grid.alpha_values = alpha_values;
  grid.values.resize(static_cast<Eigen::Index>(alpha_values.size()), static_cast<Eigen::Index>(h_values.size()));
  for (std::size_t j = 0; j < h_values.size(); ++j) {
    for (std::size_t i = 0; i < alpha_values.size(); ++i) {
      double value = 0.0;
      if (h_values[j] != 0.0) {
        try {
          StepConfig c = step_cfg;
          c.h = h_values[j];
          value = g_eval(system, family, y0, alpha_values[i], c).g;
        } catch (const std::exception&) {
          value = std::numeric_limits<double>::quiet_NaN();
          ++grid.failed_cells;
        }
      }
      grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
    }
  }
  return grid;
}

std::vector<double> grid_column_roots(const LevelGrid& grid, int column) {
  std::vector<double> roots;
  const auto& a = grid.alpha_values;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    const double g1 = grid.values(static_cast<Eigen::Index>(i), column);
    const double g2 = grid.values(static_cast<Eigen::Index>(i + 1), column);
    if (!std::isfinite(g1) || !std::isfinite(g2)) continue;
    if (g1 == 0.0) {
      roots.push_back(a[i]);
    } else if (g1 * g2 < 0.0) {
      roots.push_back(a[i] + (a[i + 1] - a[i]) * g1 / (g1 - g2));
    }
  }
  if (!a.empty() && grid.values(static_cast<Eigen::Index>(a.size() - 1), column) == 0.0) roots.push_back(a.back());
  return roots;
}

}  // namespace sympulse
