#include "sympulse/tableau.hpp"

#include "sympulse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sympulse {
namespace {

struct LegendreValue {
  long double value;
  long double derivative;
};

// Standard Legendre L_n on [-1, 1] by the three-term recurrence.
LegendreValue legendre(int n, long double x) {
  long double prev = 1.0L;
  if (n == 0) return {prev, 0.0L};
  long double cur = x;
  for (int k = 1; k < n; ++k) {
    const long double next = ((2 * k + 1) * x * cur - k * prev) / (k + 1);
    prev = cur;
    cur = next;
  }
  const long double derivative = n * (x * cur - prev) / (x * x - 1.0L);
  return {cur, derivative};
}

long double legendre_value(int n, long double x) {
  if (n < 0) return 0.0L;
  long double prev = 1.0L;
  if (n == 0) return prev;
  long double cur = x;
  for (int k = 1; k < n; ++k) {
    const long double next = ((2 * k + 1) * x * cur - k * prev) / (k + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

void check_stages(int stages) {
  if (stages < 1 || stages > kMaxStages) {
    throw InvalidArgument("stage count must be in 1.." + std::to_string(kMaxStages) + ", got " +
                          std::to_string(stages));
  }
}

}  // namespace

QuadratureRule gauss_quadrature(int stages) {
  check_stages(stages);
  QuadratureRule rule;
  rule.stages = stages;
  rule.nodes.resize(stages);
  rule.weights.resize(stages);

  // Roots of L_s in (0, 1) on the symmetric interval; nodes come in pairs (1 -/+ x) / 2.
  const int half = stages / 2;
  for (int i = 0; i < half; ++i) {
    long double x = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (stages + 0.5L));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [value, derivative] = legendre(stages, x);
      const long double dx = value / derivative;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    const long double derivative = legendre(stages, x).derivative;
    const long double weight = 1.0L / ((1.0L - x * x) * derivative * derivative);
    rule.nodes[i] = static_cast<double>((1.0L - x) / 2.0L);
    rule.nodes[stages - 1 - i] = static_cast<double>((1.0L + x) / 2.0L);
    rule.weights[i] = static_cast<double>(weight);
    rule.weights[stages - 1 - i] = static_cast<double>(weight);
  }
  if (stages % 2 == 1) {
    const long double derivative = legendre(stages, 0.0L).derivative;
    rule.nodes[half] = 0.5;
    rule.weights[half] = static_cast<double>(1.0L / (derivative * derivative));
  }
  return rule;
}

double shifted_legendre(int degree, double tau) {
  const long double u = 2.0L * tau - 1.0L;
  return static_cast<double>(std::sqrt(2.0L * degree + 1.0L) * legendre_value(degree, u));
}

double shifted_legendre_integral(int degree, double tau) {
  if (degree == 0) return tau;
  const long double u = 2.0L * tau - 1.0L;
  // d/du (L_{n+1} - L_{n-1}) = (2n+1) L_n, and the bracket vanishes at u = -1.
  const long double integral =
      (legendre_value(degree + 1, u) - legendre_value(degree - 1, u)) / (2.0L * (2 * degree + 1));
  return static_cast<double>(std::sqrt(2.0L * degree + 1.0L) * integral);
}

LegendreBasis legendre_basis(const QuadratureRule& rule) {
  const int s = rule.stages;
  LegendreBasis basis;
  basis.values.resize(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) basis.values(i, j) = shifted_legendre(j, rule.nodes[i]);
  }
  basis.inverse = basis.values.transpose() * rule.weights.asDiagonal();
  return basis;
}

double xi(int j) { return 0.5 / std::sqrt(static_cast<double>((2 * j + 1) * (2 * j - 1))); }

Matrix xs_matrix(int stages) {
  if (stages < 1) throw InvalidArgument("stage count must be positive");
  Matrix x = Matrix::Zero(stages, stages);
  x(0, 0) = 0.5;
  for (int j = 1; j < stages; ++j) {
    x(j, j - 1) = xi(j);
    x(j - 1, j) = -xi(j);
  }
  return x;
}

PerturbationSpec::PerturbationSpec(int stages, std::vector<PerturbationEntry> entries)
    : stages_(stages), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.index < 1 || e.index > stages_ - 1) {
      throw InvalidArgument("perturbation index " + std::to_string(e.index) +
                            " outside 1.." + std::to_string(stages_ - 1));
    }
  }
}

PerturbationSpec PerturbationSpec::single(int stages, int index, double alpha) {
  return PerturbationSpec(stages, {{index, alpha}});
}

bool PerturbationSpec::is_zero() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.value == 0.0; });
}

int PerturbationSpec::lowest_active_index() const {
  int lowest = 0;
  for (const auto& e : entries_) {
    if (e.value != 0.0 && (lowest == 0 || e.index < lowest)) lowest = e.index;
  }
  return lowest;
}

Matrix PerturbationSpec::skew_matrix() const {
  Matrix w = Matrix::Zero(stages_, stages_);
  for (const auto& e : entries_) {
    w(e.index, e.index - 1) += e.value;
    w(e.index - 1, e.index) -= e.value;
  }
  return w;
}

ButcherTableau butcher(const QuadratureRule& rule, const PerturbationSpec& perturbation) {
  if (perturbation.stages() != rule.stages && !(perturbation.entries().empty())) {
    throw InvalidArgument("perturbation stage count does not match the quadrature rule");
  }
  ButcherTableau t;
  t.quadrature = rule;
  t.basis = legendre_basis(rule);
  t.perturbation = perturbation.entries().empty() ? PerturbationSpec(rule.stages) : perturbation;
  const Matrix x = xs_matrix(rule.stages) + t.perturbation.skew_matrix();
  t.A = t.basis.values * x * t.basis.inverse;
  const int lowest = t.perturbation.lowest_active_index();
  t.order = lowest == 0 ? 2 * rule.stages : 2 * lowest;
  return t;
}

Matrix gamma_matrix(const QuadratureRule& rule, int perturb_index) {
  const int s = rule.stages;
  if (s < 2) throw InvalidArgument("gamma matrix needs at least two stages");
  if (perturb_index == 0) perturb_index = s - 1;
  const Matrix w = PerturbationSpec::single(s, perturb_index, 1.0).skew_matrix();
  const LegendreBasis basis = legendre_basis(rule);
  const Matrix x_inv_w = xs_matrix(s).partialPivLu().solve(w);
  return basis.values * x_inv_w * basis.inverse;
}

Matrix symplecticity_defect(const ButcherTableau& tableau) {
  const Vector& b = tableau.b();
  const Matrix omega_a = b.asDiagonal() * tableau.A;
  return omega_a + omega_a.transpose() - b * b.transpose();
}

TableauFamily::TableauFamily(int stages, int perturb_index)
    : gauss_(butcher(gauss_quadrature(stages), PerturbationSpec(stages))),
      perturb_index_(perturb_index) {
  if (perturb_index != 0) {
    const Matrix w = PerturbationSpec::single(stages, perturb_index, 1.0).skew_matrix();
    direction_ = gauss_.basis.values * w * gauss_.basis.inverse;
  } else {
    direction_ = Matrix::Zero(stages, stages);
  }
}

ButcherTableau TableauFamily::at(double alpha) const {
  if (perturb_index_ == 0 || alpha == 0.0) {
    ButcherTableau t = gauss_;
    if (perturb_index_ != 0) t.perturbation = PerturbationSpec::single(stages(), perturb_index_, 0.0);
    return t;
  }
  ButcherTableau t = gauss_;
  t.perturbation = PerturbationSpec::single(stages(), perturb_index_, alpha);
  t.A = gauss_.A + alpha * direction_;
  t.order = 2 * perturb_index_;
  return t;
}

}  // namespace sympulse
