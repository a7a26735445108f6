#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sympulse/errors.hpp"
#include "sympulse/problems.hpp"
#include "sympulse/stepper.hpp"
#include "sympulse/tableau.hpp"

#include <cmath>

using namespace sympulse;

namespace {

StepConfig config(double h, StageSolver solver = StageSolver::fixed_point) {
  StepConfig cfg;
  cfg.h = h;
  cfg.solver = solver;
  return cfg;
}

Vector kepler_point() { return kepler_reference(0.6, 0.6); }

}  // namespace

TEST_CASE("two-stage gauss on the oscillator is the 2,2 pade approximant") {
  const Problem p = harmonic();
  const double h = 0.3;
  Matrix z(2, 2);
  z << 0.0, h, -h, 0.0;
  const Matrix id = Matrix::Identity(2, 2);
  const Matrix num = id + z / 2.0 + z * z / 12.0;
  const Matrix den = id - z / 2.0 + z * z / 12.0;
  const Vector expected = den.inverse() * num * p.initial.y0;

  const StepResult r = step(p.system, TableauFamily(2, 0).at(0.0), p.initial.y0, config(h));
  CHECK(r.converged);
  CHECK((r.y1 - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("one-stage gauss is the implicit midpoint rule") {
  const Problem p = harmonic();
  const double h = 0.2;
  Matrix z(2, 2);
  z << 0.0, h, -h, 0.0;
  const Matrix id = Matrix::Identity(2, 2);
  const Vector expected = (id - z / 2.0).inverse() * (id + z / 2.0) * p.initial.y0;
  const StepResult r = step(p.system, TableauFamily(1, 0).at(0.0), p.initial.y0, config(h));
  CHECK((r.y1 - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("stages satisfy the runge-kutta equations") {
  const Problem p = kepler(0.6);
  const ButcherTableau t = TableauFamily(3, 2).at(0.01);
  const Vector y0 = kepler_point();
  const StepResult r = step(p.system, t, y0, config(0.1));
  REQUIRE(r.converged);
  for (int i = 0; i < 3; ++i) {
    Vector rhs = y0;
    for (int j = 0; j < 3; ++j) rhs += 0.1 * t.A(i, j) * p.system.vector_field(r.stages.row(j).transpose());
    CHECK((r.stages.row(i).transpose() - rhs).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("newton and fixed point agree") {
  const Problem p = kepler(0.6);
  const ButcherTableau t = TableauFamily(2, 1).at(-0.002);
  const Vector y0 = kepler_point();
  const StepResult a = step(p.system, t, y0, config(0.125));
  const StepResult b = step(p.system, t, y0, config(0.125, StageSolver::simplified_newton));
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(b.newton_used);
  CHECK((a.y1 - b.y1).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("quadratic invariant is kept for any alpha") {
  const Problem p = kepler(0.6);
  const Vector y0 = kepler_point();
  const auto& L = p.system.quadratic_invariants[0];
  for (double alpha : {-0.05, 0.0, 0.03}) {
    const StepResult r = step(p.system, TableauFamily(2, 1).at(alpha), y0, config(0.1));
    CHECK(std::abs(L.value(r.y1) - L.value(y0)) < 1e-14);
  }
}

TEST_CASE("perturbed method is symmetric") {
  const Problem p = kepler(0.6);
  const Vector y0 = kepler_point();
  for (int s : {2, 3}) {
    const ButcherTableau t = TableauFamily(s, s - 1).at(0.05);
    const StepResult fwd = step(p.system, t, y0, config(0.1));
    const StepResult back = step(p.system, t, fwd.y1, config(-0.1));
    CHECK((back.y1 - y0).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("dense output passes through the stages") {
  const Problem p = quartic();
  const QuadratureRule rule = gauss_quadrature(3);
  const Matrix gamma = gamma_matrix(rule);
  const double alpha = 0.02;
  const ButcherTableau t = TableauFamily(3, 2).at(alpha);
  const StepResult r = step(p.system, t, p.initial.y0, config(0.1));
  REQUIRE(r.converged);
  for (int i = 0; i < 3; ++i) {
    const Vector sigma = dense_output(r, t, gamma, alpha, t.c()[i]);
    CHECK((sigma - r.stages.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK((dense_output(r, t, gamma, alpha, 0.0) - p.initial.y0).norm() == 0.0);
  CHECK_THROWS_AS(dense_output(r, t, gamma, alpha, 1.5), InvalidArgument);
}

TEST_CASE("collocation defect vanishes at converged stages") {
  const Problem p = quartic();
  const QuadratureRule rule = gauss_quadrature(3);
  const Matrix gamma = gamma_matrix(rule);
  for (double alpha : {0.0, 0.01}) {
    const ButcherTableau t = TableauFamily(3, 2).at(alpha);
    const StepResult r = step(p.system, t, p.initial.y0, config(0.1));
    CHECK(collocation_defect(r, p.system, t, gamma, alpha).maxCoeff() < 1e-12);
  }
}

TEST_CASE("non-convergence is reported, not thrown") {
  const Problem p = kepler(0.6);
  StepConfig cfg = config(0.5);
  cfg.max_iters = 1;
  const StepResult r = step(p.system, TableauFamily(2, 0).at(0.0), p.initial.y0, cfg);
  CHECK_FALSE(r.converged);
}

TEST_CASE("bad configuration is rejected") {
  const Problem p = harmonic();
  const ButcherTableau t = TableauFamily(2, 0).at(0.0);
  CHECK_THROWS_AS(step(p.system, t, p.initial.y0, config(0.0)), InvalidArgument);
  StepConfig cfg = config(0.1);
  cfg.stage_tol = 0.0;
  CHECK_THROWS_AS(step(p.system, t, p.initial.y0, cfg), InvalidArgument);
  CHECK_THROWS_AS(step(p.system, t, Vector::Zero(4), config(0.1)), InvalidArgument);
}

TEST_CASE("a warm guess gives the same step") {
  const Problem p = henon_heiles();
  const ButcherTableau t = TableauFamily(3, 1).at(0.001);
  const StepResult cold = step(p.system, t, p.initial.y0, config(0.25));
  const Matrix guess = cold.stages;
  const StepResult warm = step(p.system, t, p.initial.y0, config(0.25), &guess);
  CHECK(warm.iterations <= cold.iterations);
  CHECK((warm.y1 - cold.y1).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("collocation residuals on kepler") {
  const Problem p = kepler(0.6);
  const QuadratureRule rule = gauss_quadrature(2);
  const Matrix gamma = gamma_matrix(rule);
  for (double alpha : {0.0, 1e-3}) {
    const ButcherTableau t = TableauFamily(2, 1).at(alpha);
    const StepResult r = step(p.system, t, p.initial.y0, config(1.0 / 32.0));
    CHECK(collocation_defect(r, p.system, t, gamma, alpha).maxCoeff() <= 1e-11);
  }
}

TEST_CASE("gauss dense output ends at y1") {
  const Problem p = kepler(0.6);
  const ButcherTableau t = TableauFamily(3, 0).at(0.0);
  const StepResult r = step(p.system, t, p.initial.y0, config(0.1));
  CHECK((dense_output(r, t, Matrix(), 0.0, 1.0) - r.y1).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("vanishing field gives zero residuals") {
  HamiltonianSystem flat;
  flat.dof = 1;
  flat.energy = [](const Vector&) { return 0.0; };
  flat.gradient = [](const Vector& y) { return Vector::Zero(y.size()); };
  const ButcherTableau t = TableauFamily(2, 1).at(0.1);
  const Vector y0 = (Vector(2) << 0.3, -0.2).finished();
  const StepResult r = step(flat, t, y0, config(0.1));
  CHECK(r.y1 == y0);
  CHECK(collocation_defect(r, flat, t, gamma_matrix(gauss_quadrature(2)), 0.1).maxCoeff() == 0.0);
}

TEST_CASE("momentum is kept for alpha in [-0.1, 0.1] up to h = 0.25") {
  const Vector y0 = kepler_reference(0.6, 2.0);
  for (const Problem& p : {kepler(0.6), quartic()}) {
    const auto& L = p.system.quadratic_invariants[0];
    for (double alpha : {-0.1, 0.05, 0.1}) {
      const StepResult r = step(p.system, TableauFamily(3, 2).at(alpha), y0, config(0.25));
      REQUIRE(r.converged);
      CHECK(std::abs(L.value(r.y1) - L.value(y0)) <= 1e-12);
    }
  }
}
