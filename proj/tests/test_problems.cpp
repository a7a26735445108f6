#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sympulse/errors.hpp"
#include "sympulse/problems.hpp"

#include <cmath>
#include <numbers>

using namespace sympulse;

namespace {

Vector central_gradient(const std::function<double(const Vector&)>& f, const Vector& y) {
  Vector g(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double step = 1e-6;
    Vector a = y, b = y;
    a[k] += step;
    b[k] -= step;
    g[k] = (f(a) - f(b)) / (2.0 * step);
  }
  return g;
}

void check_gradients(const Problem& p, const Vector& y) {
  const Vector fd = central_gradient(p.system.energy, y);
  CHECK((p.system.gradient(y) - fd).cwiseAbs().maxCoeff() < 1e-7);
  for (const auto& inv : p.system.quadratic_invariants) {
    CHECK((inv.gradient(y) - central_gradient(inv.value, y)).cwiseAbs().maxCoeff() < 1e-7);
  }
  if (p.system.hessian) {
    const Matrix h = p.system.hessian(y);
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      const double step = 1e-6;
      Vector a = y, b = y;
      a[k] += step;
      b[k] -= step;
      const Vector col = (p.system.gradient(a) - p.system.gradient(b)) / (2.0 * step);
      CHECK((h.col(k) - col).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

Vector state(double a, double b, double c, double d) { return (Vector(4) << a, b, c, d).finished(); }

}  // namespace

TEST_CASE("gradients match finite differences") {
  const Vector y = state(0.7, -0.3, 0.2, 0.9);
  check_gradients(kepler(0.6), y);
  check_gradients(quartic(), y);
  check_gradients(henon_heiles(), y);
  check_gradients(harmonic(), (Vector(2) << 0.4, -1.1).finished());
}

TEST_CASE("kepler initial data") {
  const Problem p = kepler(0.6);
  CHECK(p.initial.y0[0] == doctest::Approx(0.4));
  CHECK(p.initial.y0[3] == doctest::Approx(2.0));
  CHECK(p.system.energy(p.initial.y0) == doctest::Approx(-0.5));
  CHECK(p.system.quadratic_invariants.at(0).value(p.initial.y0) == doctest::Approx(0.8));
  CHECK_THROWS_AS(kepler(1.0), InvalidArgument);
  CHECK_THROWS_AS(kepler(-0.1), InvalidArgument);
}

TEST_CASE("kepler singularity is a domain error") {
  const Problem p = kepler(0.6);
  CHECK_THROWS_AS(p.system.energy(state(0.0, 0.0, 1.0, 0.0)), DomainError);
  CHECK_THROWS_AS(p.system.gradient(state(0.0, 0.0, 1.0, 0.0)), DomainError);
}

TEST_CASE("henon-heiles start sits on H = 0.15") {
  const Problem p = henon_heiles();
  CHECK(p.system.energy(p.initial.y0) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(henon_heiles_potential(0.0, 1.0) == doctest::Approx(1.0 / 6.0));
  CHECK(henon_heiles_potential(std::sqrt(3.0) / 2.0, -0.5) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("quartic energy and default start") {
  const Problem p = quartic();
  CHECK(p.system.energy(p.initial.y0) == doctest::Approx(1.5));
  CHECK(p.system.energy(state(1.0, 1.0, 0.0, 0.0)) == doctest::Approx(4.0));
  CHECK_THROWS_AS(quartic(Vector::Zero(3)), InvalidArgument);
}

TEST_CASE("vector field is J grad H") {
  const Problem p = henon_heiles();
  const Vector y = state(0.1, 0.2, 0.3, 0.4);
  const Vector g = p.system.gradient(y);
  const Vector f = p.system.vector_field(y);
  CHECK(f[0] == doctest::Approx(g[2]));
  CHECK(f[1] == doctest::Approx(g[3]));
  CHECK(f[2] == doctest::Approx(-g[0]));
  CHECK(f[3] == doctest::Approx(-g[1]));
}

TEST_CASE("jacobian falls back to differencing") {
  Problem p = quartic();
  const Vector y = state(0.5, -0.2, 0.1, 0.3);
  const Matrix exact = p.system.vector_field_jacobian(y);
  p.system.hessian = nullptr;
  CHECK((p.system.vector_field_jacobian(y) - exact).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("kepler reference at pericentre and apocentre") {
  const double e = 0.6;
  const Vector y0 = kepler_reference(e, 0.0);
  CHECK((y0 - kepler(e).initial.y0).cwiseAbs().maxCoeff() < 1e-15);
  const Vector apo = kepler_reference(e, std::numbers::pi);
  CHECK(apo[0] == doctest::Approx(-(1.0 + e)));
  CHECK(std::abs(apo[1]) < 1e-14);
  CHECK(std::abs(apo[2]) < 1e-14);
  CHECK(apo[3] == doctest::Approx(-std::sqrt((1.0 - e) / (1.0 + e))));
  const Vector full = kepler_reference(e, 2.0 * std::numbers::pi);
  CHECK((full - y0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kepler reference conserves energy and momentum") {
  const Problem p = kepler(0.6);
  for (double t : {0.3, 1.7, 4.0, 50.0}) {
    const Vector y = kepler_reference(0.6, t);
    CHECK(p.system.energy(y) == doctest::Approx(-0.5).epsilon(1e-13));
    CHECK(p.system.quadratic_invariants[0].value(y) == doctest::Approx(0.8).epsilon(1e-13));
  }
}

TEST_CASE("problems by name") {
  CHECK(make_problem("kepler", 0.3).initial.y0[0] == doctest::Approx(0.7));
  CHECK(make_problem("harmonic").system.dimension() == 2);
  CHECK(make_problem("henon-heiles").system.name == "henon-heiles");
  CHECK_THROWS_AS(make_problem("pendulum"), InvalidArgument);
  const Vector y = state(0.5, 0.0, 0.0, 1.0);
  CHECK(make_problem("kepler", 0.6, y).initial.y0[0] == doctest::Approx(0.5));
}
