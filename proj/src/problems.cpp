#include "sympulse/problems.hpp"

#include "sympulse/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sympulse {

Vector apply_symplectic_unit(const Vector& v) {
  const Eigen::Index m = v.size() / 2;
  Vector out(v.size());
  out.head(m) = v.tail(m);
  out.tail(m) = -v.head(m);
  return out;
}

Vector HamiltonianSystem::vector_field(const Vector& y) const {
  return apply_symplectic_unit(gradient(y));
}

Matrix HamiltonianSystem::vector_field_jacobian(const Vector& y) const {
  const int n = dimension();
  Matrix hess(n, n);
  if (hessian) {
    hess = hessian(y);
  } else {
    for (int k = 0; k < n; ++k) {
      const double step = 1e-6 * std::max(1.0, std::abs(y[k]));
      Vector plus = y, minus = y;
      plus[k] += step;
      minus[k] -= step;
      hess.col(k) = (gradient(plus) - gradient(minus)) / (2.0 * step);
    }
  }
  Matrix jac(n, n);
  for (int k = 0; k < n; ++k) jac.col(k) = apply_symplectic_unit(hess.col(k));
  return jac;
}

namespace {

FirstIntegral angular_momentum() {
  return {"L",
          [](const Vector& y) { return y[0] * y[3] - y[1] * y[2]; },
          [](const Vector& y) {
            Vector g(4);
            g << y[3], -y[2], -y[1], y[0];
            return g;
          }};
}

void check_dimension(const Vector& y0, int dim, const std::string& name) {
  if (y0.size() != dim) {
    throw InvalidArgument(name + " needs a state of dimension " + std::to_string(dim) + ", got " +
                          std::to_string(y0.size()));
  }
}

constexpr double kKeplerMinRadius = 1e-8;

double kepler_radius(const Vector& y) {
  const double r = std::hypot(y[0], y[1]);
  if (!(r >= kKeplerMinRadius)) {
    throw DomainError("Kepler potential evaluated at |q| = " + std::to_string(r));
  }
  return r;
}

}  // namespace

Problem kepler(double eccentricity) {
  if (!(eccentricity >= 0.0 && eccentricity < 1.0)) {
    throw InvalidArgument("eccentricity must lie in [0, 1), got " + std::to_string(eccentricity));
  }
  Problem p;
  p.system.name = "kepler";
  p.system.dof = 2;
  p.system.energy = [](const Vector& y) {
    const double r = kepler_radius(y);
    return 0.5 * (y[2] * y[2] + y[3] * y[3]) - 1.0 / r;
  };
  p.system.gradient = [](const Vector& y) {
    const double r = kepler_radius(y);
    const double r3 = r * r * r;
    Vector g(4);
    g << y[0] / r3, y[1] / r3, y[2], y[3];
    return g;
  };
  p.system.hessian = [](const Vector& y) {
    const double r = kepler_radius(y);
    const double r3 = r * r * r;
    const double r5 = r3 * r * r;
    Matrix h = Matrix::Zero(4, 4);
    const Eigen::Vector2d q(y[0], y[1]);
    h.topLeftCorner(2, 2) = Eigen::Matrix2d::Identity() / r3 - 3.0 * q * q.transpose() / r5;
    h(2, 2) = 1.0;
    h(3, 3) = 1.0;
    return h;
  };
  p.system.quadratic_invariants.push_back(angular_momentum());
  p.initial.y0.resize(4);
  p.initial.y0 << 1.0 - eccentricity, 0.0, 0.0,
      std::sqrt((1.0 + eccentricity) / (1.0 - eccentricity));
  p.initial.label = "kepler e=" + std::to_string(eccentricity);
  return p;
}

Problem quartic(std::optional<Vector> y0) {
  Problem p;
  p.system.name = "quartic";
  p.system.dof = 2;
  p.system.energy = [](const Vector& y) {
    const double rho = y[0] * y[0] + y[1] * y[1];
    return 0.5 * (y[2] * y[2] + y[3] * y[3]) + rho * rho;
  };
  p.system.gradient = [](const Vector& y) {
    const double rho = y[0] * y[0] + y[1] * y[1];
    Vector g(4);
    g << 4.0 * rho * y[0], 4.0 * rho * y[1], y[2], y[3];
    return g;
  };
  p.system.hessian = [](const Vector& y) {
    const double rho = y[0] * y[0] + y[1] * y[1];
    const Eigen::Vector2d q(y[0], y[1]);
    Matrix h = Matrix::Zero(4, 4);
    h.topLeftCorner(2, 2) = 4.0 * rho * Eigen::Matrix2d::Identity() + 8.0 * q * q.transpose();
    h(2, 2) = 1.0;
    h(3, 3) = 1.0;
    return h;
  };
  p.system.quadratic_invariants.push_back(angular_momentum());
  if (y0) {
    check_dimension(*y0, 4, "quartic");
    p.initial.y0 = *y0;
  } else {
    p.initial.y0 = (Vector(4) << 1.0, 0.0, 0.0, 1.0).finished();
  }
  p.initial.label = "quartic";
  return p;
}

double henon_heiles_potential(double q1, double q2) {
  return 0.5 * (q1 * q1 + q2 * q2) + q1 * q1 * q2 - q2 * q2 * q2 / 3.0;
}

Problem henon_heiles(std::optional<Vector> y0) {
  Problem p;
  p.system.name = "henon-heiles";
  p.system.dof = 2;
  p.system.energy = [](const Vector& y) {
    return 0.5 * (y[2] * y[2] + y[3] * y[3]) + henon_heiles_potential(y[0], y[1]);
  };
  p.system.gradient = [](const Vector& y) {
    Vector g(4);
    g << y[0] + 2.0 * y[0] * y[1], y[1] + y[0] * y[0] - y[1] * y[1], y[2], y[3];
    return g;
  };
  p.system.hessian = [](const Vector& y) {
    Matrix h = Matrix::Zero(4, 4);
    h(0, 0) = 1.0 + 2.0 * y[1];
    h(0, 1) = h(1, 0) = 2.0 * y[0];
    h(1, 1) = 1.0 - 2.0 * y[1];
    h(2, 2) = 1.0;
    h(3, 3) = 1.0;
    return h;
  };
  if (y0) {
    check_dimension(*y0, 4, "henon-heiles");
    p.initial.y0 = *y0;
  } else {
    p.initial.y0 = (Vector(4) << 0.0, 0.0, std::sqrt(0.3), 0.0).finished();
  }
  p.initial.label = "henon-heiles";
  return p;
}

Problem harmonic(std::optional<Vector> y0) {
  Problem p;
  p.system.name = "harmonic";
  p.system.dof = 1;
  p.system.energy = [](const Vector& y) { return 0.5 * (y[0] * y[0] + y[1] * y[1]); };
  p.system.gradient = [](const Vector& y) { return y; };
  p.system.hessian = [](const Vector&) { return Matrix::Identity(2, 2); };
  if (y0) {
    check_dimension(*y0, 2, "harmonic");
    p.initial.y0 = *y0;
  } else {
    p.initial.y0 = (Vector(2) << 1.0, 0.0).finished();
  }
  p.initial.label = "harmonic";
  return p;
}

Problem make_problem(const std::string& name, double eccentricity, std::optional<Vector> y0) {
  if (name == "kepler") {
    Problem p = kepler(eccentricity);
    if (y0) {
      check_dimension(*y0, 4, "kepler");
      p.initial.y0 = *y0;
    }
    return p;
  }
  if (name == "quartic") return quartic(std::move(y0));
  if (name == "henon-heiles") return henon_heiles(std::move(y0));
  if (name == "harmonic") return harmonic(std::move(y0));
  throw InvalidArgument("unknown problem '" + name + "'");
}

Vector kepler_reference(double eccentricity, double t) {
  if (!(eccentricity >= 0.0 && eccentricity < 1.0)) {
    throw InvalidArgument("eccentricity must lie in [0, 1), got " + std::to_string(eccentricity));
  }
  const double e = eccentricity;
  // Semi-major axis 1 and mean motion 1; the start is the pericentre.
  const double two_pi = 2.0 * std::numbers::pi;
  const double mean_anomaly = std::fmod(t, two_pi);
  double ecc_anomaly = e < 0.8 ? mean_anomaly : std::numbers::pi;
  bool converged = false;
  for (int iter = 0; iter < 50; ++iter) {
    const double residual = ecc_anomaly - e * std::sin(ecc_anomaly) - mean_anomaly;
    if (std::abs(residual) <= 1e-14) {
      converged = true;
      break;
    }
    ecc_anomaly -= residual / (1.0 - e * std::cos(ecc_anomaly));
  }
  if (!converged) throw NumericalFailure("Kepler equation did not converge at t = " + std::to_string(t));

  const double cos_e = std::cos(ecc_anomaly);
  const double sin_e = std::sin(ecc_anomaly);
  const double root = std::sqrt(1.0 - e * e);
  const double denom = 1.0 - e * cos_e;
  Vector y(4);
  y << cos_e - e, root * sin_e, -sin_e / denom, root * cos_e / denom;
  return y;
}

}  // namespace sympulse
