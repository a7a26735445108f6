#include "sympulse/stepper.hpp"

#include "sympulse/errors.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace sympulse {

void StepConfig::validate() const {
  if (h == 0.0 || !std::isfinite(h)) throw InvalidArgument("stepsize must be finite and nonzero");
  if (!(stage_tol > 0.0)) throw InvalidArgument("stage tolerance must be positive");
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
}

namespace {

// Stage equations in the shifted unknowns Z = Y - e y0, stored row-wise (s x n).
class StageSystem {
 public:
  StageSystem(const HamiltonianSystem& system, const Matrix& a, const Vector& y0, double h)
      : system_(system), a_(a), y0_(y0), h_(h), s_(static_cast<int>(a.rows())),
        n_(static_cast<int>(y0.size())) {}

  Matrix derivatives(const Matrix& stages) const {
    Matrix f(s_, n_);
    for (int i = 0; i < s_; ++i) f.row(i) = system_.vector_field(stages.row(i).transpose()).transpose();
    return f;
  }

  Matrix stages_from(const Matrix& f) const {
    Matrix y = h_ * (a_ * f);
    y.rowwise() += y0_.transpose();
    return y;
  }

  // I - h (A (x) I) diag(Jf_1, ..., Jf_s), indices (i, component).
  Matrix newton_matrix(const std::vector<Matrix>& jacobians) const {
    const int dim = s_ * n_;
    Matrix m = Matrix::Identity(dim, dim);
    for (int i = 0; i < s_; ++i) {
      for (int j = 0; j < s_; ++j) {
        m.block(i * n_, j * n_, n_, n_) -= h_ * a_(i, j) * jacobians[j];
      }
    }
    return m;
  }

  int stages() const { return s_; }
  int dim() const { return n_; }
  const Vector& y0() const { return y0_; }
  const HamiltonianSystem& system() const { return system_; }

 private:
  const HamiltonianSystem& system_;
  const Matrix& a_;
  const Vector& y0_;
  double h_;
  int s_;
  int n_;
};

Vector flatten(const Matrix& rows) {
  Vector v(rows.size());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) v.segment(i * rows.cols(), rows.cols()) = rows.row(i).transpose();
  return v;
}

Matrix unflatten(const Vector& v, int s, int n) {
  Matrix m(s, n);
  for (int i = 0; i < s; ++i) m.row(i) = v.segment(i * n, n).transpose();
  return m;
}

struct SolveState {
  Matrix stages;
  int iterations = 0;
  double increment = 0.0;
  bool converged = false;
};

enum class PicardOutcome { converged, exhausted, switch_to_newton };

PicardOutcome picard(const StageSystem& sys, const StepConfig& cfg, double scale, SolveState& st) {
  std::deque<double> history;
  while (st.iterations < cfg.max_iters) {
    Matrix next;
    try {
      next = sys.stages_from(sys.derivatives(st.stages));
    } catch (const DomainError&) {
      return PicardOutcome::switch_to_newton;
    }
    ++st.iterations;
    st.increment = (next - st.stages).cwiseAbs().maxCoeff() / scale;
    st.stages = std::move(next);
    if (!std::isfinite(st.increment)) return PicardOutcome::switch_to_newton;
    if (st.increment <= cfg.stage_tol) {
      st.converged = true;
      return PicardOutcome::converged;
    }
    history.push_back(st.increment);
    if (history.size() > 10) {
      const double old = history.front();
      history.pop_front();
      if (st.increment > 0.5 * old) return PicardOutcome::switch_to_newton;
      // Rate estimate over the window; bail out when the budget cannot cover it.
      const double rate = std::pow(st.increment / old, 0.1);
      const double needed = std::log(cfg.stage_tol / st.increment) / std::log(rate);
      if (needed > 0.5 * (cfg.max_iters - st.iterations)) return PicardOutcome::switch_to_newton;
    }
  }
  return PicardOutcome::exhausted;
}

// Simplified Newton with the Jacobian frozen at the current stages; it is
// refreshed whenever the increment stops halving. Newton gets its own budget.
void newton(const StageSystem& sys, const StepConfig& cfg, double scale, SolveState& st) {
  const int s = sys.stages();
  const int n = sys.dim();
  std::vector<Matrix> jacobians(s);
  auto refresh = [&](Eigen::PartialPivLU<Matrix>& lu) {
    for (int j = 0; j < s; ++j) jacobians[j] = sys.system().vector_field_jacobian(st.stages.row(j).transpose());
    lu.compute(sys.newton_matrix(jacobians));
  };
  Eigen::PartialPivLU<Matrix> lu;
  refresh(lu);
  double previous = std::numeric_limits<double>::infinity();
  int slow = 0;
  const int limit = st.iterations + cfg.max_iters;
  while (st.iterations < limit) {
    Matrix residual;
    try {
      residual = st.stages - sys.stages_from(sys.derivatives(st.stages));
    } catch (const DomainError&) {
      st.increment = std::numeric_limits<double>::infinity();
      return;
    }
    const Vector delta = lu.solve(-flatten(residual));
    ++st.iterations;
    st.stages += unflatten(delta, s, n);
    st.increment = delta.cwiseAbs().maxCoeff() / scale;
    if (!std::isfinite(st.increment)) return;
    if (st.increment <= cfg.stage_tol) {
      st.converged = true;
      return;
    }
    slow = st.increment > 0.5 * previous ? slow + 1 : 0;
    previous = st.increment;
    if (slow >= 1) {
      refresh(lu);
      slow = 0;
    }
  }
}

// A few extra fixed-point sweeps while they still shrink the increment; pushes
// the stages from stage_tol to rounding level when the map contracts.
void polish(const StageSystem& sys, SolveState& st, double scale) {
  double last = st.increment;
  for (int k = 0; k < 4 && last > 0.0; ++k) {
    Matrix next = sys.stages_from(sys.derivatives(st.stages));
    const double inc = (next - st.stages).cwiseAbs().maxCoeff() / scale;
    if (!(inc < 0.5 * last)) break;
    st.stages = std::move(next);
    st.increment = inc;
    ++st.iterations;
    last = inc;
  }
}

}  // namespace

StepResult step(const HamiltonianSystem& system, const ButcherTableau& tableau, const Vector& y0,
                const StepConfig& cfg, const Matrix* guess) {
  cfg.validate();
  const int s = tableau.stages();
  const int n = static_cast<int>(y0.size());
  if (n != system.dimension()) throw InvalidArgument("state dimension does not match the system");
  if (!y0.allFinite()) throw InvalidArgument("initial state is not finite");

  const StageSystem sys(system, tableau.A, y0, cfg.h);
  const double scale = 1.0 + y0.cwiseAbs().maxCoeff();

  Matrix initial(s, n);
  if (guess != nullptr && guess->rows() == s && guess->cols() == n && guess->allFinite()) {
    initial = *guess;
  } else {
    initial.rowwise() = y0.transpose();
  }

  SolveState st{initial};
  bool newton_used = false;
  if (cfg.solver == StageSolver::fixed_point) {
    const PicardOutcome outcome = picard(sys, cfg, scale, st);
    if (outcome == PicardOutcome::switch_to_newton || outcome == PicardOutcome::exhausted) {
      // Keep the Picard iterate only while it is still close to a fixed point.
      if (!st.stages.allFinite() || !(st.increment < 1e-2)) st.stages = initial;
      newton(sys, cfg, scale, st);
      newton_used = true;
    }
  } else {
    newton(sys, cfg, scale, st);
    newton_used = true;
  }
  if (st.converged) polish(sys, st, scale);

  StepResult result;
  result.y0 = y0;
  result.h = cfg.h;
  result.stages = std::move(st.stages);
  result.iterations = st.iterations;
  result.converged = st.converged;
  result.stage_residual = st.increment;
  result.newton_used = newton_used;
  if (result.stages.allFinite()) {
    result.stage_derivatives = sys.derivatives(result.stages);
    result.y1 = y0 + cfg.h * (result.stage_derivatives.transpose() * tableau.b());
  } else {
    result.converged = false;
    result.stage_derivatives = Matrix::Constant(s, n, std::numeric_limits<double>::quiet_NaN());
    result.y1 = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  }
  return result;
}

namespace {

Vector lagrange_integrals(const ButcherTableau& tableau, double tau) {
  const int s = tableau.stages();
  Vector ip(s);
  for (int m = 0; m < s; ++m) ip[m] = shifted_legendre_integral(m, tau);
  return tableau.basis.inverse.transpose() * ip;
}

Vector lagrange_values(const ButcherTableau& tableau, double tau) {
  const int s = tableau.stages();
  Vector p(s);
  for (int m = 0; m < s; ++m) p[m] = shifted_legendre(m, tau);
  return tableau.basis.inverse.transpose() * p;
}

Matrix effective_gamma(const Matrix& gamma, int s) {
  if (gamma.size() == 0) return Matrix::Zero(s, s);
  if (gamma.rows() != s || gamma.cols() != s) throw InvalidArgument("gamma has the wrong shape");
  return gamma;
}

}  // namespace

Vector dense_output(const StepResult& result, const ButcherTableau& tableau, const Matrix& gamma,
                    double alpha, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw InvalidArgument("dense output is defined for tau in [0, 1], got " + std::to_string(tau));
  }
  if (tau == 0.0) return result.y0;
  const Matrix g = effective_gamma(gamma, tableau.stages());
  const Vector v = lagrange_integrals(tableau, tau);
  const Vector w = v + alpha * (g.transpose() * v);
  return result.y0 + result.h * (result.stage_derivatives.transpose() * w);
}

Vector collocation_defect(const StepResult& result, const HamiltonianSystem& system,
                          const ButcherTableau& tableau, const Matrix& gamma, double alpha) {
  const int s = tableau.stages();
  const int n = static_cast<int>(result.y0.size());
  const Matrix g = effective_gamma(gamma, s);

  Matrix f_sigma(s, n);
  for (int j = 0; j < s; ++j) {
    const Vector sigma = dense_output(result, tableau, g, alpha, tableau.c()[j]);
    f_sigma.row(j) = system.vector_field(sigma).transpose();
  }
  Vector defect(s);
  for (int i = 0; i < s; ++i) {
    const Vector l = lagrange_values(tableau, tableau.c()[i]);
    const Vector sigma_dot = result.stage_derivatives.transpose() * (l + alpha * (g.transpose() * l));
    const Vector rhs = f_sigma.row(i).transpose() + alpha * (f_sigma.transpose() * g.row(i).transpose());
    defect[i] = (sigma_dot - rhs).cwiseAbs().maxCoeff();
  }
  return defect;
}

}  // namespace sympulse
