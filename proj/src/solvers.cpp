#include "corsense/solvers.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace corsense {

double operator_norm(const Eigen::MatrixXd& a, int max_iters) {
  if (a.size() == 0) return 0.0;
  const Eigen::Index n = a.cols();
  // Deterministic, non-degenerate start: a slowly varying positive profile
  // has nonzero overlap with any leading singular direction in practice.
  Eigen::VectorXd w(n);
  for (Eigen::Index j = 0; j < n; ++j)
    w[j] = 1.0 + 0.5 * static_cast<double>(j) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  w.normalize();
  double lambda = 0.0;
  for (int it = 0; it < std::max(max_iters, 10); ++it) {
    Eigen::VectorXd bw = a.transpose() * (a * w);
    const double nbw = bw.norm();
    if (nbw == 0.0) return 0.0;
    bw /= nbw;
    const double lam = bw.dot(a.transpose() * (a * bw));
    w.swap(bw);
    if (std::abs(lam - lambda) <= 1e-13 * std::max(lam, 1.0)) {
      lambda = lam;
      break;
    }
    lambda = lam;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

JointLinearMap::JointLinearMap(const Eigen::MatrixXd& sensing)
    : sensing_(&sensing), op_norm_(operator_norm(sensing)) {}

Eigen::VectorXd JointLinearMap::apply(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  return (*sensing_) * a + b;
}

Eigen::VectorXd JointLinearMap::adjoint_signal(const Eigen::VectorXd& w) const {
  return sensing_->transpose() * w;
}

double JointLinearMap::sensing_op_norm() const { return op_norm_; }

double JointLinearMap::lipschitz() const { return 1.0 + op_norm_ * op_norm_; }

namespace {

// ---------------------------------------------------------------------------
// FISTA for the fully penalized program.
//
// Smooth part h(x, v) = (1/2)|y - Phi x - v|^2 has gradient
// (-Phi^T r, -r) with r the residual and Lipschitz constant 1 + |Phi|_op^2.
// Acceleration uses Nesterov momentum with a function-value restart; without
// acceleration the iteration is plain proximal gradient, whose objective is
// non-increasing by the descent lemma.
// ---------------------------------------------------------------------------
SolverResult fista(const ProblemInstance& inst, const Regularizer& f, const Regularizer& g,
                   double tau1, double tau2, const SolverConfig& cfg) {
  if (tau1 < 0 || tau2 < 0)
    throw std::invalid_argument("solve_fully_penalized: negative penalty weight");
  const JointLinearMap op(inst.sensing);
  const Eigen::VectorXd& y = inst.observation;
  const double lip = op.lipschitz();
  const double step = 1.0 / lip;
  const double yscale = 1.0 + y.norm();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(inst.n);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(inst.m);
  Eigen::VectorXd wx = x, wv = v;
  double t_mom = 1.0;

  auto objective = [&](const Eigen::VectorXd& xa, const Eigen::VectorXd& va) {
    return 0.5 * (y - op.apply(xa, va)).squaredNorm() + tau1 * f.value(xa) +
           tau2 * g.value(va);
  };

  SolverResult res;
  res.objective_trace.reserve(256);
  double prev_obj = std::numeric_limits<double>::infinity();
  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = x, best_v = v;

  int it = 0;
  for (it = 1; it <= cfg.max_iters; ++it) {
    const Eigen::VectorXd r = op.apply(wx, wv) - y;
    const Eigen::VectorXd xn = f.prox(wx - step * op.adjoint_signal(r), step * tau1);
    const Eigen::VectorXd vn = g.prox(wv - step * r, step * tau2);

    // Composite gradient mapping at the extrapolated point; zero exactly at
    // minimizers.
    const double gm =
        lip * std::sqrt((wx - xn).squaredNorm() + (wv - vn).squaredNorm());
    const double obj = objective(xn, vn);
    if (!std::isfinite(obj)) throw SolverDivergence("solve_fully_penalized: diverged");
    res.objective_trace.push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best_x = xn;
      best_v = vn;
    }
    res.primal_residual = gm;
    res.dual_residual = gm;
    if (gm <= cfg.tol_primal * yscale) {
      x = xn;
      v = vn;
      res.converged = true;
      break;
    }

    if (cfg.accel) {
      // Restart on objective increase: recovers monotonicity and gives
      // linear local rates on sparse problems.
      if (obj > prev_obj) {
        t_mom = 1.0;
        wx = xn;
        wv = vn;
      } else {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
        const double beta = (t_mom - 1.0) / t_next;
        wx = xn + beta * (xn - x);
        wv = vn + beta * (vn - v);
        t_mom = t_next;
      }
    } else {
      wx = xn;
      wv = vn;
    }
    prev_obj = obj;
    x = xn;
    v = vn;
  }
  res.iters = std::min(it, cfg.max_iters);
  res.x_hat = res.converged ? x : best_x;
  res.v_hat = res.converged ? v : best_v;
  res.objective = objective(res.x_hat, res.v_hat);
  return res;
}

// ---------------------------------------------------------------------------
// Three-block ADMM for the ball-constrained programs.
//
// All three share the splitting
//     min  F(x) + G(v)   s.t.  Phi x + v + r = y,  |r|_2 <= delta,
// where (F, G) is (f, indicator of g-ball), (indicator of f-ball, g) or
// (f, lambda*g).  The x update is prox-linearized (a single gradient step on
// the augmented term with step 1/(rho*|Phi|_op^2) followed by F's prox), the
// v and r updates are exact, and u is the scaled dual.  Residual balancing
// doubles/halves rho when primal and dual residuals drift apart.
// ---------------------------------------------------------------------------
struct ProgramOps {
  // prox of F at unit weight w: argmin_x (1/(2w))|x - c|^2 + F(x)
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> x_prox;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> v_prox;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> objective;
};

SolverResult admm(const ProblemInstance& inst, const ProgramOps& ops, double delta,
                  const SolverConfig& cfg) {
  if (delta < 0) throw std::invalid_argument("admm: negative residual bound");
  const JointLinearMap op(inst.sensing);
  const Eigen::VectorXd& y = inst.observation;
  const double lx = std::max(op.sensing_op_norm() * op.sensing_op_norm(), 1e-12);
  const double yscale = 1.0 + y.norm();
  double rho = cfg.rho;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(inst.n);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(inst.m);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(inst.m);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(inst.m);

  SolverResult res;
  res.objective_trace.reserve(256);

  int it = 0;
  for (it = 1; it <= cfg.max_iters; ++it) {
    // x step: linearized augmented Lagrangian.
    const Eigen::VectorXd e = op.apply(x, v) + r - y + u;
    x = ops.x_prox(x - op.adjoint_signal(e) / lx, 1.0 / (rho * lx));
    const Eigen::VectorXd phix = inst.sensing * x;

    // v step: exact prox of G.
    const Eigen::VectorXd v_old = v;
    v = ops.v_prox(y - phix - r - u, 1.0 / rho);

    // r step: projection onto the delta ball.
    const Eigen::VectorXd r_old = r;
    const Eigen::VectorXd rt = y - phix - v - u;
    if (delta == 0.0) {
      r.setZero();
    } else {
      const double nrt = rt.norm();
      r = (nrt > delta) ? (delta / nrt * rt).eval() : rt;
    }

    const Eigen::VectorXd primal_gap = phix + v + r - y;
    u += primal_gap;

    const double primal_res = primal_gap.norm();
    // Dual residual of the consensus constraint, mapped back through the
    // operator adjoint.
    const Eigen::VectorXd dvr = (v - v_old) + (r - r_old);
    const double dual_res =
        rho * std::sqrt(op.adjoint_signal(dvr).squaredNorm() + (r - r_old).squaredNorm());

    const double obj = ops.objective(x, v);
    if (!std::isfinite(obj) || !std::isfinite(primal_res))
      throw SolverDivergence("admm: diverged");
    res.objective_trace.push_back(obj);
    res.primal_residual = primal_res;
    res.dual_residual = dual_res;
    if (primal_res <= cfg.tol_primal * yscale && dual_res <= cfg.tol_dual * yscale) {
      res.converged = true;
      break;
    }

    if (cfg.adapt_rho && it % 10 == 0) {
      if (primal_res > 10.0 * dual_res && rho < 1e6) {
        rho *= 2.0;
        u /= 2.0;
      } else if (dual_res > 10.0 * primal_res && rho > 1e-6) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }
  res.iters = std::min(it, cfg.max_iters);
  res.x_hat = x;
  res.v_hat = v;
  res.objective = ops.objective(x, v);
  return res;
}

}  // namespace

SolverResult solve_fully_penalized(const ProblemInstance& inst, const Regularizer& f,
                                   const Regularizer& g, double tau1, double tau2,
                                   const SolverConfig& cfg) {
  if (f.dim() != inst.n || g.dim() != inst.m)
    throw std::invalid_argument("solve_fully_penalized: regularizer dimension mismatch");
  return fista(inst, f, g, tau1, tau2, cfg);
}

SolverResult solve_partially_penalized(const ProblemInstance& inst, const Regularizer& f,
                                       const Regularizer& g, double lambda, double delta,
                                       const SolverConfig& cfg) {
  if (f.dim() != inst.n || g.dim() != inst.m)
    throw std::invalid_argument("solve_partially_penalized: regularizer dimension mismatch");
  if (lambda < 0) throw std::invalid_argument("solve_partially_penalized: negative lambda");
  ProgramOps ops;
  ops.x_prox = [&](const Eigen::VectorXd& c, double w) { return f.prox(c, w); };
  ops.v_prox = [&](const Eigen::VectorXd& c, double w) { return g.prox(c, lambda * w); };
  ops.objective = [&](const Eigen::VectorXd& xa, const Eigen::VectorXd& va) {
    return f.value(xa) + lambda * g.value(va);
  };
  return admm(inst, ops, delta, cfg);
}

SolverResult solve_constrained_signal(const ProblemInstance& inst, const Regularizer& f,
                                      const Regularizer& g, double g_budget, double delta,
                                      const SolverConfig& cfg) {
  if (f.dim() != inst.n || g.dim() != inst.m)
    throw std::invalid_argument("solve_constrained_signal: regularizer dimension mismatch");
  if (g_budget < 0) throw std::invalid_argument("solve_constrained_signal: negative budget");
  ProgramOps ops;
  ops.x_prox = [&](const Eigen::VectorXd& c, double w) { return f.prox(c, w); };
  ops.v_prox = [&](const Eigen::VectorXd& c, double) { return g.project_ball(c, g_budget); };
  ops.objective = [&](const Eigen::VectorXd& xa, const Eigen::VectorXd&) {
    return f.value(xa);
  };
  return admm(inst, ops, delta, cfg);
}

SolverResult solve_constrained_corruption(const ProblemInstance& inst, const Regularizer& f,
                                          const Regularizer& g, double f_budget, double delta,
                                          const SolverConfig& cfg) {
  if (f.dim() != inst.n || g.dim() != inst.m)
    throw std::invalid_argument("solve_constrained_corruption: regularizer dimension mismatch");
  if (f_budget < 0)
    throw std::invalid_argument("solve_constrained_corruption: negative budget");
  ProgramOps ops;
  ops.x_prox = [&](const Eigen::VectorXd& c, double) { return f.project_ball(c, f_budget); };
  ops.v_prox = [&](const Eigen::VectorXd& c, double w) { return g.prox(c, w); };
  ops.objective = [&](const Eigen::VectorXd&, const Eigen::VectorXd& va) {
    return g.value(va);
  };
  return admm(inst, ops, delta, cfg);
}

}  // namespace corsense
