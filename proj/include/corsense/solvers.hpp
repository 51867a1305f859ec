#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

#include "corsense/problem.hpp"
#include "corsense/regularizer.hpp"

namespace corsense {

// Thrown when an iterate or objective stops being finite.
struct SolverDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  int max_iters = 50000;
  double tol_primal = 1e-8;  // relative to 1 + |y|_2
  double tol_dual = 1e-8;    // idem
  double rho = 1.0;          // initial ADMM penalty
  bool accel = true;         // FISTA momentum (with restart) vs plain descent
  bool adapt_rho = true;     // residual-balancing updates of rho
};

struct SolverResult {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd v_hat;
  int iters = 0;
  bool converged = false;
  double primal_residual = 0.0;  // FISTA: composite gradient-mapping norm
  double dual_residual = 0.0;
  double objective = 0.0;
  std::vector<double> objective_trace;
};

// The joint measurement operator (a, b) -> sensing*a + b together with a
// cached power-method estimate of |sensing|_op.  Holds a reference; the
// matrix must outlive the map.
class JointLinearMap {
 public:
  explicit JointLinearMap(const Eigen::MatrixXd& sensing);

  Eigen::VectorXd apply(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  // adjoint w = (sensing^T w, w); returned as the pair's first component only
  // since the second equals w.
  Eigen::VectorXd adjoint_signal(const Eigen::VectorXd& w) const;

  double sensing_op_norm() const;          // |sensing|_op
  double lipschitz() const;                // 1 + |sensing|_op^2 (joint map)
  const Eigen::MatrixXd& sensing() const { return *sensing_; }

 private:
  const Eigen::MatrixXd* sensing_;
  double op_norm_;
};

// Largest singular value by power iteration on A^T A, deterministic start.
double operator_norm(const Eigen::MatrixXd& a, int max_iters = 200);

// min (1/2)|y - Phi x - v|^2 + tau1 f(x) + tau2 g(v)       (FISTA)
SolverResult solve_fully_penalized(const ProblemInstance& inst, const Regularizer& f,
                                   const Regularizer& g, double tau1, double tau2,
                                   const SolverConfig& cfg = {});

// min f(x) + lambda g(v)  s.t.  |y - Phi x - v|_2 <= delta  (ADMM)
SolverResult solve_partially_penalized(const ProblemInstance& inst, const Regularizer& f,
                                       const Regularizer& g, double lambda, double delta,
                                       const SolverConfig& cfg = {});

// min f(x)  s.t.  g(v) <= g_budget,  |y - Phi x - v|_2 <= delta
SolverResult solve_constrained_signal(const ProblemInstance& inst, const Regularizer& f,
                                      const Regularizer& g, double g_budget, double delta,
                                      const SolverConfig& cfg = {});

// min g(v)  s.t.  f(x) <= f_budget,  |y - Phi x - v|_2 <= delta
SolverResult solve_constrained_corruption(const ProblemInstance& inst, const Regularizer& f,
                                          const Regularizer& g, double f_budget, double delta,
                                          const SolverConfig& cfg = {});

}  // namespace corsense
