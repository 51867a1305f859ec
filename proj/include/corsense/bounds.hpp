#pragma once

#include <map>
#include <string>
#include <utility>

#include "corsense/problem.hpp"
#include "corsense/regularizer.hpp"

namespace corsense {

// Sample-size requirements and recovery-error guarantees.  All of them are
// instances of the same pattern: once
//     sqrt(m) >= C K^2 gamma(cone intersect sphere) + eps
// holds, the joint recovery error is controlled by eps.  The fitted constant
// C is never hard-coded; it comes from the empirical calibrations below (or
// from the deviation/sup fits in geometry).

// Smallest admissible m:  (C K^2 gamma + eps)^2.
double required_m(double gamma, double c_fit, double K, double epsilon);

// Realized slack at a given m:  eps = sqrt(m) - C K^2 gamma  (may be <= 0,
// in which case no guarantee is available at this m).
double realized_epsilon(double m, double gamma, double c_fit, double K);

// Constrained and partially penalized programs:  error <= 2 delta sqrt(m) / eps.
double error_bound_constrained(double m, double delta, double epsilon);

// Fully penalized program:  error <= 2 m (beta + 1) (tau1 alpha_f + tau2 alpha_g)
//                                    / (beta eps^2).
double error_bound_full(double m, double beta, double tau1, double tau2, double alpha_f,
                        double alpha_g, double epsilon);

// Penalty weights for the fully penalized program, bounded noise |z| <= delta:
//   tau1 = beta C K delta / sqrt(m) * (gamma(Bf) + sqrt(m) rad_f)
//   tau2 = beta delta rad_g
std::pair<double, double> tau_recipe_bounded(double delta, double m, double K, double beta,
                                             double c_fit, double gamma_ball_f, double rad_f,
                                             double rad_g);

// Penalty weights for sub-Gaussian noise of psi2 level L:
//   tau1 = C K (1 + L^2) beta (gamma(Bf) + sqrt(m) rad_f)
//   tau2 = C L beta (gamma(Bg) + sqrt(m) rad_g)
std::pair<double, double> tau_recipe_subgaussian(double K, double L, double m, double beta,
                                                 double c_fit, double gamma_ball_f,
                                                 double rad_f, double gamma_ball_g,
                                                 double rad_g);

// Whether the drawn noise satisfies the penalty-domination condition
//   tau1 >= beta f*(Phi^T z)  and  tau2 >= beta g*(z).
struct Assumption1Result {
  bool pass = false;
  double f_dual_phi_z = 0.0;
  double g_dual_z = 0.0;
  double margin1 = 0.0;  // tau1 - beta f*(Phi^T z)
  double margin2 = 0.0;
};

Assumption1Result assumption1_check(const ProblemInstance& inst, const Regularizer& f,
                                    const Regularizer& g, double tau1, double tau2,
                                    double beta);

// One row of the guarantees ledger, attached to a solved configuration.
struct BoundReport {
  std::string procedure;
  double gamma_hat = 0.0;    // plug-in complexity bound entering the guarantee
  double m_required = 0.0;
  double epsilon = 0.0;      // realized slack at the actual m
  double error_bound = 0.0;  // +inf when epsilon <= 0
  double error_observed = 0.0;
  bool satisfied = false;    // error_observed <= error_bound (with eps > 0)
};

}  // namespace corsense
