#include "corsense/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace corsense {

double required_m(double gamma, double c_fit, double K, double epsilon) {
  if (gamma < 0) throw std::invalid_argument("required_m: negative gamma");
  if (c_fit < 0) throw std::invalid_argument("required_m: negative constant");
  if (K <= 0) throw std::invalid_argument("required_m: K must be positive");
  if (epsilon <= 0) throw std::invalid_argument("required_m: epsilon must be positive");
  const double root = c_fit * K * K * gamma + epsilon;
  return root * root;
}

double realized_epsilon(double m, double gamma, double c_fit, double K) {
  if (m <= 0) throw std::invalid_argument("realized_epsilon: m must be positive");
  if (gamma < 0) throw std::invalid_argument("realized_epsilon: negative gamma");
  if (c_fit < 0) throw std::invalid_argument("realized_epsilon: negative constant");
  if (K <= 0) throw std::invalid_argument("realized_epsilon: K must be positive");
  return std::sqrt(m) - c_fit * K * K * gamma;
}

double error_bound_constrained(double m, double delta, double epsilon) {
  if (m <= 0) throw std::invalid_argument("error_bound_constrained: m must be positive");
  if (delta < 0) throw std::invalid_argument("error_bound_constrained: negative delta");
  if (epsilon <= 0) return std::numeric_limits<double>::infinity();
  return 2.0 * delta * std::sqrt(m) / epsilon;
}

double error_bound_full(double m, double beta, double tau1, double tau2, double alpha_f,
                        double alpha_g, double epsilon) {
  if (m <= 0) throw std::invalid_argument("error_bound_full: m must be positive");
  if (!(beta > 1)) throw std::invalid_argument("error_bound_full: beta must exceed 1");
  if (tau1 < 0 || tau2 < 0) throw std::invalid_argument("error_bound_full: negative weight");
  if (alpha_f < 0 || alpha_g < 0)
    throw std::invalid_argument("error_bound_full: negative compatibility constant");
  if (epsilon <= 0) return std::numeric_limits<double>::infinity();
  return 2.0 * m * (beta + 1.0) * (tau1 * alpha_f + tau2 * alpha_g) /
         (beta * epsilon * epsilon);
}

std::pair<double, double> tau_recipe_bounded(double delta, double m, double K, double beta,
                                             double c_fit, double gamma_ball_f, double rad_f,
                                             double rad_g) {
  if (delta < 0) throw std::invalid_argument("tau_recipe_bounded: negative delta");
  if (m <= 0) throw std::invalid_argument("tau_recipe_bounded: m must be positive");
  if (K <= 0) throw std::invalid_argument("tau_recipe_bounded: K must be positive");
  if (!(beta > 1)) throw std::invalid_argument("tau_recipe_bounded: beta must exceed 1");
  if (c_fit < 0) throw std::invalid_argument("tau_recipe_bounded: negative constant");
  if (gamma_ball_f < 0 || rad_f < 0 || rad_g < 0)
    throw std::invalid_argument("tau_recipe_bounded: negative ball geometry");
  const double sqm = std::sqrt(m);
  const double tau1 = beta * c_fit * K * delta / sqm * (gamma_ball_f + sqm * rad_f);
  const double tau2 = beta * delta * rad_g;
  return {tau1, tau2};
}

std::pair<double, double> tau_recipe_subgaussian(double K, double L, double m, double beta,
                                                 double c_fit, double gamma_ball_f,
                                                 double rad_f, double gamma_ball_g,
                                                 double rad_g) {
  if (K <= 0) throw std::invalid_argument("tau_recipe_subgaussian: K must be positive");
  if (L <= 0) throw std::invalid_argument("tau_recipe_subgaussian: L must be positive");
  if (m <= 0) throw std::invalid_argument("tau_recipe_subgaussian: m must be positive");
  if (!(beta > 1)) throw std::invalid_argument("tau_recipe_subgaussian: beta must exceed 1");
  if (c_fit < 0) throw std::invalid_argument("tau_recipe_subgaussian: negative constant");
  if (gamma_ball_f < 0 || rad_f < 0 || gamma_ball_g < 0 || rad_g < 0)
    throw std::invalid_argument("tau_recipe_subgaussian: negative ball geometry");
  const double sqm = std::sqrt(m);
  const double tau1 = c_fit * K * (1.0 + L * L) * beta * (gamma_ball_f + sqm * rad_f);
  const double tau2 = c_fit * L * beta * (gamma_ball_g + sqm * rad_g);
  return {tau1, tau2};
}

Assumption1Result assumption1_check(const ProblemInstance& inst, const Regularizer& f,
                                    const Regularizer& g, double tau1, double tau2,
                                    double beta) {
  if (f.dim() != inst.n || g.dim() != inst.m)
    throw std::invalid_argument("assumption1_check: regularizer dimension mismatch");
  if (!(beta > 1)) throw std::invalid_argument("assumption1_check: beta must exceed 1");
  if (tau1 < 0 || tau2 < 0)
    throw std::invalid_argument("assumption1_check: negative penalty weight");
  Assumption1Result res;
  res.f_dual_phi_z = f.dual_value(inst.sensing.transpose() * inst.noise);
  res.g_dual_z = g.dual_value(inst.noise);
  res.margin1 = tau1 - beta * res.f_dual_phi_z;
  res.margin2 = tau2 - beta * res.g_dual_z;
  res.pass = res.margin1 >= 0.0 && res.margin2 >= 0.0;
  return res;
}

}  // namespace corsense
