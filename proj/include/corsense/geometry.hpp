#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "corsense/problem.hpp"
#include "corsense/regularizer.hpp"

namespace corsense {

// Thrown when a Monte Carlo run had to discard too many samples to be
// trustworthy (> 5%).
struct MonteCarloFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EstimateKind { width, complexity, sq_distance, radius };

struct GeometryEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long samples = 0;
  EstimateKind kind = EstimateKind::width;
};

GeometryEstimate summarize(std::span<const double> values, EstimateKind kind);

// E dist(g, tau*subdiff f(anchor))^2 over standard normal g: the squared
// distance eta^2 whose square root feeds the polar-cone complexity bounds.
GeometryEstimate mc_eta_sq(const Regularizer& reg, double tau, const SubdiffAnchor& anchor,
                           long samples, std::uint64_t seed, int jobs = 1);

// Gaussian width of the descent cone of f at the anchor intersected with the
// sphere: E |P_T g|_2 (Moreau: the norm of the tangent-cone projection equals
// the distance to the polar).
GeometryEstimate mc_width_tangent(const Regularizer& reg, const SubdiffAnchor& anchor,
                                  long samples, std::uint64_t seed, int jobs = 1);

// Euclidean radius of the unit f-ball (exact) and a Monte Carlo estimate of
// its Gaussian complexity E f*(g).
struct BallGeometry {
  double rad = 0.0;
  GeometryEstimate gamma;
};
BallGeometry ball_geometry(const Regularizer& reg, long samples, std::uint64_t seed,
                           int jobs = 1);

// -------------------------------------------------------------------------
// Joint cones in signal x corruption space.
//
//   c1        product of the two descent cones (constrained programs)
//   c2        polar of cone{(u, lambda s)} over the two subdifferentials
//             (partially penalized program)
//   c3        {(a,b) : tau1 f'(xa; a) + tau2 g'(xg; b)
//                        <= (tau1 f(a) + tau2 g(b)) / beta}
//             (fully penalized program)
//   tangent_f descent cone of f embedded as T_f x {0}
//   tangent_g {0} x T_g
//   point     a single unit vector (a, b) - handy for exact small checks
// -------------------------------------------------------------------------
struct ConeSpec {
  enum class Kind { c1, c2, c3, tangent_f, tangent_g, point };

  Kind kind = Kind::c1;
  Regularizer f;
  Regularizer g;
  SubdiffAnchor anchor_f;
  SubdiffAnchor anchor_g;
  double lambda = 1.0;  // c2
  double tau1 = 1.0, tau2 = 1.0, beta = 2.0;  // c3
  Eigen::VectorXd point_a, point_b;  // point (normalized jointly on build)

  int dim_signal() const { return kind == Kind::point ? static_cast<int>(point_a.size()) : f.dim(); }
  int dim_corruption() const { return kind == Kind::point ? static_cast<int>(point_b.size()) : g.dim(); }
};

ConeSpec cone_c1(Regularizer f, SubdiffAnchor anchor_f, Regularizer g, SubdiffAnchor anchor_g);
ConeSpec cone_c2(Regularizer f, SubdiffAnchor anchor_f, Regularizer g, SubdiffAnchor anchor_g,
                 double lambda);
ConeSpec cone_c3(Regularizer f, SubdiffAnchor anchor_f, Regularizer g, SubdiffAnchor anchor_g,
                 double tau1, double tau2, double beta);
ConeSpec cone_tangent_f(Regularizer f, SubdiffAnchor anchor_f, int corruption_dim);
ConeSpec cone_tangent_g(Regularizer g, SubdiffAnchor anchor_g, int signal_dim);
ConeSpec cone_point(Eigen::VectorXd a, Eigen::VectorXd b);

// Options for the inner sup computation on a single Gaussian (or deviation)
// sample.  c1/c2/tangent/point sups are exact (via cone projections); c3 has
// no cheap projection, so the sup is computed by Riemannian ascent with
// feasibility backtracking - a certified lower bound of the true sup.
struct InnerSupConfig {
  int ascent_iters = 200;
  double step0 = 1.0;
  double min_step = 1e-12;
};

// Monte Carlo Gaussian complexity gamma(cone intersect sphere)
//   = E sup { |<(g,h), (a,b)>| : (a,b) in cone, |(a,b)|_2 = 1 }.
GeometryEstimate mc_gamma_cone(const ConeSpec& cone, long samples, std::uint64_t seed,
                               int jobs = 1, const InnerSupConfig& inner = {});

// Membership oracle for the c3 cone (exact, via directional derivatives).
bool cone_c3_contains(const ConeSpec& cone, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b, double slack = 1e-9);

// Deterministic plug-in complexity bounds for the three joint cones.
double gamma_bound_c1(const GeometryEstimate& width_f, const GeometryEstimate& width_g);
double gamma_bound_c2(const GeometryEstimate& eta_sq_f, const GeometryEstimate& eta_sq_g);
double gamma_bound_c3(const GeometryEstimate& eta_sq_f, const GeometryEstimate& eta_sq_g,
                      double tau1, double tau2, double alpha_f, double alpha_g, double beta);

// -------------------------------------------------------------------------
// Empirical checks of the two concentration inequalities.
// -------------------------------------------------------------------------

// Per-trial deviation  sup_{w in cone, |w|=1} | |A w_a + sqrt(m) w_b|_2 - sqrt(m) |
// where A = sqrt(m) * (sensing draw), i.e. rows are isotropic with psi2 <= K.
// The constant is fitted as  C_hat = max_t  q_{1 - exp(-t^2)}(D) / (K^2 (gamma_hat + t)),
// after which the violation rate at each t must sit below exp(-t^2) and be
// non-increasing in t.
struct DeviationReport {
  double gamma_hat = 0.0;
  double K = 0.0;
  double c_fit = 0.0;
  std::vector<double> t_grid;
  std::vector<double> thresholds;      // c_fit * K^2 * (gamma_hat + t)
  std::vector<double> violation_rate;  // P(D > threshold_t)
  std::vector<double> target_rate;     // exp(-t^2)
  std::vector<double> deviations;      // per-trial sups
  long trials = 0;
  bool rates_within_target = false;
  bool rates_monotone = false;
};

DeviationReport check_deviation_inequality(const ConeSpec& cone, const EnsembleSpec& ensemble,
                                           int m_rows, std::span<const double> t_grid,
                                           long trials, long gamma_samples,
                                           std::uint64_t seed, int jobs = 1);

// Per-trial supremum  f*(A^T w) / (K |w|_2)  for a fixed direction w, i.e.
// sup over the unit f-ball of <Au, w>.  Fitted constant and rates as above,
// with thresholds  C_hat * (gamma(Ball) + t * rad(Ball)).
struct SupIpReport {
  double gamma_ball = 0.0;
  double rad = 0.0;
  double K = 0.0;
  double c_fit = 0.0;
  std::vector<double> t_grid;
  std::vector<double> thresholds;
  std::vector<double> violation_rate;
  std::vector<double> target_rate;
  std::vector<double> sups;  // normalized per-trial values
  long trials = 0;
  bool rates_within_target = false;
};

SupIpReport check_sup_ip(const Regularizer& ball, const EnsembleSpec& ensemble, int m_rows,
                         const Eigen::VectorXd& w, std::span<const double> t_grid,
                         long trials, long gamma_samples, std::uint64_t seed, int jobs = 1);

// Same fit for the plain noise supremum  g*(z)/L  over z with i.i.d. standard
// normal entries (no sensing matrix involved).  This is the constant behind
// the tau2 branch of the sub-Gaussian penalty recipe; the recipe should be fed
// max(check_sup_ip.c_fit, check_noise_sup.c_fit).  K in the report holds L.
SupIpReport check_noise_sup(const Regularizer& ball, double L, int m_rows,
                            std::span<const double> t_grid, long trials,
                            long gamma_samples, std::uint64_t seed, int jobs = 1);

}  // namespace corsense
