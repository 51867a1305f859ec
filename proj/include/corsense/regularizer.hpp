#pragma once

#include <Eigen/Core>

#include <vector>

namespace corsense {

enum class NormKind { l1, block_l1l2 };

// Frozen description of the subdifferential of a structured norm at a fixed
// point: the support pattern plus the dual witness (sign vector for l1, unit
// block directions for the block norm).  Build one with
// Regularizer::make_anchor; the cone routines below are all anchored here.
struct SubdiffAnchor {
  Eigen::VectorXd point;     // the anchor point itself
  std::vector<int> support;  // nonzero coordinates (l1) / active blocks (block_l1l2)
  Eigen::VectorXd witness;   // sign(x) resp. x_b/|x_b|_2 on the support, 0 elsewhere
};

// A structured norm f together with everything the recovery analysis needs
// from it: dual norm, proximal map, (dual-)ball projections, and distances
// to scaled subdifferentials and descent cones.  Two kinds are supported,
// the l1 norm and the group norm  sum_b |w_b|_2  over contiguous blocks of
// equal size.  Instances are small value types; copy freely.
class Regularizer {
 public:
  static Regularizer l1(int dim);
  static Regularizer block_l1l2(int dim, int block_size);

  NormKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  int block_size() const noexcept { return block_; }
  int num_blocks() const noexcept { return kind_ == NormKind::l1 ? dim_ : dim_ / block_; }

  double value(const Eigen::VectorXd& w) const;

  // Dual norm: l-infinity, resp. max block l2 norm.
  double dual_value(const Eigen::VectorXd& w) const;

  // prox_{t f}(w) = argmin_u  (1/2)|u - w|_2^2 + t f(u),  t >= 0.
  Eigen::VectorXd prox(const Eigen::VectorXd& w, double t) const;

  // Euclidean projection onto {u : f(u) <= radius}.  Exact, via the sorted
  // threshold scan on the magnitude profile.
  Eigen::VectorXd project_ball(const Eigen::VectorXd& w, double radius) const;

  // Euclidean projection onto {u : f*(u) <= radius} (coordinate clamp /
  // per-block shrink).
  Eigen::VectorXd project_dual_ball(const Eigen::VectorXd& w, double radius) const;

  SubdiffAnchor make_anchor(const Eigen::VectorXd& x) const;

  // Distance from `g` to tau * subdiff f(anchor), and the projection point
  // attaining it.  Closed form: on the support the subdifferential is the
  // single witness value; off the support it is the full dual-ball slab.
  double dist_to_scaled_subdiff(const Eigen::VectorXd& g, double tau,
                                const SubdiffAnchor& a) const;
  Eigen::VectorXd project_scaled_subdiff(const Eigen::VectorXd& g, double tau,
                                         const SubdiffAnchor& a) const;

  // Distance from `g` to the polar of the descent cone of f at the anchor,
  // i.e. to cone(subdiff f(anchor)).  By Moreau's decomposition this equals
  // |P_T g|_2 with T the tangent (descent) cone, which is how the Gaussian
  // width of T is sampled.  tau >= 0 is searched by golden section; the
  // optimum is bracketed by f*(g).  If tau_opt is non-null the minimizing
  // scale is written there.
  double dist_to_descent_cone(const Eigen::VectorXd& g, const SubdiffAnchor& a,
                              double* tau_opt = nullptr) const;

  // P_T c = c - P_{cone(subdiff)} c (Moreau).
  Eigen::VectorXd project_tangent_cone(const Eigen::VectorXd& c, const SubdiffAnchor& a) const;

  // Support function of subdiff f(anchor):  max_{u in subdiff} <u, d>.
  // Equals the one-sided directional derivative f'(anchor; d).
  double directional_derivative(const SubdiffAnchor& a, const Eigen::VectorXd& d) const;

  // Compatibility constant  alpha = sup_{u != 0} f(u)/|u|_2:  sqrt(dim) for
  // l1, sqrt(num_blocks) for the block norm.
  double compatibility_alpha() const;

  // Euclidean radius of the unit f-ball:  max |u|_2 s.t. f(u) <= 1.  Both
  // norms dominate l2 coordinate-/block-wise, so this is 1.
  double ball_radius_r() const;

 private:
  Regularizer(NormKind kind, int dim, int block);
  void check_dim(const Eigen::VectorXd& w, const char* where) const;
  void check_anchor(const SubdiffAnchor& a, const char* where) const;

  NormKind kind_;
  int dim_;
  int block_;  // 1 for l1
};

}  // namespace corsense
