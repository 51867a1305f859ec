#include "corsense/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace corsense {

namespace {

double sq(double v) { return v * v; }

// Largest-magnitude-first threshold for projecting a nonnegative magnitude
// profile onto the l1 ball of the given radius (sorted prefix-sum scan).
// Precondition: sum(mags) > radius > 0.
double l1_ball_threshold(Eigen::VectorXd mags, double radius) {
  std::stable_sort(mags.data(), mags.data() + mags.size(),
                   [](double x, double y) { return x > y; });
  double cum = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < mags.size(); ++i) {
    cum += mags[i];
    const double cand = (cum - radius) / static_cast<double>(i + 1);
    if (mags[i] <= cand) break;  // i no longer active; previous theta stands
    theta = cand;
  }
  return theta;
}

// Golden-section minimizer for a unimodal (here: convex) function on
// [lo, hi].  Returns the best evaluated point in *xmin.
template <class F>
double golden_min(F&& f, double lo, double hi, double xtol, double* xmin) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > xtol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  const double xm = (f1 <= f2) ? x1 : x2;
  if (xmin) *xmin = xm;
  return std::min(f1, f2);
}

}  // namespace

Regularizer::Regularizer(NormKind kind, int dim, int block)
    : kind_(kind), dim_(dim), block_(block) {}

Regularizer Regularizer::l1(int dim) {
  if (dim < 1) throw std::invalid_argument("Regularizer::l1: dim must be positive");
  return Regularizer(NormKind::l1, dim, 1);
}

Regularizer Regularizer::block_l1l2(int dim, int block_size) {
  if (dim < 1) throw std::invalid_argument("Regularizer::block_l1l2: dim must be positive");
  if (block_size < 1 || dim % block_size != 0)
    throw std::invalid_argument("Regularizer::block_l1l2: block_size must divide dim");
  return Regularizer(NormKind::block_l1l2, dim, block_size);
}

void Regularizer::check_dim(const Eigen::VectorXd& w, const char* where) const {
  if (w.size() != dim_)
    throw std::invalid_argument(std::string(where) + ": expected dimension " +
                                std::to_string(dim_) + ", got " + std::to_string(w.size()));
}

void Regularizer::check_anchor(const SubdiffAnchor& a, const char* where) const {
  if (a.witness.size() != dim_)
    throw std::invalid_argument(std::string(where) + ": anchor dimension mismatch");
  for (int idx : a.support) {
    if (idx < 0 || idx >= num_blocks())
      throw std::invalid_argument(std::string(where) + ": anchor support out of range");
    if (kind_ == NormKind::l1 && a.witness[idx] == 0.0)
      throw std::invalid_argument(std::string(where) + ": anchor witness vanishes on support");
  }
}

double Regularizer::value(const Eigen::VectorXd& w) const {
  check_dim(w, "Regularizer::value");
  if (kind_ == NormKind::l1) return w.lpNorm<1>();
  double s = 0.0;
  for (int b = 0; b < num_blocks(); ++b) s += w.segment(b * block_, block_).norm();
  return s;
}

double Regularizer::dual_value(const Eigen::VectorXd& w) const {
  check_dim(w, "Regularizer::dual_value");
  if (kind_ == NormKind::l1) return w.lpNorm<Eigen::Infinity>();
  double s = 0.0;
  for (int b = 0; b < num_blocks(); ++b)
    s = std::max(s, w.segment(b * block_, block_).norm());
  return s;
}

Eigen::VectorXd Regularizer::prox(const Eigen::VectorXd& w, double t) const {
  check_dim(w, "Regularizer::prox");
  if (t < 0) throw std::invalid_argument("Regularizer::prox: negative threshold");
  Eigen::VectorXd u(dim_);
  if (kind_ == NormKind::l1) {
    for (int i = 0; i < dim_; ++i)
      u[i] = std::copysign(std::max(std::abs(w[i]) - t, 0.0), w[i]);
    return u;
  }
  for (int b = 0; b < num_blocks(); ++b) {
    const auto wb = w.segment(b * block_, block_);
    const double nb = wb.norm();
    u.segment(b * block_, block_) = (nb > t) ? ((1.0 - t / nb) * wb).eval()
                                             : Eigen::VectorXd::Zero(block_);
  }
  return u;
}

Eigen::VectorXd Regularizer::project_ball(const Eigen::VectorXd& w, double radius) const {
  check_dim(w, "Regularizer::project_ball");
  if (radius < 0) throw std::invalid_argument("Regularizer::project_ball: negative radius");
  if (value(w) <= radius) return w;
  if (radius == 0.0) return Eigen::VectorXd::Zero(dim_);
  // Projection onto {f <= r} is soft thresholding at the exact theta that
  // lands the magnitude profile on the simplex boundary.
  if (kind_ == NormKind::l1) {
    const double theta = l1_ball_threshold(w.cwiseAbs(), radius);
    return prox(w, theta);
  }
  Eigen::VectorXd nu(num_blocks());
  for (int b = 0; b < num_blocks(); ++b) nu[b] = w.segment(b * block_, block_).norm();
  const double theta = l1_ball_threshold(nu, radius);
  return prox(w, theta);
}

Eigen::VectorXd Regularizer::project_dual_ball(const Eigen::VectorXd& w, double radius) const {
  check_dim(w, "Regularizer::project_dual_ball");
  if (radius < 0)
    throw std::invalid_argument("Regularizer::project_dual_ball: negative radius");
  Eigen::VectorXd u(dim_);
  if (kind_ == NormKind::l1) {
    for (int i = 0; i < dim_; ++i) u[i] = std::clamp(w[i], -radius, radius);
    return u;
  }
  for (int b = 0; b < num_blocks(); ++b) {
    const auto wb = w.segment(b * block_, block_);
    const double nb = wb.norm();
    u.segment(b * block_, block_) = (nb > radius && nb > 0) ? (radius / nb * wb).eval()
                                                            : wb.eval();
  }
  return u;
}

SubdiffAnchor Regularizer::make_anchor(const Eigen::VectorXd& x) const {
  check_dim(x, "Regularizer::make_anchor");
  SubdiffAnchor a;
  a.point = x;
  a.witness = Eigen::VectorXd::Zero(dim_);
  if (kind_ == NormKind::l1) {
    for (int i = 0; i < dim_; ++i) {
      if (x[i] != 0.0) {
        a.support.push_back(i);
        a.witness[i] = (x[i] > 0) ? 1.0 : -1.0;
      }
    }
    return a;
  }
  for (int b = 0; b < num_blocks(); ++b) {
    const auto xb = x.segment(b * block_, block_);
    const double nb = xb.norm();
    if (nb > 0.0) {
      a.support.push_back(b);
      a.witness.segment(b * block_, block_) = xb / nb;
    }
  }
  return a;
}

double Regularizer::dist_to_scaled_subdiff(const Eigen::VectorXd& g, double tau,
                                           const SubdiffAnchor& a) const {
  check_dim(g, "Regularizer::dist_to_scaled_subdiff");
  check_anchor(a, "Regularizer::dist_to_scaled_subdiff");
  if (tau < 0)
    throw std::invalid_argument("Regularizer::dist_to_scaled_subdiff: negative tau");
  double d2 = 0.0;
  if (kind_ == NormKind::l1) {
    for (int i = 0; i < dim_; ++i) {
      if (a.witness[i] != 0.0)
        d2 += sq(g[i] - tau * a.witness[i]);
      else
        d2 += sq(std::max(std::abs(g[i]) - tau, 0.0));
    }
    return std::sqrt(d2);
  }
  std::vector<char> active(static_cast<size_t>(num_blocks()), 0);
  for (int b : a.support) active[static_cast<size_t>(b)] = 1;
  for (int b = 0; b < num_blocks(); ++b) {
    const auto gb = g.segment(b * block_, block_);
    if (active[static_cast<size_t>(b)])
      d2 += (gb - tau * a.witness.segment(b * block_, block_)).squaredNorm();
    else
      d2 += sq(std::max(gb.norm() - tau, 0.0));
  }
  return std::sqrt(d2);
}

Eigen::VectorXd Regularizer::project_scaled_subdiff(const Eigen::VectorXd& g, double tau,
                                                    const SubdiffAnchor& a) const {
  check_dim(g, "Regularizer::project_scaled_subdiff");
  check_anchor(a, "Regularizer::project_scaled_subdiff");
  if (tau < 0)
    throw std::invalid_argument("Regularizer::project_scaled_subdiff: negative tau");
  Eigen::VectorXd q(dim_);
  if (kind_ == NormKind::l1) {
    for (int i = 0; i < dim_; ++i)
      q[i] = (a.witness[i] != 0.0) ? tau * a.witness[i] : std::clamp(g[i], -tau, tau);
    return q;
  }
  std::vector<char> active(static_cast<size_t>(num_blocks()), 0);
  for (int b : a.support) active[static_cast<size_t>(b)] = 1;
  for (int b = 0; b < num_blocks(); ++b) {
    const auto gb = g.segment(b * block_, block_);
    if (active[static_cast<size_t>(b)]) {
      q.segment(b * block_, block_) = tau * a.witness.segment(b * block_, block_);
    } else {
      const double nb = gb.norm();
      q.segment(b * block_, block_) =
          (nb > tau && nb > 0) ? (tau / nb * gb).eval() : gb.eval();
    }
  }
  return q;
}

double Regularizer::dist_to_descent_cone(const Eigen::VectorXd& g, const SubdiffAnchor& a,
                                         double* tau_opt) const {
  check_dim(g, "Regularizer::dist_to_descent_cone");
  check_anchor(a, "Regularizer::dist_to_descent_cone");
  // At the zero anchor the descent cone's polar is the whole space.
  if (a.support.empty()) {
    if (tau_opt) *tau_opt = 0.0;
    return 0.0;
  }
  double hi = dual_value(g);
  if (hi == 0.0) {
    if (tau_opt) *tau_opt = 0.0;
    return 0.0;
  }
  // dist(g, tau*subdiff) is convex in tau; the minimizer cannot exceed f*(g)
  // (beyond it every off-support term is 0 and every on-support term grows).
  // The expansion loop below is defensive only.
  auto phi = [&](double tau) { return dist_to_scaled_subdiff(g, tau, a); };
  double tau_star = 0.0, best = 0.0;
  for (int round = 0; round < 8; ++round) {
    best = golden_min(phi, 0.0, hi, 1e-10 * (1.0 + hi), &tau_star);
    if (tau_star < 0.999 * hi) break;
    hi *= 2.0;
  }
  const double at_zero = g.norm();
  if (at_zero < best) {
    best = at_zero;
    tau_star = 0.0;
  }
  if (tau_opt) *tau_opt = tau_star;
  return best;
}

Eigen::VectorXd Regularizer::project_tangent_cone(const Eigen::VectorXd& c,
                                                  const SubdiffAnchor& a) const {
  double tau_star = 0.0;
  dist_to_descent_cone(c, a, &tau_star);
  if (a.support.empty()) return Eigen::VectorXd::Zero(dim_);
  return c - project_scaled_subdiff(c, tau_star, a);
}

double Regularizer::directional_derivative(const SubdiffAnchor& a,
                                           const Eigen::VectorXd& d) const {
  check_dim(d, "Regularizer::directional_derivative");
  check_anchor(a, "Regularizer::directional_derivative");
  double s = 0.0;
  if (kind_ == NormKind::l1) {
    for (int i = 0; i < dim_; ++i)
      s += (a.witness[i] != 0.0) ? a.witness[i] * d[i] : std::abs(d[i]);
    return s;
  }
  std::vector<char> active(static_cast<size_t>(num_blocks()), 0);
  for (int b : a.support) active[static_cast<size_t>(b)] = 1;
  for (int b = 0; b < num_blocks(); ++b) {
    const auto db = d.segment(b * block_, block_);
    s += active[static_cast<size_t>(b)]
             ? a.witness.segment(b * block_, block_).dot(db)
             : db.norm();
  }
  return s;
}

double Regularizer::compatibility_alpha() const {
  return std::sqrt(static_cast<double>(num_blocks()));
}

double Regularizer::ball_radius_r() const { return 1.0; }

}  // namespace corsense
