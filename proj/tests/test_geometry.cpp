#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "corsense/geometry.hpp"
#include "corsense/problem.hpp"
#include "corsense/regularizer.hpp"
#include "corsense/rng.hpp"
#include "oracles.hpp"

using namespace corsense;
using Eigen::VectorXd;

namespace {

SubdiffAnchor sparse_anchor(const Regularizer& reg, int active) {
  VectorXd x = VectorXd::Zero(reg.dim());
  const int stride = reg.kind() == NormKind::block_l1l2 ? reg.block_size() : 1;
  for (int i = 0; i < active; ++i) x[i * stride] = (i % 2 ? -1.0 : 1.0) * (1.0 + i);
  return reg.make_anchor(x);
}

double combined_tol(const GeometryEstimate& a, double se_b, double sigmas = 4.0) {
  return sigmas * std::sqrt(a.std_error * a.std_error + se_b * se_b);
}

}  // namespace

TEST_CASE("summarize: mean and standard error") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto e = summarize(v, EstimateKind::width);
  CHECK(e.mean == doctest::Approx(2.5));
  // Sample variance 5/3, SE = sqrt(5/3/4).
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(e.samples == 4);
}

TEST_CASE("eta^2 estimates match quadrature closed forms") {
  // l1 in a few (n, s, tau) combos.
  for (auto combo : {std::tuple{20, 3, 0.5}, std::tuple{20, 3, 2.0},
                     std::tuple{50, 10, 1.0}, std::tuple{12, 12, 0.7}}) {
    const auto [n, s, tau] = combo;
    const auto f = Regularizer::l1(n);
    const auto anchor = sparse_anchor(f, s);
    const auto est = mc_eta_sq(f, tau, anchor, 6000, 42, 1);
    const double want = oracle::eta_sq_l1(n, s, tau);
    CHECK(std::abs(est.mean - want) < combined_tol(est, 0.0));
  }
  // Block norm.
  for (auto combo : {std::tuple{24, 2, 2, 0.8}, std::tuple{24, 4, 4, 1.5}}) {
    const auto [n, k, b, tau] = combo;
    const auto g = Regularizer::block_l1l2(n, b);
    const auto anchor = sparse_anchor(g, k);
    const auto est = mc_eta_sq(g, tau, anchor, 6000, 43, 1);
    const double want = oracle::eta_sq_block(n / b, k, b, tau);
    CHECK(std::abs(est.mean - want) < combined_tol(est, 0.0));
  }
}

TEST_CASE("tangent width: exact at the zero anchor, sandwiched otherwise") {
  const int n = 30;
  const auto f = Regularizer::l1(n);
  // At the zero anchor every direction increases the norm, so the descent
  // cone is {0} and the width vanishes identically.
  const auto degenerate = mc_width_tangent(f, f.make_anchor(VectorXd::Zero(n)), 500, 7, 1);
  CHECK(degenerate.mean == 0.0);
  CHECK(degenerate.std_error == 0.0);
  // Full support: the cone is the halfspace {<sign(x), d> <= 0}, whose
  // squared projection drops exactly half a degree of freedom.
  const auto half = mc_width_tangent(f, sparse_anchor(f, n), 6000, 7, 1);
  CHECK(half.mean <= oracle::chi_mean(n));
  CHECK(half.mean >= oracle::chi_mean(n - 1) - combined_tol(half, 0.0));

  double prev = 0.0;
  for (int s : {2, 5, 10}) {
    const auto est = mc_width_tangent(f, sparse_anchor(f, s), 6000, 8, 1);
    // Upper bound: sqrt(min_tau eta^2(tau)) by dense quadrature grid.
    double eta_min = 1e100;
    for (int i = 0; i <= 400; ++i)
      eta_min = std::min(eta_min, oracle::eta_sq_l1(n, s, 4.0 * i / 400.0));
    CHECK(est.mean <= std::sqrt(eta_min) + combined_tol(est, 0.0));
    // Lower bound: the cone contains an (s-1)-dimensional subspace.
    CHECK(est.mean >= oracle::chi_mean(s - 1) - combined_tol(est, 0.0));
    // Monotone in the support size.
    CHECK(est.mean > prev);
    prev = est.mean;
  }

  // The cone depends on the anchor only through support and signs.
  const auto a1 = sparse_anchor(f, 4);
  auto a3 = a1;
  a3.point *= 3.0;
  const auto e1 = mc_width_tangent(f, a1, 2000, 9, 1);
  const auto e3 = mc_width_tangent(f, a3, 2000, 9, 1);
  CHECK(e1.mean == doctest::Approx(e3.mean));
}

TEST_CASE("ball geometry matches quadrature") {
  const auto f = Regularizer::l1(10);
  const auto bf = ball_geometry(f, 8000, 11, 1);
  CHECK(bf.rad == doctest::Approx(1.0));
  CHECK(std::abs(bf.gamma.mean - oracle::expected_max_abs(10)) <
        combined_tol(bf.gamma, 0.0));

  const auto g = Regularizer::block_l1l2(12, 2);
  const auto bg = ball_geometry(g, 8000, 12, 1);
  CHECK(bg.rad == doctest::Approx(1.0));
  CHECK(std::abs(bg.gamma.mean - oracle::expected_max_chi(6, 2)) <
        combined_tol(bg.gamma, 0.0));
}

TEST_CASE("monte carlo estimates are independent of the job count") {
  const auto f = Regularizer::l1(16);
  const auto anchor = sparse_anchor(f, 3);
  const auto e1 = mc_eta_sq(f, 1.0, anchor, 500, 77, 1);
  const auto e4 = mc_eta_sq(f, 1.0, anchor, 500, 77, 4);
  CHECK(e1.mean == e4.mean);
  CHECK(e1.std_error == e4.std_error);

  const auto g = Regularizer::l1(8);
  const auto cone = cone_c1(f, anchor, g, sparse_anchor(g, 2));
  const auto g1 = mc_gamma_cone(cone, 300, 78, 1);
  const auto g3 = mc_gamma_cone(cone, 300, 78, 3);
  CHECK(g1.mean == g3.mean);
  CHECK(g1.std_error == g3.std_error);
}

TEST_CASE("point cone complexity is exactly a folded normal mean") {
  VectorXd a(3), b(2);
  a << 1.0, 2.0, -1.0;
  b << 0.5, 0.0;
  const auto cone = cone_point(a, b);
  const auto est = mc_gamma_cone(cone, 20000, 13, 1);
  CHECK(std::abs(est.mean - std::sqrt(2.0 / M_PI)) < combined_tol(est, 0.0));
}

TEST_CASE("product cone complexity matches a hand-rolled estimate") {
  const auto f = Regularizer::l1(14);
  const auto g = Regularizer::l1(10);
  const auto af = sparse_anchor(f, 3);
  const auto ag = sparse_anchor(g, 2);
  const auto cone = cone_c1(f, af, g, ag);
  const long N = 5000;
  const auto est = mc_gamma_cone(cone, N, 21, 1);

  // sup over (T_f x T_g) n S of <(g,h),(a,b)> = sqrt(|P_Tf g|^2 + |P_Tg h|^2);
  // with the absolute value the sup is the max over the +-(g,h) pair.
  Rng rng(99);
  std::vector<double> vals;
  for (long i = 0; i < N; ++i) {
    VectorXd gg(14), hh(10), gn(14), hn(10);
    for (int j = 0; j < 14; ++j) gg[j] = rng.normal();
    for (int j = 0; j < 10; ++j) hh[j] = rng.normal();
    gn = -gg;
    hn = -hh;
    const double plus = std::hypot(f.dist_to_descent_cone(gg, af),
                                   g.dist_to_descent_cone(hh, ag));
    const double minus = std::hypot(f.dist_to_descent_cone(gn, af),
                                    g.dist_to_descent_cone(hn, ag));
    vals.push_back(std::max(plus, minus));
  }
  const auto ref = summarize(vals, EstimateKind::complexity);
  CHECK(std::abs(est.mean - ref.mean) < combined_tol(est, ref.std_error));
  // And the deterministic plug-in bound dominates.
  const auto wf = mc_width_tangent(f, af, 5000, 22, 1);
  const auto wg = mc_width_tangent(g, ag, 5000, 23, 1);
  CHECK(est.mean <= gamma_bound_c1(wf, wg) + combined_tol(est, 0.0));
  CHECK(est.mean >= std::max(wf.mean, wg.mean) - combined_tol(est, wf.std_error));
}

TEST_CASE("tangent_f embedding reproduces the width up to symmetrization") {
  const auto f = Regularizer::l1(12);
  const auto af = sparse_anchor(f, 3);
  const auto cone = cone_tangent_f(f, af, 6);
  const auto gam = mc_gamma_cone(cone, 5000, 31, 1);
  const auto wid = mc_width_tangent(f, af, 5000, 32, 1);
  CHECK(gam.mean >= wid.mean - combined_tol(gam, wid.std_error));
  // Symmetrization at most doubles it (crude but directional).
  CHECK(gam.mean <= 2.0 * wid.mean + combined_tol(gam, wid.std_error));
}

TEST_CASE("c2 complexity: dense-scale oracle and plug-in domination") {
  const auto f = Regularizer::l1(10);
  const auto g = Regularizer::l1(8);
  const auto af = sparse_anchor(f, 2);
  const auto ag = sparse_anchor(g, 2);
  const double lambda = 1.7;
  const auto cone = cone_c2(f, af, g, ag, lambda);
  const long N = 4000;
  const auto est = mc_gamma_cone(cone, N, 41, 1);

  // Oracle: sup over C2 n S of <c,.> = dist(c, K2) with K2 the cone over
  // subdiff f x lambda subdiff g; scan the ray scale densely.
  Rng rng(123);
  std::vector<double> vals;
  for (long i = 0; i < N; ++i) {
    VectorXd cg(10), ch(8);
    for (int j = 0; j < 10; ++j) cg[j] = rng.normal();
    for (int j = 0; j < 8; ++j) ch[j] = rng.normal();
    auto dist_k2 = [&](const VectorXd& u, const VectorXd& v) {
      const double hi =
          2.0 * std::max(f.dual_value(u), g.dual_value(v) / lambda) + 1.0;
      double best = std::hypot(u.norm(), v.norm());
      for (int t = 0; t <= 3000; ++t) {
        const double mu = hi * t / 3000.0;
        best = std::min(best, std::hypot(f.dist_to_scaled_subdiff(u, mu, af),
                                         g.dist_to_scaled_subdiff(v, mu * lambda, ag)));
      }
      return best;
    };
    vals.push_back(std::max(dist_k2(cg, ch), dist_k2(-cg, -ch)));
  }
  const auto ref = summarize(vals, EstimateKind::complexity);
  CHECK(std::abs(est.mean - ref.mean) < combined_tol(est, ref.std_error));

  const auto ef = mc_eta_sq(f, 1.0, af, 5000, 42, 1);
  const auto eg = mc_eta_sq(g, lambda, ag, 5000, 43, 1);
  CHECK(est.mean <= gamma_bound_c2(ef, eg) + combined_tol(est, 0.0));
}

TEST_CASE("c3 membership oracle") {
  const auto f = Regularizer::l1(6);
  const auto g = Regularizer::l1(4);
  const auto af = sparse_anchor(f, 2);
  const auto ag = sparse_anchor(g, 1);
  const auto cone = cone_c3(f, af, g, ag, 0.8, 1.1, 2.0);
  // Negated witnesses strictly descend: tau1 f' = -tau1 s < tau1 f(w)/beta.
  CHECK(cone_c3_contains(cone, -af.witness, -ag.witness));
  CHECK(cone_c3_contains(cone, -af.witness, VectorXd::Zero(4)));
  // The witness itself ascends maximally and is excluded.
  CHECK_FALSE(cone_c3_contains(cone, af.witness, ag.witness));
  // Scale invariance of membership.
  CHECK(cone_c3_contains(cone, -5.0 * af.witness, -5.0 * ag.witness));
  CHECK(cone_c3_contains(cone, VectorXd::Zero(6), VectorXd::Zero(4)));
}

TEST_CASE("c3 complexity: contains c2 at matched scales, dominated by plug-in") {
  const auto f = Regularizer::l1(10);
  const auto g = Regularizer::l1(8);
  const auto af = sparse_anchor(f, 2);
  const auto ag = sparse_anchor(g, 2);
  const double tau1 = 0.9, tau2 = 1.5, beta = 2.0;
  const auto c3 = cone_c3(f, af, g, ag, tau1, tau2, beta);
  const auto c2 = cone_c2(f, af, g, ag, tau2 / tau1);
  const auto e3 = mc_gamma_cone(c3, 3000, 51, 1);
  const auto e2 = mc_gamma_cone(c2, 3000, 51, 1);
  CHECK(e3.mean >= e2.mean - combined_tol(e3, e2.std_error));

  const auto ef = mc_eta_sq(f, tau1, af, 5000, 52, 1);
  const auto eg = mc_eta_sq(g, tau2, ag, 5000, 53, 1);
  const double bound = gamma_bound_c3(ef, eg, tau1, tau2, f.compatibility_alpha(),
                                      g.compatibility_alpha(), beta);
  CHECK(e3.mean <= bound + combined_tol(e3, 0.0));

  // Larger beta shrinks the cone.
  const auto c3tight = cone_c3(f, af, g, ag, tau1, tau2, 8.0);
  const auto e3t = mc_gamma_cone(c3tight, 3000, 54, 1);
  CHECK(e3t.mean <= e3.mean + combined_tol(e3t, e3.std_error));
}

TEST_CASE("gamma bounds validate their inputs") {
  GeometryEstimate w;
  w.kind = EstimateKind::width;
  w.mean = 2.0;
  GeometryEstimate e;
  e.kind = EstimateKind::sq_distance;
  e.mean = 4.0;
  CHECK(gamma_bound_c1(w, w) == doctest::Approx(2.0 * (2.0 + 2.0) + 2.0));
  CHECK(gamma_bound_c2(e, e) == doctest::Approx(2.0 * std::sqrt(8.0) + 1.0));
  CHECK_THROWS_AS(gamma_bound_c1(e, w), std::invalid_argument);
  CHECK_THROWS_AS(gamma_bound_c2(w, e), std::invalid_argument);
  CHECK_THROWS_AS(gamma_bound_c3(e, e, 1.0, 1.0, 1.0, 1.0, 1.0), std::invalid_argument);
  GeometryEstimate neg = e;
  neg.mean = -1.0;
  CHECK_THROWS_AS(gamma_bound_c2(neg, e), std::invalid_argument);
}

TEST_CASE("deviation check: corruption-only point has zero deviation") {
  VectorXd a = VectorXd::Zero(4), b = VectorXd::Zero(6);
  b[0] = 1.0;
  const auto cone = cone_point(a, b);
  EnsembleSpec es;
  const std::vector<double> ts{1.0, 2.0};
  const auto rep = check_deviation_inequality(cone, es, 6, ts, 200, 500, 5, 1);
  REQUIRE(rep.deviations.size() == 200);
  for (double d : rep.deviations) CHECK(d == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.c_fit == doctest::Approx(0.0));
  CHECK(rep.rates_within_target);
  CHECK(rep.rates_monotone);
}

TEST_CASE("deviation check: signal-only point matches the chi law") {
  VectorXd a = VectorXd::Zero(5), b = VectorXd::Zero(8);
  a[2] = 1.0;
  const auto cone = cone_point(a, b);
  EnsembleSpec es;
  const int m = 8;
  const std::vector<double> ts{0.5, 1.0, 2.0};
  const auto rep = check_deviation_inequality(cone, es, m, ts, 4000, 500, 6, 1);
  // D = | chi_m - sqrt(m) | for a unit signal direction.
  const double want_mean_dev = [] {
    // E|chi_8 - sqrt(8)| by quadrature.
    return oracle::simpson(
        [](double r) {
          return std::abs(r - std::sqrt(8.0)) * oracle::chi_pdf(8, r);
        },
        0.0, 20.0, 4000);
  }();
  double got = 0.0;
  for (double d : rep.deviations) got += d;
  got /= double(rep.deviations.size());
  CHECK(got == doctest::Approx(want_mean_dev).epsilon(0.1));
  CHECK(rep.c_fit > 0.0);
  CHECK(rep.rates_within_target);
  CHECK(rep.rates_monotone);
  CHECK(rep.trials == 4000);
  REQUIRE(rep.thresholds.size() == 3);
  CHECK(rep.thresholds[0] < rep.thresholds[2]);
}

TEST_CASE("deviation check on a small joint cone, all ensembles") {
  const auto f = Regularizer::l1(8);
  const auto g = Regularizer::l1(8);
  const auto cone = cone_c1(f, sparse_anchor(f, 2), g, sparse_anchor(g, 2));
  const std::vector<double> ts{1.0, 2.0};
  for (EnsembleKind kind :
       {EnsembleKind::gaussian, EnsembleKind::rademacher, EnsembleKind::uniform}) {
    EnsembleSpec es;
    es.kind = kind;
    const auto rep = check_deviation_inequality(cone, es, 8, ts, 600, 800, 7, 1);
    CHECK(rep.rates_within_target);
    CHECK(rep.rates_monotone);
    CHECK(rep.c_fit > 0.0);
    CHECK(rep.c_fit < 3.0);
    CHECK(rep.gamma_hat > 0.0);
  }
}

TEST_CASE("deviation determinism across jobs") {
  const auto f = Regularizer::l1(6);
  const auto g = Regularizer::l1(6);
  const auto cone = cone_c1(f, sparse_anchor(f, 1), g, sparse_anchor(g, 1));
  const std::vector<double> ts{1.0};
  const auto r1 = check_deviation_inequality(cone, EnsembleSpec{}, 6, ts, 150, 300, 8, 1);
  const auto r2 = check_deviation_inequality(cone, EnsembleSpec{}, 6, ts, 150, 300, 8, 4);
  CHECK(r1.c_fit == r2.c_fit);
  CHECK(r1.deviations == r2.deviations);
}

TEST_CASE("deviation check validates its arguments") {
  const auto f = Regularizer::l1(6);
  const auto g = Regularizer::l1(6);
  const auto cone = cone_c1(f, sparse_anchor(f, 1), g, sparse_anchor(g, 1));
  const std::vector<double> bad{2.0, 1.0};
  CHECK_THROWS_AS(
      check_deviation_inequality(cone, EnsembleSpec{}, 6, bad, 200, 300, 9, 1),
      std::invalid_argument);
  const std::vector<double> ts{1.0};
  CHECK_THROWS_AS(check_deviation_inequality(cone, EnsembleSpec{}, 5, ts, 200, 300, 9, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_deviation_inequality(cone, EnsembleSpec{}, 6, ts, 50, 300, 9, 1),
                  std::invalid_argument);
}

TEST_CASE("sup-ip check: fixed direction against the max-normal law") {
  const auto f = Regularizer::l1(12);
  EnsembleSpec es;
  VectorXd w = VectorXd::Zero(9);
  w[0] = 1.0;
  const std::vector<double> ts{0.5, 1.0, 2.0};
  const auto rep = check_sup_ip(f, es, 9, w, ts, 3000, 4000, 10, 1);
  REQUIRE(rep.sups.size() == 3000);
  // s = max_j |A^T w|_j / K = max of 12 unit normals / K.
  double mean_sup = 0.0;
  for (double s : rep.sups) mean_sup += s;
  mean_sup /= 3000.0;
  CHECK(mean_sup == doctest::Approx(oracle::expected_max_abs(12) / rep.K).epsilon(0.05));
  CHECK(rep.rates_within_target);
  CHECK(rep.c_fit > 0.0);
  CHECK(rep.rad == doctest::Approx(1.0));
  CHECK(std::abs(rep.gamma_ball - oracle::expected_max_abs(12)) <
        4.0 * 0.05);  // gamma estimated at 4000 samples
  // Determinism across jobs.
  const auto rep4 = check_sup_ip(f, es, 9, w, ts, 3000, 4000, 10, 4);
  CHECK(rep.c_fit == rep4.c_fit);
  CHECK(rep.sups == rep4.sups);
  // Zero direction is rejected... or yields all-zero sups; either is fine,
  // but it must not produce NaNs.
  const auto zero = check_sup_ip(f, es, 9, VectorXd::Zero(9), ts, 200, 500, 11, 1);
  for (double s : zero.sups) CHECK(std::isfinite(s));
}
