#include "corsense/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "corsense/parallel.hpp"
#include "corsense/stats.hpp"

namespace corsense {

const char kResultsCsvHeader[] =
    "procedure,n,m,s,k,delta,lambda,tau1,tau2,beta,gamma_hat,m_required,error_bound,"
    "error_observed,satisfied";

std::string format_double(double v, int precision) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

SubdiffAnchor canonical_anchor(const Regularizer& reg, int sparsity) {
  if (sparsity < 0 || sparsity > reg.num_blocks())
    throw std::invalid_argument("canonical_anchor: sparsity out of range");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(reg.dim());
  const int width = (reg.kind() == NormKind::l1) ? 1 : reg.block_size();
  for (int i = 0; i < sparsity * width; ++i) x[i] = 1.0;
  return reg.make_anchor(x);
}

namespace {

// Fixed sub-stream tags for the deterministic seed tree.
constexpr std::uint64_t kSeedBounds = 0xB0;
constexpr std::uint64_t kSeedRecipe = 0xC0;
constexpr std::uint64_t kSeedSweep = 0x50;
constexpr std::uint64_t kSeedValidate = 0xDE;
constexpr std::uint64_t kSeedCalibrate = 0xCA;

double joint_norm_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::sqrt(a.squaredNorm() + b.squaredNorm());
}

}  // namespace

ResolvedProcedure resolve_procedure(const RunConfig& cfg, const ProblemInstance& inst,
                                    const Regularizer& f, const Regularizer& g, int jobs) {
  ResolvedProcedure rp;
  const ProcedureConfig& pc = cfg.procedure;
  rp.name = pc.name;
  rp.lambda = pc.lambda;
  rp.beta = pc.beta;
  rp.delta = (pc.delta >= 0) ? pc.delta
                             : (cfg.model.noise.kind == NoiseKind::bounded
                                    ? cfg.model.noise.delta
                                    : 0.0);
  if (cfg.model.noise.kind == NoiseKind::subgaussian && pc.delta < 0 &&
      (pc.name == ProcedureKind::partial || pc.name == ProcedureKind::constrained_f ||
       pc.name == ProcedureKind::constrained_g))
    throw ConfigError(
        "config.procedure: key \"delta\" is required for residual-constrained programs "
        "under subgaussian noise");
  rp.f_budget = (pc.f_budget >= 0) ? pc.f_budget : f.value(inst.signal);
  rp.g_budget = (pc.g_budget >= 0) ? pc.g_budget : g.value(inst.corruption);

  if (pc.name == ProcedureKind::full) {
    if (pc.tau1 >= 0 && pc.tau2 >= 0) {
      rp.tau1 = pc.tau1;
      rp.tau2 = pc.tau2;
    } else if (pc.tau_recipe == TauRecipe::bounded) {
      const double gbf =
          ball_geometry(f, cfg.geometry.samples, derive_seed(cfg.seed, kSeedRecipe), jobs)
              .gamma.mean;
      std::tie(rp.tau1, rp.tau2) = tau_recipe_bounded(
          cfg.model.noise.delta, inst.m, cfg.model.ensemble.subgaussian_K, pc.beta,
          cfg.bounds.c_fit_supip, gbf, f.ball_radius_r(), g.ball_radius_r());
    } else if (pc.tau_recipe == TauRecipe::subgaussian) {
      const double gbf =
          ball_geometry(f, cfg.geometry.samples, derive_seed(cfg.seed, kSeedRecipe), jobs)
              .gamma.mean;
      const double gbg =
          ball_geometry(g, cfg.geometry.samples, derive_seed(cfg.seed, kSeedRecipe + 1), jobs)
              .gamma.mean;
      std::tie(rp.tau1, rp.tau2) = tau_recipe_subgaussian(
          cfg.model.ensemble.subgaussian_K, cfg.model.noise.L, inst.m, pc.beta,
          cfg.bounds.c_fit_supip, gbf, f.ball_radius_r(), gbg, g.ball_radius_r());
    } else {
      throw ConfigError(
          "config.procedure: the full program needs explicit \"tau1\"/\"tau2\" or a "
          "\"tau_recipe\"");
    }
  }
  return rp;
}

SolverResult solve_resolved(const ProblemInstance& inst, const Regularizer& f,
                            const Regularizer& g, const ResolvedProcedure& proc,
                            const SolverConfig& solver) {
  switch (proc.name) {
    case ProcedureKind::full:
      return solve_fully_penalized(inst, f, g, proc.tau1, proc.tau2, solver);
    case ProcedureKind::partial:
      return solve_partially_penalized(inst, f, g, proc.lambda, proc.delta, solver);
    case ProcedureKind::constrained_f:
      return solve_constrained_signal(inst, f, g, proc.g_budget, proc.delta, solver);
    case ProcedureKind::constrained_g:
      return solve_constrained_corruption(inst, f, g, proc.f_budget, proc.delta, solver);
  }
  throw std::logic_error("solve_resolved: unreachable");
}

TrialOutcome run_trial(const RunConfig& cfg, std::uint64_t trial_seed) {
  const ProblemInstance inst =
      make_instance(cfg.model.n, cfg.model.m, make_structure(cfg.model.signal),
                    make_structure(cfg.model.corruption), cfg.model.ensemble,
                    cfg.model.noise, trial_seed);
  const Regularizer f = make_regularizer(cfg.model.signal, inst.n);
  const Regularizer g = make_regularizer(cfg.model.corruption, inst.m);
  const ResolvedProcedure proc = resolve_procedure(cfg, inst, f, g, 1);
  const SolverResult sol = solve_resolved(inst, f, g, proc, cfg.solver);

  TrialOutcome out;
  out.err_abs = std::sqrt((sol.x_hat - inst.signal).squaredNorm() +
                          (sol.v_hat - inst.corruption).squaredNorm());
  const double truth_norm = joint_norm_pair(inst.signal, inst.corruption);
  out.err_rel = (truth_norm > 0) ? out.err_abs / truth_norm : out.err_abs;
  out.converged = sol.converged;
  out.success = out.err_rel <= cfg.sweep.success_tol;
  out.iters = sol.iters;
  out.objective = sol.objective;
  out.tau1 = proc.tau1;
  out.tau2 = proc.tau2;
  out.delta = proc.delta;
  return out;
}

BoundComputation compute_bound(const RunConfig& cfg, int s, int k, int m,
                               const ResolvedProcedure& proc, int jobs) {
  const int n = cfg.model.n;
  ComponentConfig sig = cfg.model.signal;
  ComponentConfig cor = cfg.model.corruption;
  const Regularizer f = make_regularizer(sig, n);
  const Regularizer g = make_regularizer(cor, m);
  const SubdiffAnchor af = canonical_anchor(f, s);
  const SubdiffAnchor ag = canonical_anchor(g, k);
  const std::uint64_t seed = derive_seed(
      derive_seed(derive_seed(derive_seed(cfg.seed, kSeedBounds), static_cast<std::uint64_t>(s)),
                  static_cast<std::uint64_t>(k)),
      static_cast<std::uint64_t>(m));
  const long samples = cfg.geometry.samples;
  const double K = cfg.model.ensemble.subgaussian_K;

  BoundComputation bc;
  switch (proc.name) {
    case ProcedureKind::constrained_f:
    case ProcedureKind::constrained_g: {
      const GeometryEstimate wf = mc_width_tangent(f, af, samples, derive_seed(seed, 1), jobs);
      const GeometryEstimate wg = mc_width_tangent(g, ag, samples, derive_seed(seed, 2), jobs);
      bc.gamma_hat = gamma_bound_c1(wf, wg);
      break;
    }
    case ProcedureKind::partial: {
      // Free overall scaling t = 1 of the subdifferential pair (t, t*lambda).
      const GeometryEstimate ef =
          mc_eta_sq(f, 1.0, af, samples, derive_seed(seed, 3), jobs);
      const GeometryEstimate eg =
          mc_eta_sq(g, proc.lambda, ag, samples, derive_seed(seed, 4), jobs);
      bc.gamma_hat = gamma_bound_c2(ef, eg);
      break;
    }
    case ProcedureKind::full: {
      const GeometryEstimate ef =
          mc_eta_sq(f, proc.tau1, af, samples, derive_seed(seed, 5), jobs);
      const GeometryEstimate eg =
          mc_eta_sq(g, proc.tau2, ag, samples, derive_seed(seed, 6), jobs);
      bc.gamma_hat = gamma_bound_c3(ef, eg, proc.tau1, proc.tau2, f.compatibility_alpha(),
                                    g.compatibility_alpha(), proc.beta);
      break;
    }
  }
  bc.m_required = required_m(bc.gamma_hat, cfg.bounds.c_fit, K, cfg.bounds.epsilon0);
  bc.epsilon = realized_epsilon(static_cast<double>(m), bc.gamma_hat, cfg.bounds.c_fit, K);
  if (proc.name == ProcedureKind::full) {
    bc.error_bound =
        error_bound_full(static_cast<double>(m), proc.beta, proc.tau1, proc.tau2,
                         f.compatibility_alpha(), g.compatibility_alpha(), bc.epsilon);
  } else {
    bc.error_bound = error_bound_constrained(static_cast<double>(m), proc.delta, bc.epsilon);
  }
  return bc;
}

std::string csv_row(const CellResult& c) {
  std::ostringstream os;
  os << procedure_name(c.procedure) << ',' << c.n << ',' << c.m << ',' << c.s << ',' << c.k
     << ',' << format_double(c.delta) << ',' << format_double(c.lambda) << ','
     << format_double(c.tau1) << ',' << format_double(c.tau2) << ',' << format_double(c.beta)
     << ',' << format_double(c.bound.gamma_hat) << ',' << format_double(c.bound.m_required)
     << ',' << format_double(c.bound.error_bound) << ',' << format_double(c.error_observed)
     << ',' << (c.satisfied ? 1 : 0);
  return os.str();
}

namespace {

CellResult run_cell(const RunConfig& cfg, int s, int k, int m, std::uint64_t cell_seed,
                    int jobs) {
  RunConfig cell_cfg = cfg;
  cell_cfg.model.m = m;
  cell_cfg.model.signal.sparsity = s;
  cell_cfg.model.corruption.sparsity = k;

  const int trials = cfg.sweep.trials;
  std::vector<TrialOutcome> outcomes(static_cast<size_t>(trials));
  parallel_for(trials, jobs, [&](long t) {
    outcomes[static_cast<size_t>(t)] =
        run_trial(cell_cfg, derive_seed(cell_seed, static_cast<std::uint64_t>(t)));
  });

  std::vector<double> errs(outcomes.size()), rels(outcomes.size()), its(outcomes.size()),
      succ(outcomes.size());
  for (size_t i = 0; i < outcomes.size(); ++i) {
    errs[i] = outcomes[i].err_abs;
    rels[i] = outcomes[i].err_rel;
    its[i] = outcomes[i].iters;
    succ[i] = outcomes[i].success ? 1.0 : 0.0;
  }

  CellResult cell;
  cell.procedure = cfg.procedure.name;
  cell.n = cfg.model.n;
  cell.m = m;
  cell.s = s;
  cell.k = k;
  cell.trials = trials;
  cell.error_observed = mean(errs);
  cell.mean_rel_err = mean(rels);
  cell.mean_iters = mean(its);
  cell.success_rate = mean(succ);
  // Procedure parameters are instance-independent except the oracle budgets;
  // the first trial's resolution is representative for the ledger row.
  cell.delta = outcomes.front().delta;
  cell.tau1 = outcomes.front().tau1;
  cell.tau2 = outcomes.front().tau2;
  cell.lambda = cfg.procedure.lambda;
  cell.beta = cfg.procedure.beta;
  ResolvedProcedure proc;
  proc.name = cfg.procedure.name;
  proc.lambda = cell.lambda;
  proc.tau1 = cell.tau1;
  proc.tau2 = cell.tau2;
  proc.beta = cell.beta;
  proc.delta = cell.delta;
  cell.bound = compute_bound(cell_cfg, s, k, m, proc, jobs);
  cell.satisfied = cell.bound.epsilon > 0 && std::isfinite(cell.bound.error_bound) &&
                   cell.error_observed <= cell.bound.error_bound;
  return cell;
}

}  // namespace

SweepResult run_sweep(const RunConfig& cfg, int jobs) {
  SweepResult sr;
  sr.m_grid = cfg.sweep.m_grid.empty() ? std::vector<int>{cfg.model.m} : cfg.sweep.m_grid;
  sr.sk_grid = cfg.sweep.sk_grid.empty()
                   ? std::vector<std::pair<int, int>>{
                         {cfg.model.signal.sparsity, cfg.model.corruption.sparsity}}
                   : cfg.sweep.sk_grid;
  std::uint64_t cell_index = 0;
  for (const auto& [s, k] : sr.sk_grid) {
    for (int m : sr.m_grid) {
      const std::uint64_t cell_seed =
          derive_seed(derive_seed(cfg.seed, kSeedSweep), cell_index);
      sr.cells.push_back(run_cell(cfg, s, k, m, cell_seed, jobs));
      ++cell_index;
    }
  }
  return sr;
}

SolveOutput run_solve(const RunConfig& cfg, int jobs) {
  SolveOutput out;
  out.instance =
      make_instance(cfg.model.n, cfg.model.m, make_structure(cfg.model.signal),
                    make_structure(cfg.model.corruption), cfg.model.ensemble,
                    cfg.model.noise, cfg.seed);
  const Regularizer f = make_regularizer(cfg.model.signal, out.instance.n);
  const Regularizer g = make_regularizer(cfg.model.corruption, out.instance.m);
  out.procedure = resolve_procedure(cfg, out.instance, f, g, jobs);
  out.solver = solve_resolved(out.instance, f, g, out.procedure, cfg.solver);

  CellResult& cell = out.cell;
  cell.procedure = cfg.procedure.name;
  cell.n = out.instance.n;
  cell.m = out.instance.m;
  cell.s = cfg.model.signal.sparsity;
  cell.k = cfg.model.corruption.sparsity;
  cell.trials = 1;
  cell.delta = out.procedure.delta;
  cell.lambda = out.procedure.lambda;
  cell.tau1 = out.procedure.tau1;
  cell.tau2 = out.procedure.tau2;
  cell.beta = out.procedure.beta;
  cell.error_observed = std::sqrt((out.solver.x_hat - out.instance.signal).squaredNorm() +
                                  (out.solver.v_hat - out.instance.corruption).squaredNorm());
  const double truth_norm = joint_norm_pair(out.instance.signal, out.instance.corruption);
  cell.mean_rel_err =
      (truth_norm > 0) ? cell.error_observed / truth_norm : cell.error_observed;
  cell.mean_iters = out.solver.iters;
  cell.success_rate = cell.mean_rel_err <= cfg.sweep.success_tol ? 1.0 : 0.0;
  cell.bound = compute_bound(cfg, cell.s, cell.k, cell.m, out.procedure, jobs);
  cell.satisfied = cell.bound.epsilon > 0 && std::isfinite(cell.bound.error_bound) &&
                   cell.error_observed <= cell.bound.error_bound;
  if (cfg.procedure.name == ProcedureKind::full)
    out.assumption1 = assumption1_check(out.instance, f, g, out.procedure.tau1,
                                        out.procedure.tau2, out.procedure.beta);
  return out;
}

GeometryOutput run_geometry(const RunConfig& cfg, int jobs) {
  const Regularizer f = make_regularizer(cfg.model.signal, cfg.model.n);
  const Regularizer g = make_regularizer(cfg.model.corruption, cfg.model.m);
  const SubdiffAnchor af = canonical_anchor(f, cfg.model.signal.sparsity);
  const SubdiffAnchor ag = canonical_anchor(g, cfg.model.corruption.sparsity);
  const std::uint64_t seed = derive_seed(cfg.seed, kSeedBounds);
  const long samples = cfg.geometry.samples;

  GeometryOutput go;
  go.width_f = mc_width_tangent(f, af, samples, derive_seed(seed, 11), jobs);
  go.width_g = mc_width_tangent(g, ag, samples, derive_seed(seed, 12), jobs);
  go.eta_sq_f = mc_eta_sq(f, cfg.geometry.tau1, af, samples, derive_seed(seed, 13), jobs);
  go.eta_sq_g = mc_eta_sq(g, cfg.geometry.tau2, ag, samples, derive_seed(seed, 14), jobs);
  go.ball_f = ball_geometry(f, samples, derive_seed(seed, 15), jobs);
  go.ball_g = ball_geometry(g, samples, derive_seed(seed, 16), jobs);
  go.bound_c1 = gamma_bound_c1(go.width_f, go.width_g);
  go.bound_c2 = gamma_bound_c2(go.eta_sq_f, go.eta_sq_g);
  go.bound_c3 = (cfg.geometry.tau1 > 0 && cfg.geometry.tau2 > 0)
                    ? gamma_bound_c3(go.eta_sq_f, go.eta_sq_g, cfg.geometry.tau1,
                                     cfg.geometry.tau2, f.compatibility_alpha(),
                                     g.compatibility_alpha(), cfg.bounds.beta)
                    : 0.0;
  go.gamma_c1_direct = mc_gamma_cone(cone_c1(f, af, g, ag), cfg.geometry.gamma_samples,
                                     derive_seed(seed, 17), jobs);
  return go;
}

ValidateOutput run_validate(const RunConfig& cfg, int jobs) {
  const ValidateConfig& vc = cfg.validate;
  const std::uint64_t seed = derive_seed(cfg.seed, kSeedValidate);
  ValidateOutput vo;

  // Concentration checks run on small l1 cones regardless of the model's
  // norm kinds; they probe the measurement ensemble, not the regularizers.
  const Regularizer f = Regularizer::l1(vc.n);
  const Regularizer g = Regularizer::l1(vc.m);
  const SubdiffAnchor af = canonical_anchor(f, vc.s);
  const SubdiffAnchor ag = canonical_anchor(g, vc.k);
  vo.deviation = check_deviation_inequality(cone_c1(f, af, g, ag), cfg.model.ensemble, vc.m,
                                            vc.t_grid, vc.trials, vc.gamma_samples,
                                            derive_seed(seed, 1), jobs);

  Eigen::VectorXd w(vc.m);
  for (int i = 0; i < vc.m; ++i)
    w[i] = ((i % 2 == 0) ? 1.0 : -1.0) / std::sqrt(static_cast<double>(vc.m));
  vo.sup_ip = check_sup_ip(f, cfg.model.ensemble, vc.m, w, vc.t_grid, vc.trials,
                           vc.gamma_samples, derive_seed(seed, 2), jobs);
  vo.noise_sup = check_noise_sup(g, 1.0, vc.m, vc.t_grid, vc.trials, vc.gamma_samples,
                                 derive_seed(seed, 6), jobs);

  // Penalty-domination rates for both recipes.  The recipes share one
  // constant across their two branches (matrix sup and plain noise sup), so
  // feed them the larger of the two fits; anything smaller under-penalizes
  // the noise branch.
  const double c_fit = std::max(vo.sup_ip.c_fit, vo.noise_sup.c_fit);
  vo.recipe_c = c_fit;
  const double K = cfg.model.ensemble.subgaussian_K;
  const double beta = cfg.bounds.beta;
  const double gbf =
      ball_geometry(f, vc.gamma_samples, derive_seed(seed, 3), jobs).gamma.mean;
  const double gbg =
      ball_geometry(g, vc.gamma_samples, derive_seed(seed, 4), jobs).gamma.mean;
  const double delta = 0.5;
  const auto [tb1, tb2] = tau_recipe_bounded(delta, vc.m, K, beta, c_fit, gbf,
                                             f.ball_radius_r(), g.ball_radius_r());
  const auto [ts1, ts2] = tau_recipe_subgaussian(K, 1.0, vc.m, beta, c_fit, gbf,
                                                 f.ball_radius_r(), gbg, g.ball_radius_r());
  vo.assumption1_trials = vc.trials;
  std::vector<double> pass_b(static_cast<size_t>(vc.trials)),
      pass_s(static_cast<size_t>(vc.trials));
  StructureSpec sparse_sig, sparse_cor;
  sparse_sig.sparsity = vc.s;
  sparse_cor.sparsity = vc.k;
  parallel_for(vc.trials, jobs, [&](long i) {
    const std::uint64_t ts = derive_seed(derive_seed(seed, 5), static_cast<std::uint64_t>(i));
    NoiseSpec bounded{NoiseKind::bounded, delta, 1.0};
    const ProblemInstance ib = make_instance(vc.n, vc.m, sparse_sig, sparse_cor,
                                             cfg.model.ensemble, bounded, ts);
    pass_b[static_cast<size_t>(i)] =
        assumption1_check(ib, f, g, tb1, tb2, beta).pass ? 1.0 : 0.0;
    NoiseSpec subg{NoiseKind::subgaussian, 0.0, 1.0};
    const ProblemInstance is = make_instance(vc.n, vc.m, sparse_sig, sparse_cor,
                                             cfg.model.ensemble, subg, ts);
    pass_s[static_cast<size_t>(i)] =
        assumption1_check(is, f, g, ts1, ts2, beta).pass ? 1.0 : 0.0;
  });
  vo.assumption1_rate_bounded = mean(pass_b);
  vo.assumption1_rate_subgaussian = mean(pass_s);

  vo.pass = vo.deviation.rates_within_target && vo.deviation.rates_monotone &&
            vo.sup_ip.rates_within_target && vo.assumption1_rate_bounded >= 0.99 &&
            vo.assumption1_rate_subgaussian >= 0.99;
  return vo;
}

namespace {

// gamma_bound_c1 for the configured model at sample count m, memoized: the
// signal-side width never changes, the corruption side is per-m.
struct C1BoundCache {
  const RunConfig* cfg;
  int jobs;
  double width_f = -1.0;
  std::map<int, double> bound_by_m;

  double operator()(int m) {
    auto it = bound_by_m.find(m);
    if (it != bound_by_m.end()) return it->second;
    const std::uint64_t seed = derive_seed(cfg->seed, kSeedCalibrate);
    if (width_f < 0) {
      const Regularizer f = make_regularizer(cfg->model.signal, cfg->model.n);
      width_f = mc_width_tangent(f, canonical_anchor(f, cfg->model.signal.sparsity),
                                 cfg->geometry.samples, derive_seed(seed, 1), jobs)
                    .mean;
    }
    const Regularizer g = make_regularizer(cfg->model.corruption, m);
    const GeometryEstimate wg =
        mc_width_tangent(g, canonical_anchor(g, cfg->model.corruption.sparsity),
                         cfg->geometry.samples,
                         derive_seed(derive_seed(seed, 2), static_cast<std::uint64_t>(m)),
                         jobs);
    GeometryEstimate wf;
    wf.kind = EstimateKind::width;
    wf.mean = width_f;
    const double bound = gamma_bound_c1(wf, wg);
    bound_by_m.emplace(m, bound);
    return bound;
  }
};

// Self-consistent sample count m = (C K^2 gamma_bound(m) + eps0)^2, solved by
// fixed-point iteration with a cap on oscillations.
int fixed_point_m(C1BoundCache& gamma_of_m, double c, double K, double eps0) {
  int m = 64;
  int prev = -1;
  for (int it = 0; it < 60; ++it) {
    const double target = required_m(gamma_of_m(m), c, K, eps0);
    int next = static_cast<int>(std::llround(
        std::clamp(target, 8.0, 65536.0)));
    if (next == m) return m;
    if (next == prev) return std::max(next, m);  // 2-cycle: keep the safer side
    prev = m;
    m = next;
  }
  return m;
}

}  // namespace

int implied_sample_count(const RunConfig& cfg, double c_fit, int jobs) {
  C1BoundCache cache{&cfg, jobs, -1.0, {}};
  return fixed_point_m(cache, c_fit, cfg.model.ensemble.subgaussian_K, cfg.bounds.epsilon0);
}

CalibrationResult calibrate_recovery_constant(const RunConfig& ref_cfg, int trials,
                                              double target_rate, int jobs) {
  if (trials < 1) throw std::invalid_argument("calibrate_recovery_constant: trials < 1");
  if (!(target_rate > 0) || !(target_rate <= 1))
    throw std::invalid_argument("calibrate_recovery_constant: target_rate out of (0, 1]");
  C1BoundCache cache{&ref_cfg, jobs, -1.0, {}};
  const double K = ref_cfg.model.ensemble.subgaussian_K;
  const double eps0 = ref_cfg.bounds.epsilon0;
  std::map<int, double> rate_by_m;

  CalibrationResult cal;
  auto rate_at = [&](double c, int& m_out) {
    m_out = fixed_point_m(cache, c, K, eps0);
    auto it = rate_by_m.find(m_out);
    if (it != rate_by_m.end()) return it->second;
    RunConfig cfg = ref_cfg;
    cfg.model.m = m_out;
    std::vector<double> succ(static_cast<size_t>(trials));
    const std::uint64_t seed =
        derive_seed(derive_seed(ref_cfg.seed, kSeedCalibrate + 1),
                    static_cast<std::uint64_t>(m_out));
    parallel_for(trials, jobs, [&](long t) {
      succ[static_cast<size_t>(t)] =
          run_trial(cfg, derive_seed(seed, static_cast<std::uint64_t>(t))).success ? 1.0
                                                                                   : 0.0;
    });
    const double rate = mean(succ);
    rate_by_m.emplace(m_out, rate);
    return rate;
  };
  auto probe = [&](double c) {
    int m = 0;
    const double r = rate_at(c, m);
    cal.probe_c.push_back(c);
    cal.probe_rate.push_back(r);
    cal.probe_m.push_back(m);
    return r;
  };

  double lo = 0.02, hi = 0.05;
  double rate_hi = probe(hi);
  int guard = 0;
  while (rate_hi < target_rate && ++guard <= 10) {
    lo = hi;
    hi *= 2.0;
    rate_hi = probe(hi);
  }
  if (rate_hi < target_rate)
    throw std::runtime_error("calibrate_recovery_constant: target rate unreachable");
  for (int it = 0; it < 9; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid) >= target_rate)
      hi = mid;
    else
      lo = mid;
  }
  cal.c_fit = hi;
  cal.rate_at_c_fit = rate_at(hi, cal.m_star);
  return cal;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << content;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << kResultsCsvHeader << '\n';
  for (const auto& cell : sweep.cells) os << csv_row(cell) << '\n';
  return os.str();
}

std::string success_svg(const std::vector<int>& m_grid, const std::vector<double>& rates) {
  if (m_grid.size() != rates.size() || m_grid.empty())
    throw std::invalid_argument("success_svg: grid/rate size mismatch");
  const double w = 640, h = 400, ml = 60, mr = 20, mt = 20, mb = 50;
  const double x0 = static_cast<double>(m_grid.front());
  const double x1 = static_cast<double>(m_grid.back());
  const double span = (x1 > x0) ? (x1 - x0) : 1.0;
  auto px = [&](double m) { return ml + (m - x0) / span * (w - ml - mr); };
  auto py = [&](double r) { return h - mb - r * (h - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << py(0) << "\" x2=\"" << w - mr << "\" y2=\""
     << py(0) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << py(0) << "\" x2=\"" << ml << "\" y2=\"" << mt
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double r = 0.25 * i;
    os << "<text x=\"" << ml - 8 << "\" y=\"" << py(r) + 4
       << "\" font-size=\"12\" text-anchor=\"end\">" << format_double(r, 3) << "</text>\n";
    os << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(r) << "\" x2=\"" << ml << "\" y2=\""
       << py(r) << "\" stroke=\"black\"/>\n";
  }
  for (size_t i = 0; i < m_grid.size(); ++i) {
    os << "<text x=\"" << px(m_grid[i]) << "\" y=\"" << h - mb + 18
       << "\" font-size=\"12\" text-anchor=\"middle\">" << m_grid[i] << "</text>\n";
    os << "<line x1=\"" << px(m_grid[i]) << "\" y1=\"" << py(0) << "\" x2=\"" << px(m_grid[i])
       << "\" y2=\"" << py(0) + 4 << "\" stroke=\"black\"/>\n";
  }
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
     << "\" font-size=\"13\" text-anchor=\"middle\">m</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
     << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (mt + h - mb) / 2 << ")\">success rate</text>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < m_grid.size(); ++i) {
    if (i) os << ' ';
    os << format_double(px(m_grid[i]), 6) << ',' << format_double(py(rates[i]), 6);
  }
  os << "\"/>\n";
  for (size_t i = 0; i < m_grid.size(); ++i)
    os << "<circle cx=\"" << format_double(px(m_grid[i]), 6) << "\" cy=\""
       << format_double(py(rates[i]), 6) << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  os << "</svg>\n";
  return os.str();
}

nlohmann::json estimate_to_json(const GeometryEstimate& e) {
  const char* kind = "width";
  switch (e.kind) {
    case EstimateKind::width: kind = "width"; break;
    case EstimateKind::complexity: kind = "complexity"; break;
    case EstimateKind::sq_distance: kind = "sq_distance"; break;
    case EstimateKind::radius: kind = "radius"; break;
  }
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"samples", e.samples},
          {"kind", kind}};
}

nlohmann::json cell_to_json(const CellResult& c) {
  return {{"procedure", procedure_name(c.procedure)},
          {"n", c.n},
          {"m", c.m},
          {"s", c.s},
          {"k", c.k},
          {"delta", c.delta},
          {"lambda", c.lambda},
          {"tau1", c.tau1},
          {"tau2", c.tau2},
          {"beta", c.beta},
          {"gamma_hat", c.bound.gamma_hat},
          {"m_required", c.bound.m_required},
          {"epsilon", c.bound.epsilon},
          {"error_bound", c.bound.error_bound},
          {"error_observed", c.error_observed},
          {"satisfied", c.satisfied},
          {"success_rate", c.success_rate},
          {"mean_rel_err", c.mean_rel_err},
          {"mean_iters", c.mean_iters},
          {"trials", c.trials}};
}

nlohmann::json solver_to_json(const SolverResult& r) {
  nlohmann::json j{{"iters", r.iters},
                   {"converged", r.converged},
                   {"primal_residual", r.primal_residual},
                   {"dual_residual", r.dual_residual},
                   {"objective", r.objective}};
  // Downsampled objective trace keeps artifacts small but still diagnostic.
  const size_t stride = std::max<size_t>(1, r.objective_trace.size() / 200);
  nlohmann::json trace = nlohmann::json::array();
  for (size_t i = 0; i < r.objective_trace.size(); i += stride)
    trace.push_back(r.objective_trace[i]);
  if (!r.objective_trace.empty() && (r.objective_trace.size() - 1) % stride != 0)
    trace.push_back(r.objective_trace.back());
  j["objective_trace"] = trace;
  j["objective_trace_stride"] = stride;
  return j;
}

nlohmann::json deviation_to_json(const DeviationReport& r) {
  return {{"gamma_hat", r.gamma_hat},
          {"K", r.K},
          {"c_fit", r.c_fit},
          {"t_grid", r.t_grid},
          {"thresholds", r.thresholds},
          {"violation_rate", r.violation_rate},
          {"target_rate", r.target_rate},
          {"trials", r.trials},
          {"rates_within_target", r.rates_within_target},
          {"rates_monotone", r.rates_monotone}};
}

nlohmann::json sup_ip_to_json(const SupIpReport& r) {
  return {{"gamma_ball", r.gamma_ball},
          {"rad", r.rad},
          {"K", r.K},
          {"c_fit", r.c_fit},
          {"t_grid", r.t_grid},
          {"thresholds", r.thresholds},
          {"violation_rate", r.violation_rate},
          {"target_rate", r.target_rate},
          {"trials", r.trials},
          {"rates_within_target", r.rates_within_target}};
}

}  // namespace corsense
