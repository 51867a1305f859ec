#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corsense/bounds.hpp"
#include "corsense/config.hpp"
#include "corsense/geometry.hpp"
#include "corsense/solvers.hpp"

namespace corsense {

// Shortest-round-trip decimal rendering, identical across runs and platforms
// (std::to_chars).  Used by every artifact writer.
std::string format_double(double v, int precision = 12);

extern const char kResultsCsvHeader[];

// Deterministic anchor with the first `sparsity` coordinates (or blocks)
// active at +1.  By sign/permutation symmetry of the Gaussian all width and
// distance statistics depend on the support only through its size, so the
// canonical anchor stands in for any instance of the same sparsity.
SubdiffAnchor canonical_anchor(const Regularizer& reg, int sparsity);

// Procedure parameters with every data-dependent default filled in: recipe
// penalty weights, oracle constraint budgets, effective residual bound.
struct ResolvedProcedure {
  ProcedureKind name = ProcedureKind::constrained_f;
  double lambda = 1.0;
  double tau1 = 0.0, tau2 = 0.0;
  double beta = 2.0;
  double delta = 0.0;
  double f_budget = 0.0, g_budget = 0.0;
};

ResolvedProcedure resolve_procedure(const RunConfig& cfg, const ProblemInstance& inst,
                                    const Regularizer& f, const Regularizer& g, int jobs);

SolverResult solve_resolved(const ProblemInstance& inst, const Regularizer& f,
                            const Regularizer& g, const ResolvedProcedure& proc,
                            const SolverConfig& solver);

struct TrialOutcome {
  double err_abs = 0.0;  // sqrt(|x-x*|^2 + |v-v*|^2)
  double err_rel = 0.0;  // err_abs / |(x*, v*)|
  bool converged = false;
  bool success = false;  // err_rel <= sweep.success_tol
  int iters = 0;
  double objective = 0.0;
  double tau1 = 0.0, tau2 = 0.0, delta = 0.0;
};

TrialOutcome run_trial(const RunConfig& cfg, std::uint64_t trial_seed);

// Plug-in complexity bound, required sample count, realized slack and error
// guarantee for the configured procedure at sparsities (s, k) and sample
// count m.  Anchored at canonical supports; Monte Carlo seeds derive from
// cfg.seed and (s, k, m) only.
struct BoundComputation {
  double gamma_hat = 0.0;
  double m_required = 0.0;
  double epsilon = 0.0;
  double error_bound = 0.0;
};

BoundComputation compute_bound(const RunConfig& cfg, int s, int k, int m,
                               const ResolvedProcedure& proc, int jobs);

struct CellResult {
  ProcedureKind procedure;
  int n = 0, m = 0, s = 0, k = 0;
  double delta = 0.0, lambda = 0.0, tau1 = 0.0, tau2 = 0.0, beta = 0.0;
  BoundComputation bound;
  double error_observed = 0.0;  // mean joint error over the cell
  bool satisfied = false;       // epsilon > 0 and error_observed <= error_bound
  double success_rate = 0.0;
  double mean_rel_err = 0.0;
  double mean_iters = 0.0;
  int trials = 0;
};

std::string csv_row(const CellResult& cell);

struct SweepResult {
  std::vector<CellResult> cells;
  std::vector<int> m_grid;
  std::vector<std::pair<int, int>> sk_grid;
};

SweepResult run_sweep(const RunConfig& cfg, int jobs);

struct SolveOutput {
  ProblemInstance instance;
  SolverResult solver;
  ResolvedProcedure procedure;
  CellResult cell;  // single-instance ledger row
  Assumption1Result assumption1;  // meaningful for the full procedure
};

SolveOutput run_solve(const RunConfig& cfg, int jobs);

struct GeometryOutput {
  GeometryEstimate width_f, width_g;
  GeometryEstimate eta_sq_f, eta_sq_g;  // at geometry.tau1 / geometry.tau2
  BallGeometry ball_f, ball_g;
  double bound_c1 = 0.0, bound_c2 = 0.0, bound_c3 = 0.0;
  GeometryEstimate gamma_c1_direct;  // direct cone Monte Carlo, same anchors
};

GeometryOutput run_geometry(const RunConfig& cfg, int jobs);

struct ValidateOutput {
  DeviationReport deviation;
  SupIpReport sup_ip;
  SupIpReport noise_sup;       // plain-noise dual-norm sup fit
  double recipe_c = 0.0;       // max of the two sup constants, fed to recipes
  double assumption1_rate_bounded = 0.0;
  double assumption1_rate_subgaussian = 0.0;
  long assumption1_trials = 0;
  bool pass = false;
};

ValidateOutput run_validate(const RunConfig& cfg, int jobs);

// Smallest constant C (by bisection) for which the procedure reaches the
// target success rate at the self-consistent sample count
//     m(C) = (C K^2 gamma_bound(m) + epsilon0)^2.
struct CalibrationResult {
  double c_fit = 0.0;
  int m_star = 0;           // implied sample count at c_fit
  double rate_at_c_fit = 0.0;
  std::vector<double> probe_c;
  std::vector<double> probe_rate;
  std::vector<int> probe_m;
};

CalibrationResult calibrate_recovery_constant(const RunConfig& ref_cfg, int trials,
                                              double target_rate, int jobs);

// Self-consistent sample count for a given constant (the prediction step of
// calibration-transfer experiments).
int implied_sample_count(const RunConfig& cfg, double c_fit, int jobs);

// Artifact writers.  All output is deterministic byte-for-byte.
void write_text_file(const std::string& path, const std::string& content);
std::string sweep_csv(const SweepResult& sweep);
std::string success_svg(const std::vector<int>& m_grid, const std::vector<double>& rates);

nlohmann::json estimate_to_json(const GeometryEstimate& e);
nlohmann::json cell_to_json(const CellResult& c);
nlohmann::json solver_to_json(const SolverResult& r);
nlohmann::json deviation_to_json(const DeviationReport& r);
nlohmann::json sup_ip_to_json(const SupIpReport& r);

}  // namespace corsense
