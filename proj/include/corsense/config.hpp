#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "corsense/problem.hpp"
#include "corsense/regularizer.hpp"
#include "corsense/solvers.hpp"

namespace corsense {

// Thrown on malformed run configurations; the message names the offending
// key and the enclosing block.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class ProcedureKind { full, partial, constrained_f, constrained_g };

std::string procedure_name(ProcedureKind p);
ProcedureKind procedure_from_name(const std::string& s);

// Signal / corruption description: the structured-norm kind doubles as the
// generator spec (l1 <-> entrywise sparse, block_l1l2 <-> block sparse).
struct ComponentConfig {
  NormKind kind = NormKind::l1;
  int block = 1;
  int sparsity = 0;
  AmplitudeLaw amplitude = AmplitudeLaw::rademacher;
  double scale = 1.0;
};

struct ModelConfig {
  int n = 0;
  int m = 0;
  EnsembleSpec ensemble;
  NoiseSpec noise;
  ComponentConfig signal;
  ComponentConfig corruption;
};

enum class TauRecipe { none, bounded, subgaussian };

struct ProcedureConfig {
  ProcedureKind name = ProcedureKind::constrained_f;
  double lambda = 1.0;    // partial
  double tau1 = -1.0;     // full; negative = take from recipe
  double tau2 = -1.0;
  TauRecipe tau_recipe = TauRecipe::none;
  double beta = 2.0;
  double delta = -1.0;     // residual bound; negative = model noise delta
  double f_budget = -1.0;  // constrained_g; negative = oracle f(signal)
  double g_budget = -1.0;  // constrained_f; negative = oracle g(corruption)
};

struct GeometryConfig {
  long samples = 8000;            // width / eta / ball estimates
  long gamma_samples = 1500;      // direct cone-complexity Monte Carlo
  double tau1 = 1.0, tau2 = 1.0;  // eta scalings reported by the geometry command
};

struct BoundsConfig {
  double c_fit = 1.0;        // recovery-calibrated constant (see calibrate_*)
  double c_fit_supip = 1.0;  // constant feeding the penalty recipes
  double epsilon0 = 1.0;     // slack used inside required-m fixed points
  double beta = 2.0;
};

struct SweepConfig {
  std::vector<int> m_grid;
  std::vector<std::pair<int, int>> sk_grid;  // (signal, corruption) sparsities
  int trials = 100;
  double success_tol = 1e-4;  // relative joint error counted as success
};

struct ValidateConfig {
  long trials = 2000;
  std::vector<double> t_grid{1.0, 2.0, 3.0};
  int n = 16, m = 16, s = 2, k = 2;
  long gamma_samples = 1500;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "out";
  ModelConfig model;
  ProcedureConfig procedure;
  SolverConfig solver;
  GeometryConfig geometry;
  BoundsConfig bounds;
  SweepConfig sweep;
  ValidateConfig validate;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

Regularizer make_regularizer(const ComponentConfig& c, int dim);
StructureSpec make_structure(const ComponentConfig& c);

}  // namespace corsense
