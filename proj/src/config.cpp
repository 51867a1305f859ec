#include "corsense/config.hpp"

#include <fstream>
#include <set>

namespace corsense {

std::string procedure_name(ProcedureKind p) {
  switch (p) {
    case ProcedureKind::full: return "full";
    case ProcedureKind::partial: return "partial";
    case ProcedureKind::constrained_f: return "constrained_f";
    case ProcedureKind::constrained_g: return "constrained_g";
  }
  return "full";
}

ProcedureKind procedure_from_name(const std::string& s) {
  if (s == "full") return ProcedureKind::full;
  if (s == "partial") return ProcedureKind::partial;
  if (s == "constrained_f") return ProcedureKind::constrained_f;
  if (s == "constrained_g") return ProcedureKind::constrained_g;
  throw ConfigError("config.procedure: unknown procedure \"" + s + "\"");
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& ctx, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError("config." + ctx + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config." + ctx + ": unknown key \"" + it.key() + "\"");
}

double get_num(const json& j, const std::string& ctx, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number())
    throw ConfigError("config." + ctx + ": key \"" + key + "\" must be a number");
  return j.at(key).get<double>();
}

long get_int(const json& j, const std::string& ctx, const char* key, long def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number_integer())
    throw ConfigError("config." + ctx + ": key \"" + key + "\" must be an integer");
  return j.at(key).get<long>();
}

bool get_bool(const json& j, const std::string& ctx, const char* key, bool def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean())
    throw ConfigError("config." + ctx + ": key \"" + key + "\" must be a boolean");
  return j.at(key).get<bool>();
}

std::string get_str(const json& j, const std::string& ctx, const char* key,
                    const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string())
    throw ConfigError("config." + ctx + ": key \"" + key + "\" must be a string");
  return j.at(key).get<std::string>();
}

long require_int(const json& j, const std::string& ctx, const char* key) {
  if (!j.contains(key))
    throw ConfigError("config." + ctx + ": missing key \"" + key + "\"");
  return get_int(j, ctx, key, 0);
}

ComponentConfig parse_component(const json& j, const std::string& ctx) {
  reject_unknown(j, ctx, {"kind", "dim", "block", "sparsity", "amplitude", "scale"});
  ComponentConfig c;
  const std::string kind = get_str(j, ctx, "kind", "l1");
  if (kind == "l1") {
    c.kind = NormKind::l1;
  } else if (kind == "block_l1l2") {
    c.kind = NormKind::block_l1l2;
  } else {
    throw ConfigError("config." + ctx + ": unknown kind \"" + kind + "\"");
  }
  c.block = static_cast<int>(get_int(j, ctx, "block", 1));
  if (c.kind == NormKind::l1 && c.block != 1)
    throw ConfigError("config." + ctx + ": key \"block\" requires kind block_l1l2");
  c.sparsity = static_cast<int>(get_int(j, ctx, "sparsity", 0));
  const std::string amp = get_str(j, ctx, "amplitude", "rademacher");
  if (amp == "rademacher" || amp == "const") {
    // constant-magnitude entries with random signs
    c.amplitude = AmplitudeLaw::rademacher;
  } else if (amp == "gaussian") {
    c.amplitude = AmplitudeLaw::gaussian;
  } else {
    throw ConfigError("config." + ctx + ": unknown amplitude \"" + amp + "\"");
  }
  c.scale = get_num(j, ctx, "scale", 1.0);
  if (c.scale < 0) throw ConfigError("config." + ctx + ": key \"scale\" must be nonnegative");
  return c;
}

ModelConfig parse_model(const json& j) {
  reject_unknown(j, "model",
                 {"n", "m", "ensemble", "subgaussian_K", "noise", "signal", "corruption"});
  ModelConfig mc;
  mc.n = static_cast<int>(require_int(j, "model", "n"));
  mc.m = static_cast<int>(require_int(j, "model", "m"));
  if (mc.n < 1 || mc.m < 1)
    throw ConfigError("config.model: keys \"n\" and \"m\" must be positive");
  mc.ensemble.kind = ensemble_from_name(get_str(j, "model", "ensemble", "gaussian"));
  mc.ensemble.subgaussian_K =
      get_num(j, "model", "subgaussian_K", default_subgaussian_K());
  if (mc.ensemble.subgaussian_K <= 0)
    throw ConfigError("config.model: key \"subgaussian_K\" must be positive");
  if (j.contains("noise")) {
    const json& jn = j.at("noise");
    reject_unknown(jn, "model.noise", {"kind", "delta", "L"});
    mc.noise.kind = noise_from_name(get_str(jn, "model.noise", "kind", "none"));
    mc.noise.delta = get_num(jn, "model.noise", "delta", 0.0);
    mc.noise.L = get_num(jn, "model.noise", "L", 1.0);
    if (mc.noise.delta < 0)
      throw ConfigError("config.model.noise: key \"delta\" must be nonnegative");
    if (mc.noise.L <= 0)
      throw ConfigError("config.model.noise: key \"L\" must be positive");
  }
  if (!j.contains("signal")) throw ConfigError("config.model: missing key \"signal\"");
  if (!j.contains("corruption")) throw ConfigError("config.model: missing key \"corruption\"");
  mc.signal = parse_component(j.at("signal"), "model.signal");
  mc.corruption = parse_component(j.at("corruption"), "model.corruption");
  if (j.at("signal").contains("dim") &&
      get_int(j.at("signal"), "model.signal", "dim", 0) != mc.n)
    throw ConfigError("config.model.signal: key \"dim\" must equal n");
  if (j.at("corruption").contains("dim") &&
      get_int(j.at("corruption"), "model.corruption", "dim", 0) != mc.m)
    throw ConfigError("config.model.corruption: key \"dim\" must equal m");
  return mc;
}

ProcedureConfig parse_procedure(const json& j) {
  reject_unknown(j, "procedure",
                 {"name", "lambda", "tau1", "tau2", "tau_recipe", "beta", "delta",
                  "f_budget", "g_budget"});
  ProcedureConfig pc;
  pc.name = procedure_from_name(get_str(j, "procedure", "name", "constrained_f"));
  pc.lambda = get_num(j, "procedure", "lambda", 1.0);
  if (pc.lambda <= 0) throw ConfigError("config.procedure: key \"lambda\" must be positive");
  pc.tau1 = get_num(j, "procedure", "tau1", -1.0);
  pc.tau2 = get_num(j, "procedure", "tau2", -1.0);
  const std::string recipe = get_str(j, "procedure", "tau_recipe", "none");
  if (recipe == "none") {
    pc.tau_recipe = TauRecipe::none;
  } else if (recipe == "bounded") {
    pc.tau_recipe = TauRecipe::bounded;
  } else if (recipe == "subgaussian") {
    pc.tau_recipe = TauRecipe::subgaussian;
  } else {
    throw ConfigError("config.procedure: unknown tau_recipe \"" + recipe + "\"");
  }
  pc.beta = get_num(j, "procedure", "beta", 2.0);
  if (!(pc.beta > 1)) throw ConfigError("config.procedure: key \"beta\" must exceed 1");
  pc.delta = get_num(j, "procedure", "delta", -1.0);
  pc.f_budget = get_num(j, "procedure", "f_budget", -1.0);
  pc.g_budget = get_num(j, "procedure", "g_budget", -1.0);
  return pc;
}

SolverConfig parse_solver(const json& j) {
  reject_unknown(j, "solver",
                 {"max_iters", "tol_primal", "tol_dual", "rho", "accel", "adapt_rho"});
  SolverConfig sc;
  sc.max_iters = static_cast<int>(get_int(j, "solver", "max_iters", sc.max_iters));
  sc.tol_primal = get_num(j, "solver", "tol_primal", sc.tol_primal);
  sc.tol_dual = get_num(j, "solver", "tol_dual", sc.tol_dual);
  sc.rho = get_num(j, "solver", "rho", sc.rho);
  sc.accel = get_bool(j, "solver", "accel", sc.accel);
  sc.adapt_rho = get_bool(j, "solver", "adapt_rho", sc.adapt_rho);
  if (sc.max_iters < 1) throw ConfigError("config.solver: key \"max_iters\" must be positive");
  if (sc.tol_primal <= 0 || sc.tol_dual <= 0)
    throw ConfigError("config.solver: tolerances must be positive");
  if (sc.rho <= 0) throw ConfigError("config.solver: key \"rho\" must be positive");
  return sc;
}

GeometryConfig parse_geometry(const json& j) {
  reject_unknown(j, "geometry", {"samples", "gamma_samples", "tau1", "tau2"});
  GeometryConfig gc;
  gc.samples = get_int(j, "geometry", "samples", gc.samples);
  gc.gamma_samples = get_int(j, "geometry", "gamma_samples", gc.gamma_samples);
  gc.tau1 = get_num(j, "geometry", "tau1", gc.tau1);
  gc.tau2 = get_num(j, "geometry", "tau2", gc.tau2);
  if (gc.samples < 1 || gc.gamma_samples < 1)
    throw ConfigError("config.geometry: sample counts must be positive");
  if (gc.tau1 < 0 || gc.tau2 < 0)
    throw ConfigError("config.geometry: scalings must be nonnegative");
  return gc;
}

BoundsConfig parse_bounds(const json& j) {
  reject_unknown(j, "bounds", {"c_fit", "c_fit_supip", "epsilon0", "beta"});
  BoundsConfig bc;
  bc.c_fit = get_num(j, "bounds", "c_fit", bc.c_fit);
  bc.c_fit_supip = get_num(j, "bounds", "c_fit_supip", bc.c_fit_supip);
  bc.epsilon0 = get_num(j, "bounds", "epsilon0", bc.epsilon0);
  bc.beta = get_num(j, "bounds", "beta", bc.beta);
  if (bc.c_fit < 0 || bc.c_fit_supip < 0)
    throw ConfigError("config.bounds: constants must be nonnegative");
  if (bc.epsilon0 <= 0) throw ConfigError("config.bounds: key \"epsilon0\" must be positive");
  if (!(bc.beta > 1)) throw ConfigError("config.bounds: key \"beta\" must exceed 1");
  return bc;
}

SweepConfig parse_sweep(const json& j) {
  reject_unknown(j, "sweep", {"m_grid", "sk_grid", "trials", "success_tol"});
  SweepConfig sc;
  if (j.contains("m_grid")) {
    if (!j.at("m_grid").is_array())
      throw ConfigError("config.sweep: key \"m_grid\" must be an array");
    for (const auto& v : j.at("m_grid")) {
      if (!v.is_number_integer() || v.get<long>() < 1)
        throw ConfigError("config.sweep: key \"m_grid\" must hold positive integers");
      sc.m_grid.push_back(v.get<int>());
    }
  }
  if (j.contains("sk_grid")) {
    if (!j.at("sk_grid").is_array())
      throw ConfigError("config.sweep: key \"sk_grid\" must be an array of [s, k] pairs");
    for (const auto& v : j.at("sk_grid")) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
          !v[1].is_number_integer())
        throw ConfigError("config.sweep: key \"sk_grid\" must be an array of [s, k] pairs");
      sc.sk_grid.emplace_back(v[0].get<int>(), v[1].get<int>());
    }
  }
  sc.trials = static_cast<int>(get_int(j, "sweep", "trials", sc.trials));
  if (sc.trials < 1) throw ConfigError("config.sweep: key \"trials\" must be positive");
  sc.success_tol = get_num(j, "sweep", "success_tol", sc.success_tol);
  if (sc.success_tol <= 0)
    throw ConfigError("config.sweep: key \"success_tol\" must be positive");
  return sc;
}

ValidateConfig parse_validate(const json& j) {
  reject_unknown(j, "validate", {"trials", "t_grid", "n", "m", "s", "k", "gamma_samples"});
  ValidateConfig vc;
  vc.trials = get_int(j, "validate", "trials", vc.trials);
  if (j.contains("t_grid")) {
    if (!j.at("t_grid").is_array())
      throw ConfigError("config.validate: key \"t_grid\" must be an array");
    vc.t_grid.clear();
    for (const auto& v : j.at("t_grid")) {
      if (!v.is_number()) throw ConfigError("config.validate: key \"t_grid\" must be numeric");
      vc.t_grid.push_back(v.get<double>());
    }
  }
  vc.n = static_cast<int>(get_int(j, "validate", "n", vc.n));
  vc.m = static_cast<int>(get_int(j, "validate", "m", vc.m));
  vc.s = static_cast<int>(get_int(j, "validate", "s", vc.s));
  vc.k = static_cast<int>(get_int(j, "validate", "k", vc.k));
  vc.gamma_samples = get_int(j, "validate", "gamma_samples", vc.gamma_samples);
  if (vc.n < 1 || vc.m < 1 || vc.s < 0 || vc.k < 0)
    throw ConfigError("config.validate: dimensions out of range");
  return vc;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
  reject_unknown(j, "(top level)",
                 {"seed", "out", "model", "procedure", "solver", "geometry", "bounds",
                  "sweep", "validate"});
  RunConfig rc;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0)
      throw ConfigError("config: key \"seed\" must be a nonnegative integer");
    rc.seed = j.at("seed").get<std::uint64_t>();
  }
  rc.out = get_str(j, "(top level)", "out", rc.out);
  if (!j.contains("model")) throw ConfigError("config: missing key \"model\"");
  rc.model = parse_model(j.at("model"));
  if (j.contains("procedure")) rc.procedure = parse_procedure(j.at("procedure"));
  if (j.contains("solver")) rc.solver = parse_solver(j.at("solver"));
  if (j.contains("geometry")) rc.geometry = parse_geometry(j.at("geometry"));
  if (j.contains("bounds")) rc.bounds = parse_bounds(j.at("bounds"));
  if (j.contains("sweep")) rc.sweep = parse_sweep(j.at("sweep"));
  if (j.contains("validate")) rc.validate = parse_validate(j.at("validate"));

  // Cross-field checks that need the full picture.
  const auto check_component = [&](const ComponentConfig& c, int dim, const char* ctx) {
    if (c.kind == NormKind::block_l1l2 && dim % c.block != 0)
      throw ConfigError(std::string("config.") + ctx + ": key \"block\" must divide the dimension");
    const int slots = (c.kind == NormKind::block_l1l2) ? dim / c.block : dim;
    if (c.sparsity < 0 || c.sparsity > slots)
      throw ConfigError(std::string("config.") + ctx + ": key \"sparsity\" out of range");
  };
  check_component(rc.model.signal, rc.model.n, "model.signal");
  check_component(rc.model.corruption, rc.model.m, "model.corruption");
  for (auto [s, k] : rc.sweep.sk_grid) {
    ComponentConfig cs = rc.model.signal;
    cs.sparsity = s;
    ComponentConfig ck = rc.model.corruption;
    ck.sparsity = k;
    check_component(cs, rc.model.n, "sweep.sk_grid(signal)");
    check_component(ck, rc.model.m, "sweep.sk_grid(corruption)");
  }
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: JSON parse failure in " + path + ": " + e.what());
  }
  return parse_config(j);
}

Regularizer make_regularizer(const ComponentConfig& c, int dim) {
  return (c.kind == NormKind::l1) ? Regularizer::l1(dim)
                                  : Regularizer::block_l1l2(dim, c.block);
}

StructureSpec make_structure(const ComponentConfig& c) {
  StructureSpec s;
  s.kind = (c.kind == NormKind::l1) ? StructureKind::sparse : StructureKind::block_sparse;
  s.sparsity = c.sparsity;
  s.block_size = c.block;
  s.amplitude = c.amplitude;
  s.scale = c.scale;
  return s;
}

}  // namespace corsense
