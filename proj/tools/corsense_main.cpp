// Command-line driver: solve / sweep / geometry / validate, each configured
// by a JSON file.  Exit codes: 0 success, 1 bad usage or configuration, 2
// run-level failure (solver did not converge, validation checks failed).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "corsense/experiments.hpp"

namespace {

using namespace corsense;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out) / name).string();
}

int cmd_solve(const RunConfig& cfg, int jobs) {
  const SolveOutput out = run_solve(cfg, jobs);
  nlohmann::json j;
  j["cell"] = cell_to_json(out.cell);
  j["solver"] = solver_to_json(out.solver);
  if (cfg.procedure.name == ProcedureKind::full) {
    j["assumption1"] = {{"pass", out.assumption1.pass},
                        {"f_dual_phi_z", out.assumption1.f_dual_phi_z},
                        {"g_dual_z", out.assumption1.g_dual_z},
                        {"margin1", out.assumption1.margin1},
                        {"margin2", out.assumption1.margin2}};
  }
  write_text_file(out_path(cfg, "results.json"), j.dump(2) + "\n");
  write_text_file(out_path(cfg, "results.csv"),
                  std::string(kResultsCsvHeader) + "\n" + csv_row(out.cell) + "\n");
  write_text_file(out_path(cfg, "instance.json"),
                  instance_to_json(out.instance, /*embed_sensing=*/false).dump(2) + "\n");
  std::cout << "solve: procedure=" << procedure_name(out.cell.procedure)
            << " n=" << out.cell.n << " m=" << out.cell.m << " iters=" << out.solver.iters
            << " converged=" << (out.solver.converged ? 1 : 0)
            << " err=" << format_double(out.cell.error_observed)
            << " rel=" << format_double(out.cell.mean_rel_err)
            << " bound=" << format_double(out.cell.bound.error_bound)
            << " satisfied=" << (out.cell.satisfied ? 1 : 0) << "\n";
  return out.solver.converged ? 0 : 2;
}

int cmd_sweep(const RunConfig& cfg, int jobs) {
  const SweepResult sweep = run_sweep(cfg, jobs);
  write_text_file(out_path(cfg, "results.csv"), sweep_csv(sweep));
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : sweep.cells) cells.push_back(cell_to_json(cell));
  write_text_file(out_path(cfg, "results.json"),
                  nlohmann::json{{"cells", cells}}.dump(2) + "\n");
  if (sweep.m_grid.size() > 1) {
    // Success curve over m for the first sparsity pair.
    std::vector<double> rates;
    for (size_t i = 0; i < sweep.m_grid.size(); ++i)
      rates.push_back(sweep.cells[i].success_rate);
    write_text_file(out_path(cfg, "success_rate.svg"), success_svg(sweep.m_grid, rates));
  }
  for (const auto& cell : sweep.cells)
    std::cout << "sweep: s=" << cell.s << " k=" << cell.k << " m=" << cell.m
              << " success=" << format_double(cell.success_rate)
              << " err=" << format_double(cell.error_observed)
              << " satisfied=" << (cell.satisfied ? 1 : 0) << "\n";
  std::cout << "sweep: " << sweep.cells.size() << " cells -> " << cfg.out << "\n";
  return 0;
}

int cmd_geometry(const RunConfig& cfg, int jobs) {
  const GeometryOutput go = run_geometry(cfg, jobs);
  nlohmann::json j{{"width_f", estimate_to_json(go.width_f)},
                   {"width_g", estimate_to_json(go.width_g)},
                   {"eta_sq_f", estimate_to_json(go.eta_sq_f)},
                   {"eta_sq_g", estimate_to_json(go.eta_sq_g)},
                   {"gamma_ball_f", estimate_to_json(go.ball_f.gamma)},
                   {"gamma_ball_g", estimate_to_json(go.ball_g.gamma)},
                   {"rad_f", go.ball_f.rad},
                   {"rad_g", go.ball_g.rad},
                   {"bound_c1", go.bound_c1},
                   {"bound_c2", go.bound_c2},
                   {"bound_c3", go.bound_c3},
                   {"gamma_c1_direct", estimate_to_json(go.gamma_c1_direct)}};
  write_text_file(out_path(cfg, "results.json"), j.dump(2) + "\n");
  std::cout << "geometry: width_f=" << format_double(go.width_f.mean)
            << " width_g=" << format_double(go.width_g.mean)
            << " eta_sq_f=" << format_double(go.eta_sq_f.mean)
            << " eta_sq_g=" << format_double(go.eta_sq_g.mean) << "\n";
  std::cout << "geometry: bound_c1=" << format_double(go.bound_c1)
            << " bound_c2=" << format_double(go.bound_c2)
            << " bound_c3=" << format_double(go.bound_c3)
            << " gamma_c1_direct=" << format_double(go.gamma_c1_direct.mean) << "\n";
  return 0;
}

int cmd_validate(const RunConfig& cfg, int jobs) {
  const ValidateOutput vo = run_validate(cfg, jobs);
  nlohmann::json j{{"deviation", deviation_to_json(vo.deviation)},
                   {"sup_ip", sup_ip_to_json(vo.sup_ip)},
                   {"noise_sup", sup_ip_to_json(vo.noise_sup)},
                   {"recipe_c", vo.recipe_c},
                   {"assumption1_rate_bounded", vo.assumption1_rate_bounded},
                   {"assumption1_rate_subgaussian", vo.assumption1_rate_subgaussian},
                   {"assumption1_trials", vo.assumption1_trials},
                   {"pass", vo.pass}};
  write_text_file(out_path(cfg, "validate.json"), j.dump(2) + "\n");
  std::cout << "validate: deviation c_fit=" << format_double(vo.deviation.c_fit)
            << " within=" << vo.deviation.rates_within_target
            << " monotone=" << vo.deviation.rates_monotone << "\n";
  std::cout << "validate: sup_ip c_fit=" << format_double(vo.sup_ip.c_fit)
            << " noise_sup c_fit=" << format_double(vo.noise_sup.c_fit)
            << " recipe_c=" << format_double(vo.recipe_c)
            << " within=" << vo.sup_ip.rates_within_target << "\n";
  std::cout << "validate: assumption1 bounded="
            << format_double(vo.assumption1_rate_bounded)
            << " subgaussian=" << format_double(vo.assumption1_rate_subgaussian) << "\n";
  std::cout << "validate: " << (vo.pass ? "PASS" : "FAIL") << "\n";
  return vo.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corrupted-sensing recovery: solvers, geometry, guarantees"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  int jobs = 1;

  CLI::App* sub[4];
  sub[0] = app.add_subcommand("solve", "solve a single instance");
  sub[1] = app.add_subcommand("sweep", "grid of recovery trials");
  sub[2] = app.add_subcommand("geometry", "Monte Carlo geometry estimates");
  sub[3] = app.add_subcommand("validate", "concentration / penalty checks");
  CLI::Option* seed_opt[4];
  for (int i = 0; i < 4; ++i) {
    sub[i]->add_option("--config", config_path, "run configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    seed_opt[i] = sub[i]->add_option("--seed", seed_override, "override config seed");
    sub[i]->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub[i]->add_option("--out", out_override, "override output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return (e.get_name() == "CallForHelp") ? 0 : 1;
  }

  // Exit codes: 0 success, 1 bad config or usage, 2 run failure
  // (non-convergence, failed validation, runtime error).
  try {
    corsense::RunConfig cfg = corsense::load_config(config_path);
    for (int i = 0; i < 4; ++i)
      if (sub[i]->parsed() && seed_opt[i]->count() > 0) cfg.seed = seed_override;
    if (!out_override.empty()) cfg.out = out_override;
    if (sub[0]->parsed()) return cmd_solve(cfg, jobs);
    if (sub[1]->parsed()) return cmd_sweep(cfg, jobs);
    if (sub[2]->parsed()) return cmd_geometry(cfg, jobs);
    return cmd_validate(cfg, jobs);
  } catch (const corsense::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
