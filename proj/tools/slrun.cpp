#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "surfsl/errors.hpp"
#include "surfsl/experiment.hpp"

// Exit codes: 0 all runs completed, 1 numerical failure (partial CSVs kept
// with a .partial suffix), 2 bad command line or config.
int main(int argc, char** argv) {
  CLI::App app{"Semi-Lagrangian surface advection experiments"};
  std::string config_path;
  std::string out_dir;
  bool parallel = false;
  std::uint64_t seed = 0;
  app.add_option("config", config_path, "Experiment config (JSON)")->required();
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_flag("--parallel", parallel, "Run grid cells in parallel (SLRUN_THREADS caps workers)");
  auto* seed_opt = app.add_option("--seed", seed, "Single seed (overrides seeds)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  surfsl::ExperimentConfig cfg;
  try {
    cfg = surfsl::load_config(config_path);
    if (*out_opt) cfg.output_dir = out_dir;
    if (*seed_opt) cfg.seeds = {seed};
    if (parallel) cfg.parallel = true;
    surfsl::validate(cfg);
  } catch (const surfsl::Error& e) {
    std::cerr << "slrun: " << e.what() << '\n';
    return 2;
  }

  try {
    const surfsl::ExperimentResult res = surfsl::run_experiment(cfg);
    for (const auto& rep : res.reports) {
      std::cout << rep.label << ": ";
      if (rep.fit) {
        std::cout << "rate " << rep.fit->slope << " (r^2 " << rep.fit->r_squared << ")";
      } else {
        std::cout << "no rate (too few finite errors)";
      }
      std::cout << '\n';
    }
    for (const auto& row : res.lebesgue) {
      std::cout << surfsl::to_string(row.op) << " k=" << row.degree << " r=" << row.radius
                << " L-1=" << row.lebesgue_minus_1 << '\n';
    }
    std::cout << res.files.size() << " files in " << cfg.output_dir << '\n';
  } catch (const std::exception& e) {
    std::cerr << "slrun: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
