#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mumimo/harness.hpp"

namespace {

mumimo::ExperimentConfig load_config(const std::string& config_path,
                                     const std::string& experiment_id,
                                     std::uint64_t seed, bool seed_set) {
  mumimo::ExperimentConfig cfg;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw mumimo::ConfigError("config: cannot open " + config_path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw mumimo::ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    cfg = mumimo::config_from_json(j);
  } else {
    cfg.experiment = experiment_id;
    cfg.validate();
  }
  if (seed_set) cfg.seed = seed;
  return cfg;
}

int resolve_workers(int cli_workers) {
  if (const char* env = std::getenv("MIMO_RETRO_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w < 1) throw std::invalid_argument("non-positive");
      return w;
    } catch (const std::exception&) {
      throw mumimo::ConfigError("config: MIMO_RETRO_WORKERS must be a positive integer");
    }
  }
  return cli_workers;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo link simulator: retrospective IA with outdated CSI"};
  app.require_subcommand(1);

  std::string config_path, experiment_id = "fig3_mat_vs_lzfb", out_dir = ".";
  std::uint64_t seed = 1;
  int workers = 1;
  auto* run = app.add_subcommand("run", "run an experiment and write CSV + JSON");
  auto* opt_config = run->add_option("--config", config_path, "JSON config file");
  run->add_option("--experiment", experiment_id, "built-in experiment id")
      ->excludes(opt_config);
  auto* opt_seed = run->add_option("--seed", seed, "RNG seed (overrides config)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  std::string curve_path, val_path;
  double lo_db = 0.0, hi_db = 0.0;
  auto* dof = app.add_subcommand("dof", "empirical pre-log slope from a curve CSV");
  dof->add_option("--curve", curve_path, "curve CSV file")->required();
  dof->add_option("--lo", lo_db, "lower grid SNR in dB")->required();
  dof->add_option("--hi", hi_db, "upper grid SNR in dB")->required();

  auto* val = app.add_subcommand("validate-config", "check a JSON config file");
  val->add_option("--config", val_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = load_config(config_path, experiment_id, seed, !opt_seed->empty());
      const int w = resolve_workers(workers);
      std::filesystem::create_directories(out_dir);
      const auto curves = mumimo::run_experiment(cfg, w);
      mumimo::write_results(out_dir, cfg, curves);
      std::cout << out_dir << "/" << cfg.experiment << ".csv\n";
    } else if (dof->parsed()) {
      std::ifstream f(curve_path);
      if (!f) throw mumimo::ConfigError("config: cannot open " + curve_path);
      const auto curves = mumimo::curves_from_csv(f);
      if (curves.empty()) throw mumimo::ConfigError("config: no curves in file");
      for (const auto& c : curves) {
        const double slope = mumimo::measure_dof(c, lo_db, hi_db);
        std::cout << c.scheme << " rho=" << mumimo::format_double(c.rho)
                  << " dof=" << mumimo::format_double(slope) << "\n";
      }
    } else if (val->parsed()) {
      load_config(val_path, "", 0, false);
      std::cout << "ok\n";
    }
  } catch (const mumimo::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 0;
}
