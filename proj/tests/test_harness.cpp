#include <catch_amalgamated.hpp>

#include <sstream>

#include "mumimo/harness.hpp"

using namespace mumimo;

TEST_CASE("config parsing rejects unknown keys and bad values") {
  REQUIRE_THROWS_AS(config_from_json({{"experiment", "fig3_mat_vs_lzfb"},
                                      {"snr_grid_db", {0.0, 10.0}},
                                      {"bogus", 1}}),
                    ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"experiment", "no_such_experiment"}}),
                    ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"K", 4}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"rho_list", {1.5}}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"samples", 0}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"snr_grid_db", "oops"}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"L", 1}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"K", 3}, {"R", 1}}), ConfigError);

  ExperimentConfig c = config_from_json({{"experiment", "fig2_sched_parity"},
                                         {"seed", 9},
                                         {"samples", 77}});
  REQUIRE(c.experiment == "fig2_sched_parity");
  REQUIRE(c.seed == 9);
  REQUIRE(c.samples == 77);
  REQUIRE(c.L == 20);  // default survives
}

TEST_CASE("fingerprint tracks config content") {
  ExperimentConfig a, b;
  REQUIRE(config_fingerprint(a) == config_fingerprint(b));
  b.seed = 2;
  REQUIRE(config_fingerprint(a) != config_fingerprint(b));
  REQUIRE(config_fingerprint(a).size() == 16);
}

TEST_CASE("measure_dof recovers a synthetic slope") {
  RateCurve c;
  c.scheme = "synthetic";
  for (double snr : {10.0, 20.0, 30.0, 40.0}) {
    const double log2p = snr / 10.0 * std::log2(10.0);
    c.points.push_back({snr, 2.0 * log2p + 1.25, 0.0, 1});
  }
  REQUIRE(measure_dof(c, 30.0, 40.0) == Catch::Approx(2.0).epsilon(1e-9));
  REQUIRE(measure_dof(c, 10.0, 40.0) == Catch::Approx(2.0).epsilon(1e-9));
  REQUIRE_THROWS_AS(measure_dof(c, 15.0, 40.0), std::invalid_argument);
  REQUIRE_THROWS_AS(measure_dof(c, 40.0, 30.0), std::invalid_argument);
}

TEST_CASE("runs are byte-identical across worker counts") {
  ExperimentConfig cfg;
  cfg.experiment = "fig3_mat_vs_lzfb";
  cfg.snr_grid_db = {10.0, 30.0};
  cfg.rho_list = {0.95};
  cfg.samples = 400;
  cfg.seed = 5;
  const std::string csv1 = curves_to_csv(run_experiment(cfg, 1));
  const std::string csv4 = curves_to_csv(run_experiment(cfg, 4));
  REQUIRE(csv1 == csv4);
  const std::string again = curves_to_csv(run_experiment(cfg, 1));
  REQUIRE(csv1 == again);

  ExperimentConfig other = cfg;
  other.seed = 6;
  REQUIRE(curves_to_csv(run_experiment(other, 1)) != csv1);
}

TEST_CASE("single-sample points report the CI as unavailable") {
  ExperimentConfig cfg;
  cfg.snr_grid_db = {10.0};
  cfg.rho_list = {1.0};
  cfg.samples = 1;
  auto curves = run_experiment(cfg, 1);
  REQUIRE(std::isnan(curves.at(0).points.at(0).ci95));
  REQUIRE(curves_to_csv(curves).find("nan") != std::string::npos);
}

TEST_CASE("fig3 produces the expected curves with sane ordering") {
  ExperimentConfig cfg;
  cfg.snr_grid_db = {20.0};
  cfg.rho_list = {0.9};
  cfg.samples = 600;
  auto curves = run_experiment(cfg, 1);
  REQUIRE(curves.size() == 3);
  REQUIRE(curves[0].scheme == "mat_perfect");
  REQUIRE(curves[1].scheme == "mat_trained");
  REQUIRE(curves[2].scheme == "lzfb_trained");
  // trained bound cannot beat the perfect-CSI rate
  REQUIRE(curves[1].points[0].mean_rate < curves[0].points[0].mean_rate);
  for (const auto& c : curves) {
    REQUIRE(c.points[0].mean_rate > 0.0);
    REQUIRE(c.points[0].samples == 600);
    REQUIRE(c.fingerprint == config_fingerprint(cfg));
  }
}

TEST_CASE("scheduling experiments run end to end") {
  ExperimentConfig cfg;
  cfg.experiment = "fig2_sched_parity";
  cfg.snr_grid_db = {10.0};
  cfg.L = 4;
  cfg.samples = 40;
  cfg.f_samples = 8;
  auto curves = run_experiment(cfg, 1);
  REQUIRE(curves.size() == 2);
  REQUIRE(curves[0].scheme == "sched_mat_session");
  REQUIRE(curves[1].scheme == "sched_packet_centric");
  for (const auto& c : curves) REQUIRE(c.points[0].mean_rate > 0.0);

  cfg.experiment = "fig4_sched_modes";
  cfg.samples = 60;
  auto modes = run_experiment(cfg, 2);
  REQUIRE(modes.size() == 6);
  REQUIRE(modes[1].scheme == "sched_pc_3u_2r");
  REQUIRE(modes[5].scheme == "unsched_3u_3r");
}

TEST_CASE("csv round-trips through the parser") {
  ExperimentConfig cfg;
  cfg.snr_grid_db = {10.0, 20.0};
  cfg.rho_list = {1.0};
  cfg.samples = 50;
  auto curves = run_experiment(cfg, 1);
  std::istringstream in(curves_to_csv(curves));
  auto parsed = curves_from_csv(in);
  REQUIRE(parsed.size() == curves.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    REQUIRE(parsed[i].scheme == curves[i].scheme);
    REQUIRE(parsed[i].points.size() == curves[i].points.size());
    for (std::size_t p = 0; p < parsed[i].points.size(); ++p) {
      REQUIRE(parsed[i].points[p].mean_rate == curves[i].points[p].mean_rate);
      REQUIRE(parsed[i].points[p].snr_db == curves[i].points[p].snr_db);
    }
  }
}
