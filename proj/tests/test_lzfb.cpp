#include <catch_amalgamated.hpp>

#include "mumimo/lzfb.hpp"

using namespace mumimo;

TEST_CASE("identity channel gives identity precoder and interference-free rates") {
  ChannelMatrix h;
  h.entries = Eigen::MatrixXcd::Identity(3, 3);
  ZfPrecoder p = zf_precoder(h);
  REQUIRE((p.columns - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-12);
  Eigen::VectorXd r = lzfb_rate(h, p, 9.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    REQUIRE(r(k) == Catch::Approx(std::log2(1.0 + 3.0)));
  }
}

TEST_CASE("precoder nulls the estimated cross channels") {
  Rng rng(7);
  ChannelMatrix h = sample_iid(4, 4, rng);
  ZfPrecoder p = zf_precoder(h);
  for (int k = 0; k < 4; ++k) {
    REQUIRE(p.columns.col(k).norm() == Catch::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 4; ++j) {
      if (j == k) continue;
      REQUIRE(std::abs(std::complex<double>(h.entries.col(k).adjoint() *
                                            p.columns.col(j))) < 1e-10);
    }
  }
}

TEST_CASE("precoder rejects degenerate inputs") {
  Rng rng(9);
  ChannelMatrix wide = sample_iid(2, 3, rng);
  REQUIRE_THROWS_AS(zf_precoder(wide), std::invalid_argument);
  ChannelMatrix dup = sample_iid(3, 3, rng);
  dup.entries.col(2) = dup.entries.col(1);
  REQUIRE_THROWS_AS(zf_precoder(dup), std::runtime_error);
}

TEST_CASE("lzfb_rate validates dimensions") {
  Rng rng(11);
  ChannelMatrix h = sample_iid(3, 3, rng);
  ZfPrecoder p = zf_precoder(h);
  ChannelMatrix other = sample_iid(2, 2, rng);
  REQUIRE_THROWS_AS(lzfb_rate(other, p, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("perfect aligned CSIT beats trained outdated CSIT") {
  TrainingConfig cfg;
  cfg.P = 1000.0;
  cfg.P1 = 1000.0;
  cfg.M = 2;
  Rng rng(13);
  const int n = 2000;
  double perfect = 0.0, trained = 0.0, stale = 0.0;
  for (int i = 0; i < n; ++i) {
    perfect += lzfb_trained_sum_rate(cfg, 1.0, rng, true);
    trained += lzfb_trained_sum_rate(cfg, 1.0, rng, false);
    stale += lzfb_trained_sum_rate(cfg, 0.9, rng, false);
  }
  REQUIRE(perfect / n > trained / n);
  REQUIRE(trained / n > stale / n);
}

TEST_CASE("imperfect CSIT saturates while perfect CSIT keeps growing") {
  Rng rng(17);
  const int n = 2000;
  auto mean_rate = [&](double P, double rho, bool perfect) {
    TrainingConfig cfg;
    cfg.P = P;
    cfg.P1 = P;
    cfg.M = 2;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += lzfb_trained_sum_rate(cfg, rho, rng, perfect);
    return acc / n;
  };
  const double growth_perfect = mean_rate(1e6, 1.0, true) - mean_rate(1e4, 1.0, true);
  const double growth_stale = mean_rate(1e6, 0.95, false) - mean_rate(1e4, 0.95, false);
  REQUIRE(growth_perfect > 10.0);  // ~ 2 log2(100)
  REQUIRE(growth_stale < 1.5);
}
