#include <catch_amalgamated.hpp>

#include "mumimo/csi.hpp"

using namespace mumimo;

namespace {

struct EmpiricalVariances {
  double train = 0, bs = 0, peer = 0, cross_self = 0, cross_peer = 0;
  std::complex<double> ortho = 0;  // E[h_tilde^* (h - h_tilde)]
  double est_power = 0;            // E|h_tilde|^2
};

// Scalar-channel Monte Carlo of the whole estimation chain.
EmpiricalVariances run_chain(const TrainingConfig& cfg, int n, std::uint64_t seed) {
  Rng rng(seed);
  EmpiricalVariances v;
  const double gamma = cfg.gamma();
  for (int s = 0; s < n; ++s) {
    Eigen::VectorXcd h(1);
    h(0) = rng.cgauss();
    TrainingResult t = downlink_train(h, cfg, rng);
    CsiEstimate hb = feedback_to_bs(t.pilot_obs, cfg, rng);
    CsiEstimate hp = feedback_to_peer(t.pilot_obs, cfg, rng);
    v.train += std::norm(h(0) - t.estimate.vector(0));
    v.bs += std::norm(h(0) - hb.vector(0));
    v.peer += std::norm(h(0) - hp.vector(0));
    // h_hat = gamma * local_estimate + zeta
    v.cross_self += std::norm(hb.vector(0) - gamma * t.estimate.vector(0));
    v.cross_peer += std::norm(hb.vector(0) - gamma * hp.vector(0));
    v.ortho += std::conj(t.estimate.vector(0)) * (h(0) - t.estimate.vector(0));
    v.est_power += std::norm(t.estimate.vector(0));
  }
  v.train /= n;
  v.bs /= n;
  v.peer /= n;
  v.cross_self /= n;
  v.cross_peer /= n;
  v.ortho /= static_cast<double>(n);
  v.est_power /= n;
  return v;
}

}  // namespace

TEST_CASE("closed forms at hand-checked points") {
  TrainingConfig c;
  c.beta1 = 2.0;
  c.P = 1.0;
  c.N0 = 1.0;
  REQUIRE(c.sigma1_sq() == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

  c.P = 10.0;
  c.beta_f = 2.0;
  c.P1 = 10.0;
  REQUIRE(c.sigma1_sq() == Catch::Approx(1.0 / 21.0).epsilon(1e-12));
  REQUIRE(c.sigma_e_sq() == Catch::Approx(41.0 / 441.0).epsilon(1e-12));
  REQUIRE(c.gamma() == Catch::Approx(20.0 / 21.0).epsilon(1e-12));
  REQUIRE(c.sigma_a_sq() == Catch::Approx(400.0 / 9261.0).epsilon(1e-12));
}

TEST_CASE("empirical error variances match the closed forms") {
  const double snrs[] = {1.0, 10.0, 100.0};
  for (double snr : snrs) {
    TrainingConfig c;
    c.beta1 = 2.0;
    c.beta_f = 2.0;
    c.P = snr;
    c.P1 = snr;
    c.N0 = 1.0;
    c.M = 1;
    const int n = 100000;
    EmpiricalVariances v = run_chain(c, n, 1234 + static_cast<std::uint64_t>(snr));
    CAPTURE(snr);
    REQUIRE(v.train == Catch::Approx(c.sigma1_sq()).epsilon(0.02));
    REQUIRE(v.bs == Catch::Approx(c.sigma_e_sq()).epsilon(0.02));
    REQUIRE(v.peer == Catch::Approx(c.sigma_f_sq()).epsilon(0.02));
    REQUIRE(v.cross_self == Catch::Approx(c.sigma_a_sq()).epsilon(0.02));
    REQUIRE(v.cross_peer == Catch::Approx(c.sigma_b_sq()).epsilon(0.02));
    // MMSE orthogonality: residual within 3 standard errors of zero
    const double se = std::sqrt(c.sigma1_sq() * (1.0 - c.sigma1_sq()) / n);
    REQUIRE(std::abs(v.ortho) < 3.0 * se + 1e-12);
    // variance decomposition E|h|^2 = E|h_tilde|^2 + sigma1^2
    REQUIRE(v.est_power == Catch::Approx(1.0 - c.sigma1_sq()).epsilon(0.02));
  }
}

TEST_CASE("training is always at least as accurate as any feedback hop") {
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    TrainingConfig c;
    c.beta1 = 1.0 + 4.0 * rng.uniform();
    c.beta_f = 0.5 + 4.0 * rng.uniform();
    c.P = std::pow(10.0, 3.0 * rng.uniform());
    c.P1 = std::pow(10.0, 3.0 * rng.uniform());
    c.N0 = 1.0;
    CAPTURE(c.beta1, c.beta_f, c.P, c.P1);
    REQUIRE(c.sigma1_sq() <= c.sigma_e_sq());
    REQUIRE(c.sigma1_sq() <= c.sigma_f_sq());
    REQUIRE(c.sigma1_sq() > 0.0);
    REQUIRE(c.sigma_e_sq() < 1.0);
    REQUIRE(c.sigma_f_sq() < 1.0);
    REQUIRE(c.sigma_a_sq() >= 0.0);
    REQUIRE(c.sigma_b_sq() >= 0.0);
    REQUIRE(c.gamma() > 0.0);
    REQUIRE(c.gamma() < 1.0);
  }
}

TEST_CASE("cross_estimate scales by gamma and tags the variance") {
  TrainingConfig c;
  c.P = 5.0;
  Rng rng(5);
  Eigen::VectorXcd h(2);
  h << rng.cgauss(), rng.cgauss();
  TrainingResult t = downlink_train(h, c, rng);
  CrossEstimateResult r = cross_estimate(t.estimate, c);
  REQUIRE((r.check.vector - c.gamma() * t.estimate.vector).norm() == 0.0);
  REQUIRE(r.check.kind == EstimateKind::CrossFromSelf);
  REQUIRE(r.zeta_variance == Catch::Approx(c.sigma_a_sq()));

  CsiEstimate peer = feedback_to_peer(t.pilot_obs, c, rng);
  CrossEstimateResult rp = cross_estimate(peer, c);
  REQUIRE(rp.check.kind == EstimateKind::CrossFromPeer);
  REQUIRE(rp.zeta_variance == Catch::Approx(c.sigma_b_sq()));

  CsiEstimate bs = feedback_to_bs(t.pilot_obs, c, rng);
  REQUIRE_THROWS_AS(cross_estimate(bs, c), std::invalid_argument);
}

TEST_CASE("config validation") {
  TrainingConfig c;
  c.beta1 = 0.5;
  REQUIRE_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.beta_f = 0.0;
  REQUIRE_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.P = -1.0;
  REQUIRE_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.M = 0;
  REQUIRE_THROWS_AS(c.validate(), std::invalid_argument);
  REQUIRE_NOTHROW(TrainingConfig{}.validate());
}
