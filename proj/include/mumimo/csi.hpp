#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "mumimo/rng.hpp"

namespace mumimo {

// Downlink training / analog feedback parameters. All error-variance
// closed forms live here so that every consumer agrees on them.
struct TrainingConfig {
  double beta1 = 2.0;   // downlink pilot symbols per antenna (>= 1)
  double beta_f = 2.0;  // feedback symbols per antenna
  double P = 1.0;       // downlink power
  double P1 = 1.0;      // inter-user link power
  double N0 = 1.0;      // noise spectral density
  int M = 2;            // transmit antennas

  void validate() const {
    if (beta1 < 1.0) throw std::invalid_argument("TrainingConfig: beta1 must be >= 1");
    if (beta_f <= 0.0) throw std::invalid_argument("TrainingConfig: beta_f must be > 0");
    if (P <= 0.0 || P1 <= 0.0 || N0 <= 0.0) {
      throw std::invalid_argument("TrainingConfig: powers and N0 must be > 0");
    }
    if (M < 1) throw std::invalid_argument("TrainingConfig: M must be >= 1");
  }

  // Training error: h = h_tilde + n, per-component variance sigma1^2.
  double sigma1_sq() const { return 1.0 / (1.0 + beta1 * P / N0); }

  // Effective noise on the user->BS analog feedback observation.
  double sigma_w_sq() const {
    return N0 * (1.0 + (beta_f * P / N0) / (1.0 + beta1 * P / N0));
  }

  // Deterministic gain of the fed-back channel seen at the BS.
  double bs_feedback_gain() const {
    return std::sqrt(beta_f * beta1 * P * P / (beta1 * P + N0));
  }

  // BS feedback estimate error: h = h_hat + e.
  double sigma_e_sq() const {
    const double c2 = beta_f * beta1 * P * P / (beta1 * P + N0);
    return sigma_w_sq() / (sigma_w_sq() + c2);
  }

  // Peer (overheard) feedback hop, power P1.
  double sigma_x_sq() const {
    return N0 * (1.0 + (beta_f * P1 / N0) / (1.0 + beta1 * P / N0));
  }

  double peer_feedback_gain() const {
    return std::sqrt(beta_f * P1 * beta1 * P / (beta1 * P + N0));
  }

  // Peer estimate error: h = h_breve + f.
  double sigma_f_sq() const {
    const double c2 = beta_f * P1 * beta1 * P / (beta1 * P + N0);
    return sigma_x_sq() / (sigma_x_sq() + c2);
  }

  // Cross-MMSE gain: h_check = gamma * source.
  double gamma() const { return beta_f * P / (beta_f * P + N0); }
  double gamma_peer() const { return beta_f * P1 / (beta_f * P1 + N0); }

  // h_hat = gamma * h_tilde + zeta, per-component variance sigma_a^2.
  double sigma_a_sq() const {
    const double t = beta1 * P / (beta1 * P + N0);
    return gamma() * t * (1.0 - gamma());
  }

  // h_hat = gamma * h_breve + zeta, per-component variance sigma_b^2.
  double sigma_b_sq() const {
    const double t = beta1 * P / (beta1 * P + N0);
    return gamma() * t * (1.0 - gamma() * gamma_peer());
  }
};

enum class EstimateKind {
  SelfTraining,   // h_tilde, from downlink pilots
  BsFeedback,     // h_hat, fed back to the BS
  PeerOverheard,  // h_breve, overheard by the other user
  CrossFromSelf,  // h_check derived from h_tilde
  CrossFromPeer,  // h_check derived from h_breve
};

struct CsiEstimate {
  Eigen::VectorXcd vector;
  double error_variance = 0.0;  // per-component, i.i.d.
  EstimateKind kind = EstimateKind::SelfTraining;
  long slot_index = 0;
  int owner = 0;    // user holding the estimate (0 = BS)
  int subject = 0;  // user whose channel is estimated
};

struct TrainingResult {
  Eigen::VectorXcd pilot_obs;  // s = sqrt(beta1 P) h + v
  CsiEstimate estimate;        // h_tilde
};

// Downlink pilot phase: the user observes s and forms the MMSE estimate
// of its own channel. Works for any vector length (scalar round-2
// training uses a length-1 input).
inline TrainingResult downlink_train(const Eigen::VectorXcd& h_true,
                                     const TrainingConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto n = h_true.size();
  TrainingResult out;
  out.pilot_obs.resize(n);
  const double g = std::sqrt(cfg.beta1 * cfg.P);
  const double sn = std::sqrt(cfg.N0);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.pilot_obs(i) = g * h_true(i) + sn * rng.cgauss();
  }
  out.estimate.vector = (g / (cfg.N0 + cfg.beta1 * cfg.P)) * out.pilot_obs;
  out.estimate.error_variance = cfg.sigma1_sq();
  out.estimate.kind = EstimateKind::SelfTraining;
  return out;
}

// Analog feedback of the pilot observation over the unfaded AWGN uplink;
// the BS forms the MMSE estimate h_hat from its observation.
inline CsiEstimate feedback_to_bs(const Eigen::VectorXcd& pilot_obs,
                                  const TrainingConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto n = pilot_obs.size();
  const double a = std::sqrt(cfg.beta_f * cfg.P) / std::sqrt(cfg.beta1 * cfg.P + cfg.N0);
  const double c = cfg.bs_feedback_gain();
  const double sw2 = cfg.sigma_w_sq();
  const double sn = std::sqrt(cfg.N0);
  CsiEstimate est;
  est.vector.resize(n);
  const double mmse = c / (c * c + sw2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> g = a * pilot_obs(i) + sn * rng.cgauss();
    est.vector(i) = mmse * g;
  }
  est.error_variance = cfg.sigma_e_sq();
  est.kind = EstimateKind::BsFeedback;
  return est;
}

// Same feedback chain overheard by the other user, link power P1.
inline CsiEstimate feedback_to_peer(const Eigen::VectorXcd& pilot_obs,
                                    const TrainingConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto n = pilot_obs.size();
  const double a = std::sqrt(cfg.beta_f * cfg.P1) / std::sqrt(cfg.beta1 * cfg.P + cfg.N0);
  const double c = cfg.peer_feedback_gain();
  const double sx2 = cfg.sigma_x_sq();
  const double sn = std::sqrt(cfg.N0);
  CsiEstimate est;
  est.vector.resize(n);
  const double mmse = c / (c * c + sx2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> g = a * pilot_obs(i) + sn * rng.cgauss();
    est.vector(i) = mmse * g;
  }
  est.error_variance = cfg.sigma_f_sq();
  est.kind = EstimateKind::PeerOverheard;
  return est;
}

struct CrossEstimateResult {
  CsiEstimate check;     // h_check = gamma * source
  double gamma = 0.0;
  double zeta_variance;  // sigma_a^2 or sigma_b^2
};

// The user's MMSE re-estimate of the BS-side h_hat given its own local
// estimate (h_tilde or h_breve): h_hat = gamma*source + zeta.
inline CrossEstimateResult cross_estimate(const CsiEstimate& source,
                                          const TrainingConfig& cfg) {
  cfg.validate();
  CrossEstimateResult out;
  out.gamma = cfg.gamma();
  out.check.vector = out.gamma * source.vector;
  out.check.slot_index = source.slot_index;
  out.check.owner = source.owner;
  out.check.subject = source.subject;
  switch (source.kind) {
    case EstimateKind::SelfTraining:
      out.check.kind = EstimateKind::CrossFromSelf;
      out.zeta_variance = cfg.sigma_a_sq();
      break;
    case EstimateKind::PeerOverheard:
      out.check.kind = EstimateKind::CrossFromPeer;
      out.zeta_variance = cfg.sigma_b_sq();
      break;
    default:
      throw std::invalid_argument(
          "cross_estimate: source must be SelfTraining or PeerOverheard");
  }
  out.check.error_variance = out.zeta_variance;
  return out;
}

}  // namespace mumimo
