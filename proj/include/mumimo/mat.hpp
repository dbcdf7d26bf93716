#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mumimo/channel.hpp"
#include "mumimo/csi.hpp"
#include "mumimo/rng.hpp"

namespace mumimo {

inline constexpr double kMatAlpha = 0.70710678118654752440;  // 1/sqrt(2)

struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    long long g = std::gcd(num < 0 ? -num : num, den < 0 ? -den : den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    if (den < 0) {
      num = -num;
      den = -den;
    }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

struct SlotAccounting {
  std::vector<long long> slots_per_round;
  long long total_slots = 0;
  long long total_symbols = 0;
  Rational dof;
};

// Slot counts for the K-user R-round scheme: rounds 1..R-1 use Q/r slots,
// the final round Q(K+1-R)/R slots; K*Q symbols delivered in total.
inline SlotAccounting slot_accounting(int K, int R, long long Q) {
  if (K < 2) throw std::invalid_argument("slot_accounting: K must be >= 2");
  if (R < 2 || R > K) throw std::invalid_argument("slot_accounting: R must lie in [2,K]");
  if (Q < 1) throw std::invalid_argument("slot_accounting: Q must be positive");
  SlotAccounting acc;
  for (int r = 1; r <= R - 1; ++r) {
    if (Q % r != 0) {
      throw std::invalid_argument("slot_accounting: Q/r is not integral");
    }
    acc.slots_per_round.push_back(Q / r);
  }
  const long long last_num = Q * static_cast<long long>(K + 1 - R);
  if (last_num % R != 0) {
    throw std::invalid_argument("slot_accounting: last-round slot count is not integral");
  }
  acc.slots_per_round.push_back(last_num / R);
  for (long long s : acc.slots_per_round) acc.total_slots += s;
  acc.total_symbols = static_cast<long long>(K) * Q;
  acc.dof = Rational(acc.total_symbols, acc.total_slots);
  return acc;
}

// ---------------------------------------------------------------------------
// 2-user MAT sessions (M = K = 2), perfect CSI and trained/feedback modes.
// ---------------------------------------------------------------------------

// True channels of one session: round-1 slots 1,2 carry the two users'
// vector messages; slot 3 carries the combined scalar message on antenna 1.
struct MatSession2 {
  Eigen::Vector2cd h1_s1, h2_s1;  // slot 1
  Eigen::Vector2cd h1_s2, h2_s2;  // slot 2
  std::complex<double> h1_s3, h2_s3;  // slot-3 scalar channels (antenna 1)
};

// Slots evolve per user via the Gauss-Markov recursion, so cross-slot
// correlation is rho_step^delta.
inline MatSession2 draw_session2(double rho_step, Rng& rng) {
  GaussMarkovModel gm{rho_step, 2, 1};
  ChannelMatrix h1 = sample_iid(2, 1, rng);
  ChannelMatrix h2 = sample_iid(2, 1, rng);
  MatSession2 s;
  s.h1_s1 = h1.entries.col(0);
  s.h2_s1 = h2.entries.col(0);
  h1 = evolve(h1, gm, rng);
  h2 = evolve(h2, gm, rng);
  s.h1_s2 = h1.entries.col(0);
  s.h2_s2 = h2.entries.col(0);
  h1 = evolve(h1, gm, rng);
  h2 = evolve(h2, gm, rng);
  s.h1_s3 = h1.entries(0, 0);
  s.h2_s3 = h2.entries(0, 0);
  return s;
}

// Round-1 observation per user: y_n = h_n^H x + v_n.
inline Eigen::VectorXcd simulate_round1(const Eigen::VectorXcd& x,
                                        const ChannelMatrix& H, double N0, Rng& rng) {
  if (x.size() != H.entries.rows()) {
    throw std::invalid_argument("simulate_round1: input dimension mismatch");
  }
  const double sn = std::sqrt(N0);
  Eigen::VectorXcd y(H.entries.cols());
  for (Eigen::Index n = 0; n < H.entries.cols(); ++n) {
    y(n) = H.entries.col(n).adjoint() * x;
    y(n) += sn * rng.cgauss();
  }
  return y;
}

// The combined round-2 stream, unscaled: csit_1^H x2 + csit_2^H x1.
// csit_* are the transmitter's versions of the eavesdropper channels
// h_1[2] and h_2[1].
inline std::complex<double> form_round2_message(const Eigen::VectorXcd& csit_1,
                                                const Eigen::VectorXcd& csit_2,
                                                const Eigen::VectorXcd& x1,
                                                const Eigen::VectorXcd& x2) {
  std::complex<double> m = csit_1.adjoint() * x2;
  std::complex<double> n = csit_2.adjoint() * x1;
  return m + n;
}

struct EffectiveChannel2 {
  Eigen::Matrix2cd rows;           // y = rows * x + noise
  Eigen::Vector2d noise_diag;      // noise covariance (diagonal)
};

// After interference cancellation each user sees a 2x2 channel:
// user 1 rows [h1[1]^H ; alpha h1[3] h2[1]^H], second-row noise is
// enhanced by the cancellation.
inline EffectiveChannel2 effective_channel_perfect(const MatSession2& s, int user,
                                                   double N0,
                                                   double alpha = kMatAlpha) {
  EffectiveChannel2 eff;
  if (user == 1) {
    eff.rows.row(0) = s.h1_s1.adjoint();
    eff.rows.row(1) = alpha * s.h1_s3 * s.h2_s1.adjoint();
    eff.noise_diag << N0, N0 * (1.0 + std::norm(alpha * s.h1_s3));
  } else if (user == 2) {
    eff.rows.row(0) = s.h2_s2.adjoint();
    eff.rows.row(1) = alpha * s.h2_s3 * s.h1_s2.adjoint();
    eff.noise_diag << N0, N0 * (1.0 + std::norm(alpha * s.h2_s3));
  } else {
    throw std::invalid_argument("effective_channel_perfect: user must be 1 or 2");
  }
  return eff;
}

// log2 det(I + (P/2) H^H C^-1 H) for the whitened 2x2 effective channel.
inline double mutual_info_bits(const EffectiveChannel2& eff, double P) {
  Eigen::Matrix2cd g = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd rows_w = eff.rows;
  rows_w.row(0) /= std::sqrt(eff.noise_diag(0));
  rows_w.row(1) /= std::sqrt(eff.noise_diag(1));
  g += (P / 2.0) * rows_w.adjoint() * rows_w;
  const double d = std::abs(g.determinant());
  return std::log2(d);
}

// Per-user perfect-CSI rate in bits/channel use: 2 symbols over 3 slots.
inline double mat_perfect_user_rate(const MatSession2& s, int user, double P,
                                    double N0) {
  return mutual_info_bits(effective_channel_perfect(s, user, N0), P) / 3.0;
}

// ---------------------------------------------------------------------------
// Trained / feedback mode
// ---------------------------------------------------------------------------

// Everything one session evaluation needs: true channels plus every
// estimate variant each side forms, all derived from shared pilot
// observations so the error correlations are physical.
struct TrainedMatSession {
  MatSession2 truth;
  TrainingConfig cfg;
  double alpha = kMatAlpha;

  // user-k self estimates h_tilde_k[j]
  Eigen::Vector2cd ht1_s1, ht1_s2, ht2_s1, ht2_s2;
  std::complex<double> ht1_s3, ht2_s3;  // scalar slot-3 training

  // BS feedback estimates of the eavesdropper channels
  Eigen::Vector2cd hh1_s2, hh2_s1;  // h_hat_1[2], h_hat_2[1]

  // overheard peer estimates: user 1 holds h_breve_2[1], user 2 holds h_breve_1[2]
  Eigen::Vector2cd hb2_s1, hb1_s2;
};

inline TrainedMatSession draw_trained_session(const TrainingConfig& cfg,
                                              double rho_step, Rng& rng) {
  cfg.validate();
  TrainedMatSession s;
  s.cfg = cfg;
  s.truth = draw_session2(rho_step, rng);

  auto tr = [&](const Eigen::Vector2cd& h) { return downlink_train(h, cfg, rng); };
  TrainingResult t1_s1 = tr(s.truth.h1_s1);
  TrainingResult t1_s2 = tr(s.truth.h1_s2);
  TrainingResult t2_s1 = tr(s.truth.h2_s1);
  TrainingResult t2_s2 = tr(s.truth.h2_s2);
  s.ht1_s1 = t1_s1.estimate.vector;
  s.ht1_s2 = t1_s2.estimate.vector;
  s.ht2_s1 = t2_s1.estimate.vector;
  s.ht2_s2 = t2_s2.estimate.vector;

  // Feedback of the eavesdropper-slot pilot observations: user 1 feeds
  // back s_1[2], user 2 feeds back s_2[1]; each hop is overheard by the
  // other user. All three estimates of one channel share the pilot noise.
  s.hh1_s2 = feedback_to_bs(t1_s2.pilot_obs, cfg, rng).vector;
  s.hb1_s2 = feedback_to_peer(t1_s2.pilot_obs, cfg, rng).vector;
  s.hh2_s1 = feedback_to_bs(t2_s1.pilot_obs, cfg, rng).vector;
  s.hb2_s1 = feedback_to_peer(t2_s1.pilot_obs, cfg, rng).vector;

  // Scalar round-2 training (single transmit antenna), same beta1.
  Eigen::VectorXcd h13(1), h23(1);
  h13(0) = s.truth.h1_s3;
  h23(0) = s.truth.h2_s3;
  s.ht1_s3 = downlink_train(h13, cfg, rng).estimate.vector(0);
  s.ht2_s3 = downlink_train(h23, cfg, rng).estimate.vector(0);
  return s;
}

struct RateBoundTerms {
  Eigen::Matrix2cd A;
  Eigen::Matrix2cd B;
  Eigen::Vector2d I_A;    // diagonal
  Eigen::Vector2d I_B;    // diagonal
  Eigen::Vector2d N_MAT;  // noise covariance diagonal
};

inline RateBoundTerms rate_bound_terms(const TrainedMatSession& s, int user) {
  if (user != 1 && user != 2) {
    throw std::invalid_argument("rate_bound_terms: user must be 1 or 2");
  }
  const TrainingConfig& c = s.cfg;
  const double gamma = c.gamma();
  const double s1 = c.sigma1_sq();
  const double sa = c.sigma_a_sq();
  const double sb = c.sigma_b_sq();
  const double a = s.alpha;
  const double M = static_cast<double>(c.M);

  // user 1: own row from h_tilde_1[1]; aligned row through the peer-derived
  // cross estimate of h_hat_2[1]; the self-derived cross estimate of
  // h_hat_1[2] drives the residual term B.
  const Eigen::Vector2cd& ht_own = (user == 1) ? s.ht1_s1 : s.ht2_s2;
  const Eigen::Vector2cd& ht_cross_self = (user == 1) ? s.ht1_s2 : s.ht2_s1;
  const Eigen::Vector2cd& hb_peer = (user == 1) ? s.hb2_s1 : s.hb1_s2;
  const std::complex<double> ht3 = (user == 1) ? s.ht1_s3 : s.ht2_s3;

  const Eigen::Vector2cd hcheck_peer = gamma * hb_peer;        // h_check of other user
  const Eigen::Vector2cd hcheck_self = gamma * ht_cross_self;  // h_check of own eaves slot

  RateBoundTerms t;
  t.A.row(0) = ht_own.adjoint();
  t.A.row(1) = a * ht3 * hcheck_peer.adjoint();
  t.B.row(0).setZero();
  t.B.row(1) = a * ht3 * (hcheck_self.adjoint() - gamma * ht_cross_self.adjoint());
  t.N_MAT << c.N0, c.N0 * (1.0 + std::norm(a * gamma * ht3));
  t.I_A << M * s1,
      a * a * (s1 * (M * sb + hcheck_peer.squaredNorm()) + M * std::norm(ht3) * sb);
  t.I_B << 0.0,
      a * a * (s1 * (M * sa + hcheck_self.squaredNorm()) +
               M * std::norm(ht3) * (sa + gamma * gamma * s1));
  return t;
}

// Achievable-rate lower bound with Gaussian inputs:
// (2/3)[log2|N + (AA^H+BB^H+I_A+I_B)P/M| - log2|N + (BB^H+I_A+I_B)P/M|].
inline double rate_lower_bound(const RateBoundTerms& t, double P, int M) {
  const double pm = P / static_cast<double>(M);
  Eigen::Matrix2cd interf = t.B * t.B.adjoint();
  interf(0, 0) += t.I_A(0) + t.I_B(0);
  interf(1, 1) += t.I_A(1) + t.I_B(1);
  Eigen::Matrix2cd n = Eigen::Matrix2cd::Zero();
  n(0, 0) = t.N_MAT(0);
  n(1, 1) = t.N_MAT(1);
  Eigen::Matrix2cd full = n + (t.A * t.A.adjoint() + interf) * pm;
  Eigen::Matrix2cd part = n + interf * pm;
  const double d_full = full.determinant().real();
  const double d_part = part.determinant().real();
  if (!(d_full > 0.0) || !(d_part > 0.0)) {
    throw std::runtime_error("rate_lower_bound: non-positive-definite argument");
  }
  return (2.0 / 3.0) * (std::log2(d_full) - std::log2(d_part));
}

// Sum rates used by the experiment harness. The per-realization bound is
// evaluated per user and averaged so that both modes share the same
// 2-symbols-per-user-over-3-slots normalization (sum slope 4/3).
inline double mat_perfect_sum_rate(const MatSession2& s, double P, double N0) {
  return mat_perfect_user_rate(s, 1, P, N0) + mat_perfect_user_rate(s, 2, P, N0);
}

inline double mat_trained_sum_rate(const TrainedMatSession& s, double P) {
  const double r1 = rate_lower_bound(rate_bound_terms(s, 1), P, s.cfg.M);
  const double r2 = rate_lower_bound(rate_bound_terms(s, 2), P, s.cfg.M);
  return 0.5 * (r1 + r2);
}

}  // namespace mumimo
