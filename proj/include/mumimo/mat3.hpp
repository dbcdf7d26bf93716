#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "mumimo/rng.hpp"

namespace mumimo {

// Effective-channel evaluation for the 3-user schemes (M = K = 3).
// Each user's packet is decoded from its own round-1 observation plus
// IA-cancelled looks delivered by later rounds; cancellation noise
// accumulates exactly as the algebra dictates. Scheduled variants draw
// the eavesdropper channels from argmax selections over the candidate
// pool, unscheduled variants use plain draws.

namespace detail3 {

inline Eigen::Vector3cd draw3(Rng& rng) {
  return {rng.cgauss(), rng.cgauss(), rng.cgauss()};
}

inline Eigen::Vector2cd draw2(Rng& rng) {
  return {rng.cgauss(), rng.cgauss()};
}

// Packet-centric eavesdropper metric, K=3 flavor: quality of the pair
// (own channel, normalized eavesdropper channel) as a 2x3 compound.
inline double eaves_metric(const Eigen::Vector3cd& h_own, const Eigen::Vector3cd& h_e,
                           double P) {
  Eigen::Matrix<std::complex<double>, 2, 3> H;
  H.row(0) = h_own.adjoint();
  H.row(1) = h_e.adjoint() / std::sqrt(1.0 + h_e.squaredNorm());
  Eigen::Matrix2cd g = Eigen::Matrix2cd::Identity() + (P / 3.0) * H * H.adjoint();
  return std::log2(std::abs(g.determinant()));
}

// Channel norm of this user at a partner's round-1 slot, conditioned on
// the user having been selected there (one of the top-2 norms among the
// L-1 eavesdroppers).
inline double selected_partner_norm_sq(int L, Rng& rng, bool scheduled) {
  if (!scheduled || L <= 3) {
    return draw3(rng).squaredNorm();
  }
  double best = 0.0, second = 0.0;
  for (int i = 0; i < L - 1; ++i) {
    const double n = draw3(rng).squaredNorm();
    if (n > best) {
      second = best;
      best = n;
    } else if (n > second) {
      second = n;
    }
  }
  return (rng.uniform() < 0.5) ? best : second;
}

// Round-2/3 eavesdropper channel: largest-norm candidate among `count`.
template <typename Vec>
inline Vec selected_max_norm(int count, Rng& rng, bool scheduled, Vec (*draw)(Rng&)) {
  Vec best = draw(rng);
  if (!scheduled) return best;
  for (int i = 1; i < count; ++i) {
    Vec c = draw(rng);
    if (c.squaredNorm() > best.squaredNorm()) best = c;
  }
  return best;
}

}  // namespace detail3

// ---------------------------------------------------------------------------
// 2-round 3-user scheme
// ---------------------------------------------------------------------------

struct ThreeUserTwoRoundDraw {
  Eigen::Vector3cd h_own;        // reference user's channel at the packet slot
  Eigen::Vector3cd h_e1, h_e2;   // eavesdropper channels at that slot
  double partner_norm1 = 0.0;    // |h_ref|^2 at the two partner-packet slots
  double partner_norm2 = 0.0;
  std::complex<double> g2, g3;   // scalar round-2 channels of the reference user
};

// Mutual information of one 3-dimensional packet: own row plus two
// cancelled degree-2 rows with enhanced noise.
inline double three_user_2r_packet_mi(const ThreeUserTwoRoundDraw& d, double P,
                                      double N0) {
  const double a2 = std::sqrt(3.0 / (d.h_e1.squaredNorm() + d.partner_norm1));
  const double a3 = std::sqrt(3.0 / (d.h_e2.squaredNorm() + d.partner_norm2));
  Eigen::Matrix3cd H;
  H.row(0) = d.h_own.adjoint();
  H.row(1) = a2 * d.g2 * d.h_e1.adjoint();
  H.row(2) = a3 * d.g3 * d.h_e2.adjoint();
  Eigen::Vector3d c;
  c << N0, N0 * (1.0 + std::norm(a2 * d.g2)), N0 * (1.0 + std::norm(a3 * d.g3));
  Eigen::Matrix3cd Hw = H;
  for (int r = 0; r < 3; ++r) Hw.row(r) /= std::sqrt(c(r));
  Eigen::Matrix3cd g = Eigen::Matrix3cd::Identity() + (P / 3.0) * Hw.adjoint() * Hw;
  return std::log2(std::abs(g.determinant()));
}

inline ThreeUserTwoRoundDraw draw_three_user_2r(int L, double P, Rng& rng,
                                                bool scheduled) {
  using namespace detail3;
  ThreeUserTwoRoundDraw d;
  d.h_own = draw3(rng);
  if (scheduled && L > 3) {
    // top-2 eavesdroppers among L-1 by the packet-centric metric
    std::vector<std::pair<double, Eigen::Vector3cd>> cands;
    cands.reserve(L - 1);
    for (int i = 0; i < L - 1; ++i) {
      Eigen::Vector3cd h = draw3(rng);
      cands.emplace_back(eaves_metric(d.h_own, h, P), h);
    }
    std::partial_sort(cands.begin(), cands.begin() + 2, cands.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    d.h_e1 = cands[0].second;
    d.h_e2 = cands[1].second;
  } else {
    d.h_e1 = draw3(rng);
    d.h_e2 = draw3(rng);
  }
  d.partner_norm1 = selected_partner_norm_sq(L, rng, scheduled);
  d.partner_norm2 = selected_partner_norm_sq(L, rng, scheduled);
  d.g2 = rng.cgauss();
  d.g3 = rng.cgauss();
  return d;
}

// Steady-state sum rate per slot: 3 packets per 6 slots.
inline double three_user_2r_sum_rate_sample(int L, double P, double N0, Rng& rng,
                                            bool scheduled) {
  return three_user_2r_packet_mi(draw_three_user_2r(L, P, rng, scheduled), P, N0) / 2.0;
}

// ---------------------------------------------------------------------------
// 3-round 3-user scheme
// ---------------------------------------------------------------------------

struct ThreeUserThreeRoundDraw {
  // reference user's own round-1 slots (two 3-dim sub-messages a, b)
  Eigen::Vector3cd h1_a, h1_b;
  // eavesdropper channels at those slots (partner users "2" and "3")
  Eigen::Vector3cd e2_a, e2_b, e3_a, e3_b;
  // reference user's channels at the partners' round-1 slots (cancellation
  // inputs and the partner coefficients of w12 / w13)
  Eigen::Vector3cd p2_a, p2_b, p3_a, p3_b;
  // coefficients of the pair-(2,3) degree-2 message components
  Eigen::Vector3cd w23_ua, w23_ub;  // user-3 channels at user-2's slots
  Eigen::Vector3cd w23_va, w23_vb;  // user-2 channels at user-3's slots
  // reference user's round-2 channels (first two antennas) in slots t12, t13, t23
  Eigen::Vector2cd g1_12, g1_13, g1_23;
  // round-3 eavesdropper channels: selected observer of w13 and of w12
  Eigen::Vector2cd gq_13, gq_12;
  // reference user's scalar channels in the two round-3 slots
  std::complex<double> q_a, q_b;
};

inline ThreeUserThreeRoundDraw draw_three_user_3r(int L, double P, Rng& rng,
                                                  bool scheduled) {
  using namespace detail3;
  ThreeUserThreeRoundDraw d;
  d.h1_a = draw3(rng);
  d.h1_b = draw3(rng);
  if (scheduled && L > 3) {
    // one eavesdropper pair for both sub-messages of the packet, chosen by
    // the summed packet-centric metric over the two slots
    std::vector<std::array<Eigen::Vector3cd, 2>> cand(L - 1);
    std::vector<std::pair<double, int>> score(L - 1);
    for (int i = 0; i < L - 1; ++i) {
      cand[i] = {draw3(rng), draw3(rng)};
      score[i] = {eaves_metric(d.h1_a, cand[i][0], P) +
                      eaves_metric(d.h1_b, cand[i][1], P),
                  i};
    }
    std::partial_sort(score.begin(), score.begin() + 2, score.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    d.e2_a = cand[score[0].second][0];
    d.e2_b = cand[score[0].second][1];
    d.e3_a = cand[score[1].second][0];
    d.e3_b = cand[score[1].second][1];
  } else {
    d.e2_a = draw3(rng);
    d.e2_b = draw3(rng);
    d.e3_a = draw3(rng);
    d.e3_b = draw3(rng);
  }
  d.p2_a = draw3(rng);
  d.p2_b = draw3(rng);
  d.p3_a = draw3(rng);
  d.p3_b = draw3(rng);
  d.w23_ua = draw3(rng);
  d.w23_ub = draw3(rng);
  d.w23_va = draw3(rng);
  d.w23_vb = draw3(rng);
  d.g1_12 = draw2(rng);
  d.g1_13 = draw2(rng);
  // the reference user eavesdrops w23 because it was the selected observer
  d.g1_23 = selected_max_norm<Eigen::Vector2cd>(L - 2, rng, scheduled, &draw2);
  d.gq_13 = selected_max_norm<Eigen::Vector2cd>(L - 2, rng, scheduled, &draw2);
  d.gq_12 = selected_max_norm<Eigen::Vector2cd>(L - 2, rng, scheduled, &draw2);
  d.q_a = rng.cgauss();
  d.q_b = rng.cgauss();
  return d;
}

// Mutual information of the reference user's 6-dimensional message.
// Builds the exact 6x6 effective channel and the 6x11 noise mixing matrix
// implied by the per-round cancellation chain.
inline double three_user_3r_packet_mi(const ThreeUserThreeRoundDraw& d, double P,
                                      double N0) {
  using cd = std::complex<double>;
  const double a12 = std::sqrt(3.0 / (d.e2_a.squaredNorm() + d.p2_a.squaredNorm() +
                                      d.e2_b.squaredNorm() + d.p2_b.squaredNorm()));
  const double a13 = std::sqrt(3.0 / (d.e3_a.squaredNorm() + d.p3_a.squaredNorm() +
                                      d.e3_b.squaredNorm() + d.p3_b.squaredNorm()));
  const double a23 = std::sqrt(3.0 / (d.w23_ua.squaredNorm() + d.w23_va.squaredNorm() +
                                      d.w23_ub.squaredNorm() + d.w23_vb.squaredNorm()));

  // degree-3 message d3 = (c1,c2,c3) as a linear map of all 18 data symbols
  // [x1_a x1_b x2_a x2_b x3_a x3_b], each CN(0, P/3).
  Eigen::Matrix<cd, 3, 18> D = Eigen::Matrix<cd, 3, 18>::Zero();
  auto put = [&D](int row, int col_block, const Eigen::Vector3cd& coeff, cd scale) {
    for (int i = 0; i < 3; ++i) D(row, 3 * col_block + i) += scale * std::conj(coeff(i));
  };
  // c1 = a23 g1_23^H w23,  w23_r = w23_u_r^H x2_r + w23_v_r^H x3_r
  put(0, 2, d.w23_ua, a23 * std::conj(d.g1_23(0)));
  put(0, 3, d.w23_ub, a23 * std::conj(d.g1_23(1)));
  put(0, 4, d.w23_va, a23 * std::conj(d.g1_23(0)));
  put(0, 5, d.w23_vb, a23 * std::conj(d.g1_23(1)));
  // c2 = a13 gq_13^H w13,  w13_r = e3_r^H x1_r + p3_r^H x3_r
  put(1, 0, d.e3_a, a13 * std::conj(d.gq_13(0)));
  put(1, 1, d.e3_b, a13 * std::conj(d.gq_13(1)));
  put(1, 4, d.p3_a, a13 * std::conj(d.gq_13(0)));
  put(1, 5, d.p3_b, a13 * std::conj(d.gq_13(1)));
  // c3 = a12 gq_12^H w12,  w12_r = e2_r^H x1_r + p2_r^H x2_r
  put(2, 0, d.e2_a, a12 * std::conj(d.gq_12(0)));
  put(2, 1, d.e2_b, a12 * std::conj(d.gq_12(1)));
  put(2, 2, d.p2_a, a12 * std::conj(d.gq_12(0)));
  put(2, 3, d.p2_b, a12 * std::conj(d.gq_12(1)));

  // two generic round-3 combinations, power-normalized exactly
  // combination vectors chosen orthogonal in the (c2,c3) coordinates so
  // the two round-3 looks stay well conditioned at finite SNR
  const Eigen::Vector3d pA(1.0, 1.0, 1.0);
  const Eigen::Vector3d pB(1.0, 1.0, -1.0);
  const double betaA = std::sqrt(3.0 / (pA.transpose().cast<cd>() * D).squaredNorm());
  const double betaB = std::sqrt(3.0 / (pB.transpose().cast<cd>() * D).squaredNorm());

  // effective channel rows on [x1_a; x1_b] and noise mixing over the 11
  // independent receive noises:
  // [v_a v_b vp2_a vp2_b vp3_a vp3_b v12 v13 v23 v3A v3B]
  Eigen::Matrix<cd, 6, 6> H = Eigen::Matrix<cd, 6, 6>::Zero();
  Eigen::Matrix<cd, 6, 11> Nm = Eigen::Matrix<cd, 6, 11>::Zero();

  H.block<1, 3>(0, 0) = d.h1_a.adjoint();
  Nm(0, 0) = 1.0;
  H.block<1, 3>(1, 3) = d.h1_b.adjoint();
  Nm(1, 1) = 1.0;

  // cancelled round-2 look through w12
  H.block<1, 3>(2, 0) = a12 * std::conj(d.g1_12(0)) * d.e2_a.adjoint();
  H.block<1, 3>(2, 3) = a12 * std::conj(d.g1_12(1)) * d.e2_b.adjoint();
  Nm(2, 6) = 1.0;
  Nm(2, 2) = -a12 * std::conj(d.g1_12(0));
  Nm(2, 3) = -a12 * std::conj(d.g1_12(1));

  // cancelled round-2 look through w13
  H.block<1, 3>(3, 0) = a13 * std::conj(d.g1_13(0)) * d.e3_a.adjoint();
  H.block<1, 3>(3, 3) = a13 * std::conj(d.g1_13(1)) * d.e3_b.adjoint();
  Nm(3, 7) = 1.0;
  Nm(3, 4) = -a13 * std::conj(d.g1_13(0));
  Nm(3, 5) = -a13 * std::conj(d.g1_13(1));

  // round-3 looks: cancel c1 with the own noisy w23 observation and the
  // partner components of c2, c3 with the own round-1 eavesdrops
  auto round3_row = [&](int row, const Eigen::Vector3d& p, double beta, cd q, int vcol) {
    const cd s = beta * q;
    H.block<1, 3>(row, 0) = s * (p(1) * a13 * std::conj(d.gq_13(0)) * d.e3_a.adjoint() +
                                 p(2) * a12 * std::conj(d.gq_12(0)) * d.e2_a.adjoint());
    H.block<1, 3>(row, 3) = s * (p(1) * a13 * std::conj(d.gq_13(1)) * d.e3_b.adjoint() +
                                 p(2) * a12 * std::conj(d.gq_12(1)) * d.e2_b.adjoint());
    Nm(row, vcol) = 1.0;
    Nm(row, 8) = -s * p(0);
    Nm(row, 4) -= s * p(1) * a13 * std::conj(d.gq_13(0));
    Nm(row, 5) -= s * p(1) * a13 * std::conj(d.gq_13(1));
    Nm(row, 2) -= s * p(2) * a12 * std::conj(d.gq_12(0));
    Nm(row, 3) -= s * p(2) * a12 * std::conj(d.gq_12(1));
  };
  round3_row(4, pA, betaA, d.q_a, 9);
  round3_row(5, pB, betaB, d.q_b, 10);

  Eigen::Matrix<cd, 6, 6> C = N0 * (Nm * Nm.adjoint());
  Eigen::LLT<Eigen::Matrix<cd, 6, 6>> llt(C);
  Eigen::Matrix<cd, 6, 6> Hw = llt.matrixL().solve(H);
  Eigen::Matrix<cd, 6, 6> G =
      Eigen::Matrix<cd, 6, 6>::Identity() + (P / 3.0) * Hw.adjoint() * Hw;
  return std::log2(std::abs(G.determinant()));
}

// Steady-state sum rate per slot: 18 symbols (3 users) per 11 slots.
inline double three_user_3r_sum_rate_sample(int L, double P, double N0, Rng& rng,
                                            bool scheduled) {
  return 3.0 * three_user_3r_packet_mi(draw_three_user_3r(L, P, rng, scheduled), P, N0) /
         11.0;
}

}  // namespace mumimo
