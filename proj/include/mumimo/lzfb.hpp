#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "mumimo/channel.hpp"
#include "mumimo/csi.hpp"

namespace mumimo {

// Linear zero-forcing precoder: unit-norm columns with
// h_hat_k^H w_j = 0 for j != k, equal power P/K per stream.
struct ZfPrecoder {
  Eigen::MatrixXcd columns;  // M x K, unit-norm columns
  long source_estimate_slot = 0;
  long transmit_slot = 0;
};

inline ZfPrecoder zf_precoder(const ChannelMatrix& h_hat) {
  const int M = h_hat.num_antennas();
  const int K = h_hat.num_users();
  if (K > M) throw std::invalid_argument("zf_precoder: requires K <= M");
  Eigen::MatrixXcd gram = h_hat.entries.adjoint() * h_hat.entries;  // K x K
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
  if (!lu.isInvertible()) {
    throw std::runtime_error("zf_precoder: rank-deficient channel estimate");
  }
  Eigen::MatrixXcd w = h_hat.entries * lu.inverse();  // columns of pinv^H
  ZfPrecoder p;
  p.columns.resize(M, K);
  for (int k = 0; k < K; ++k) {
    const double nrm = w.col(k).norm();
    if (!(nrm > 0.0)) throw std::runtime_error("zf_precoder: degenerate column");
    p.columns.col(k) = w.col(k) / nrm;
  }
  p.source_estimate_slot = h_hat.slot_index;
  return p;
}

// Per-user rates for one realization:
// R_k = log2(1 + (P/K)|h_k^H w_k|^2 / (N0 + (P/K) sum_{j!=k} |h_k^H w_j|^2)).
inline Eigen::VectorXd lzfb_rate(const ChannelMatrix& h_true, const ZfPrecoder& prec,
                                 double P, double N0) {
  const int K = h_true.num_users();
  if (prec.columns.rows() != h_true.entries.rows() || prec.columns.cols() != K) {
    throw std::invalid_argument("lzfb_rate: dimension mismatch");
  }
  const double ps = P / static_cast<double>(K);
  Eigen::VectorXd rates(K);
  for (int k = 0; k < K; ++k) {
    double sig = 0.0, interf = 0.0;
    for (int j = 0; j < K; ++j) {
      const double g = std::norm(std::complex<double>(
          h_true.entries.col(k).adjoint() * prec.columns.col(j)));
      if (j == k) {
        sig = g;
      } else {
        interf += g;
      }
    }
    rates(k) = std::log2(1.0 + ps * sig / (N0 + ps * interf));
  }
  return rates;
}

// Full baseline pipeline for one Monte Carlo draw: train + feed back CSIT
// on the pilot slot, evolve the true channel to the transmit slot by the
// Gauss-Markov factor rho, precode on the aged estimate.
// CSIT error = estimation error plus aging.
inline double lzfb_trained_sum_rate(const TrainingConfig& cfg, double rho, Rng& rng,
                                    bool perfect_csit = false) {
  const double P = cfg.P;
  const double N0 = cfg.N0;
  const int M = cfg.M;
  const int K = M;
  ChannelMatrix h_pilot = sample_iid(M, K, rng);
  ChannelMatrix h_hat = h_pilot;
  if (!perfect_csit) {
    for (int k = 0; k < K; ++k) {
      TrainingResult t = downlink_train(h_pilot.entries.col(k), cfg, rng);
      h_hat.entries.col(k) = feedback_to_bs(t.pilot_obs, cfg, rng).vector;
    }
  }
  GaussMarkovModel gm{rho, M, K};
  ChannelMatrix h_tx = evolve(h_pilot, gm, rng);
  return lzfb_rate(h_tx, zf_precoder(h_hat), P, N0).sum();
}

}  // namespace mumimo
