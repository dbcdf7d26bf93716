#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "mumimo/rng.hpp"

namespace mumimo {

// Fading coefficients for one slot: M transmit antennas x K users,
// entries i.i.d. CN(0,1).
struct ChannelMatrix {
  Eigen::MatrixXcd entries;
  long slot_index = 0;

  int num_antennas() const { return static_cast<int>(entries.rows()); }
  int num_users() const { return static_cast<int>(entries.cols()); }
};

// First-order Gauss-Markov temporal evolution. Per-slot correlation
// rho_step gives rho(d) = rho_step^d at delay d and keeps the marginal
// entry distribution CN(0,1).
struct GaussMarkovModel {
  double rho_step = 1.0;
  int M = 2;
  int K = 2;
};

inline ChannelMatrix sample_iid(int M, int K, Rng& rng) {
  if (M < 1 || K < 1) {
    throw std::invalid_argument("sample_iid: dimensions must be >= 1");
  }
  ChannelMatrix h;
  h.entries.resize(M, K);
  for (int c = 0; c < K; ++c) {
    for (int r = 0; r < M; ++r) {
      h.entries(r, c) = rng.cgauss();
    }
  }
  return h;
}

inline ChannelMatrix evolve(const ChannelMatrix& h, const GaussMarkovModel& model,
                            Rng& rng) {
  if (h.num_antennas() != model.M || h.num_users() != model.K) {
    throw std::invalid_argument("evolve: channel dimensions do not match model");
  }
  if (model.rho_step < 0.0 || model.rho_step > 1.0) {
    throw std::invalid_argument("evolve: rho_step must lie in [0,1]");
  }
  ChannelMatrix next;
  next.slot_index = h.slot_index + 1;
  next.entries.resize(model.M, model.K);
  const double a = model.rho_step;
  const double b = std::sqrt(1.0 - a * a);
  for (int c = 0; c < model.K; ++c) {
    for (int r = 0; r < model.M; ++r) {
      next.entries(r, c) = a * h.entries(r, c) + b * rng.cgauss();
    }
  }
  return next;
}

inline double correlation(const GaussMarkovModel& model, long delay) {
  return std::pow(model.rho_step, static_cast<double>(delay));
}

// rho_step achieving a target end-to-end correlation over `delay` slots.
inline double rho_step_for(double rho_target, long delay) {
  if (delay <= 0) return 1.0;
  return std::pow(rho_target, 1.0 / static_cast<double>(delay));
}

}  // namespace mumimo
