#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "mumimo/mat3.hpp"
#include "mumimo/rng.hpp"

namespace mumimo {

// ---------------------------------------------------------------------------
// Fixed-buffer round-1 state
// ---------------------------------------------------------------------------

struct BufferEntry {
  long packet_id = 0;
  long slot = 0;                 // t_m(i)
  Eigen::MatrixXcd channels;     // M x L: stored CSI of every user in that slot
  double own_rate = 0.0;         // R_{m,i}, round-1-only mutual information
};

// Exactly N stored round-1 packets per user at every scheduling instant.
struct Round1Buffer {
  int L = 2;
  int N = 1;
  int M = 2;
  std::vector<std::vector<BufferEntry>> entries;  // [user][i]

  const BufferEntry& at(int m, int i) const {
    if (m < 0 || m >= L || i < 0 || i >= N ||
        static_cast<int>(entries.size()) != L ||
        static_cast<int>(entries[m].size()) != N) {
      throw std::invalid_argument("Round1Buffer: missing entry");
    }
    return entries[m][i];
  }
};

inline double round1_rate(const Eigen::VectorXcd& h_own, double P, double N0) {
  return std::log2(1.0 + P / (2.0 * N0) * h_own.squaredNorm());
}

inline BufferEntry draw_buffer_entry(int user, int M, int L, long packet_id, long slot,
                                     double P, double N0, Rng& rng) {
  BufferEntry e;
  e.packet_id = packet_id;
  e.slot = slot;
  e.channels.resize(M, L);
  for (int c = 0; c < L; ++c) {
    for (int r = 0; r < M; ++r) e.channels(r, c) = rng.cgauss();
  }
  e.own_rate = round1_rate(e.channels.col(user), P, N0);
  return e;
}

inline Round1Buffer make_full_buffer(int L, int N, int M, double P, double N0,
                                     Rng& rng) {
  Round1Buffer b;
  b.L = L;
  b.N = N;
  b.M = M;
  b.entries.resize(L);
  long id = 0, slot = 0;
  for (int m = 0; m < L; ++m) {
    for (int i = 0; i < N; ++i) {
      b.entries[m].push_back(draw_buffer_entry(m, M, L, id++, slot++, P, N0, rng));
    }
  }
  return b;
}

// Expected fresh-packet rate E log2(1 + P/(2N0) |h|^2), h ~ CN(0, I_M).
inline double expected_fresh_rate(int M, double P, double N0, int samples, Rng& rng) {
  double acc = 0.0;
  Eigen::VectorXcd h(M);
  for (int s = 0; s < samples; ++s) {
    for (int r = 0; r < M; ++r) h(r) = rng.cgauss();
    acc += round1_rate(h, P, N0);
  }
  return acc / samples;
}

// ---------------------------------------------------------------------------
// Expected session rates and the two schedulers
// ---------------------------------------------------------------------------

inline std::uint64_t candidate_key(int m, int i, int n, int j) {
  return (((static_cast<std::uint64_t>(m) * 1024 + i) * 1024 + n) * 1024 + j);
}

// Monte Carlo estimate over the unknown round-2 scalar channel f of
// log2 det(I + K_z^-1 H H^H P/2) with the stored-CSI compound channel.
// The f draws come from a sub-stream keyed by (seed, m, i, n, j), so the
// value is reproducible regardless of evaluation order.
inline double expected_session_rate(int m, int i, int n, int j,
                                    const Round1Buffer& buffer, double P, double N0,
                                    int f_samples, std::uint64_t seed) {
  if (m == n && i == j) {
    throw std::invalid_argument("expected_session_rate: (m,i) must differ from (n,j)");
  }
  const BufferEntry& em = buffer.at(m, i);
  const BufferEntry& en = buffer.at(n, j);
  const Eigen::VectorXcd h_own = em.channels.col(m);
  const Eigen::VectorXcd h_eav = em.channels.col(n);   // h_n[t_m(i)]
  const Eigen::VectorXcd h_rev = en.channels.col(m);   // h_m[t_n(j)]
  const double denom = h_eav.squaredNorm() + h_rev.squaredNorm();
  if (denom <= 0.0) {
    // degenerate zero-norm eavesdropper channels: round-1-only rate
    return em.own_rate;
  }
  Rng rng = Rng::substream(seed, candidate_key(m, i, n, j));
  const double p2 = P / 2.0;
  const double g11 = h_own.squaredNorm();
  const std::complex<double> g12 = h_own.adjoint() * h_eav;
  const double g22 = h_eav.squaredNorm();
  const double w1 = p2 / N0;
  double acc = 0.0;
  for (int s = 0; s < f_samples; ++s) {
    const std::complex<double> f = rng.cgauss();
    // H rows: h_own^H and sqrt(scale2) * h_eav^H; K_z = diag(N0, N0(1+scale2))
    const double scale2 = 2.0 * std::norm(f) / denom;
    const double w2 = p2 * scale2 / (N0 * (1.0 + scale2));
    // det(I + diag(w1,w2)^(1/2)-whitened Gram)
    const double det = (1.0 + w1 * g11) * (1.0 + w2 * g22) - w1 * w2 * std::norm(g12);
    acc += std::log2(det);
  }
  return acc / f_samples;
}

struct VirtualQueueState {
  std::vector<double> backlog;       // Q_m >= 0
  double arrival_rate = 0.0;         // a_m, common to all users
  std::vector<double> served_total;  // running sum of served rates
  long frames = 0;
};

inline VirtualQueueState make_virtual_queues(int L, double arrival_rate) {
  VirtualQueueState q;
  q.backlog.assign(L, 0.0);
  q.served_total.assign(L, 0.0);
  q.arrival_rate = arrival_rate;
  return q;
}

// Q_m <- max(Q_m + a_m - served_m, 0)
inline void virtual_queue_update(VirtualQueueState& q,
                                 const std::vector<double>& served) {
  if (served.size() != q.backlog.size()) {
    throw std::invalid_argument("virtual_queue_update: size mismatch");
  }
  for (double s : served) {
    if (s < 0.0) throw std::invalid_argument("virtual_queue_update: negative rate");
  }
  for (std::size_t m = 0; m < q.backlog.size(); ++m) {
    q.backlog[m] = std::max(q.backlog[m] + q.arrival_rate - served[m], 0.0);
    q.served_total[m] += served[m];
  }
  ++q.frames;
}

struct SessionChoice {
  int m = 0, i = 0, n = 1, j = 0;
};

// Max-weight MAT-session scheduler: exhaustive argmax of
// Q_m dR_{m,i}(n,j) + Q_n dR_{n,j}(m,i) over 1<=m<n<=L, ties broken by
// lowest (m,i,n,j).
inline SessionChoice mat_session_schedule(const Round1Buffer& buffer,
                                          const VirtualQueueState& queues, double P,
                                          double N0, int f_samples, double rbar_fresh,
                                          std::uint64_t seed) {
  SessionChoice best;
  double best_w = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < buffer.L; ++m) {
    for (int i = 0; i < buffer.N; ++i) {
      for (int n = m + 1; n < buffer.L; ++n) {
        for (int j = 0; j < buffer.N; ++j) {
          const double rm =
              expected_session_rate(m, i, n, j, buffer, P, N0, f_samples, seed);
          const double rn =
              expected_session_rate(n, j, m, i, buffer, P, N0, f_samples, seed);
          const double dm = rm - buffer.at(m, i).own_rate + rbar_fresh;
          const double dn = rn - buffer.at(n, j).own_rate + rbar_fresh;
          const double w = queues.backlog[m] * dm + queues.backlog[n] * dn;
          if (w > best_w) {
            best_w = w;
            best = {m, i, n, j};
          }
        }
      }
    }
  }
  return best;
}

// Deterministic packet-centric eavesdropper choice for packet (m,i):
// argmax over n != m of log2 det(I + H~ H~^H P/2) with the normalized
// eavesdropper row. No expectation over f.
inline int packet_centric_select(int m, int i, const Round1Buffer& buffer, double P,
                                 double N0) {
  (void)N0;
  if (buffer.L < 2) {
    throw std::invalid_argument("packet_centric_select: needs at least 2 users");
  }
  const BufferEntry& em = buffer.at(m, i);
  const Eigen::VectorXcd h_own = em.channels.col(m);
  int best_n = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  const double p2 = P / 2.0;
  for (int n = 0; n < buffer.L; ++n) {
    if (n == m) continue;
    const Eigen::VectorXcd h_e = em.channels.col(n);
    const double s2 = 1.0 / (1.0 + h_e.squaredNorm());
    const double g11 = h_own.squaredNorm();
    const std::complex<double> g12 = h_own.adjoint() * h_e;
    const double g22 = h_e.squaredNorm();
    const double det =
        (1.0 + p2 * g11) * (1.0 + p2 * s2 * g22) - p2 * p2 * s2 * std::norm(g12);
    const double v = std::log2(det);
    if (v > best_v) {
      best_v = v;
      best_n = n;
    }
  }
  return best_n;
}

// ---------------------------------------------------------------------------
// Pairing queues
// ---------------------------------------------------------------------------

struct SubMessage {
  long packet_id = 0;
  long slot = 0;
  Eigen::VectorXcd eaves_channel;  // stored channel of the eavesdropper
  Eigen::VectorXcd own_channel;    // intended user's channel in that slot
};

// Per user-pair (or user-triple) FIFO lanes of eavesdropped sub-messages.
// A combined message is emitted only when every lane is non-empty.
struct PairingQueue {
  std::vector<int> members;              // 2 or 3 user ids
  std::vector<std::deque<SubMessage>> lanes;

  explicit PairingQueue(std::vector<int> users = {})
      : members(std::move(users)), lanes(members.size()) {}
};

inline void pairing_enqueue(PairingQueue& q, int lane_user, SubMessage msg) {
  for (std::size_t k = 0; k < q.members.size(); ++k) {
    if (q.members[k] == lane_user) {
      q.lanes[k].push_back(std::move(msg));
      return;
    }
  }
  throw std::invalid_argument("pairing_enqueue: user is not a member of this queue");
}

struct CombinedMessage {
  std::vector<SubMessage> parts;  // one per lane, FIFO heads
};

inline std::optional<CombinedMessage> pairing_combine(PairingQueue& q) {
  for (const auto& lane : q.lanes) {
    if (lane.empty()) return std::nullopt;
  }
  CombinedMessage msg;
  for (auto& lane : q.lanes) {
    msg.parts.push_back(lane.front());
    lane.pop_front();
  }
  return msg;
}

// ---------------------------------------------------------------------------
// Frame loop
// ---------------------------------------------------------------------------

enum class SchedMode {
  MatSession,        // 2-user max-weight session scheduler
  PacketCentric2u,   // 2-user eavesdropper-based scheduler
  PacketCentric3u2r, // 3-user 2-round packet-centric
  PacketCentric3u3r, // 3-user 3-round packet-centric
};

struct SchedulerState {
  SchedMode mode = SchedMode::MatSession;
  int L = 2, N = 1, M = 2;
  double P = 1.0, N0 = 1.0;
  int f_samples = 200;
  double rbar_fresh = 0.0;
  Round1Buffer buffer;
  VirtualQueueState queues;
  std::map<std::pair<int, int>, PairingQueue> pair_queues;
  int round_robin = 0;
  long next_packet_id = 0;
  long next_slot = 0;
  // steady-state accounting: completed-packet mutual information over the
  // slots attributable to completed packets
  double total_mi = 0.0;
  long completed_transmissions = 0;
};

inline SchedulerState make_scheduler_state(SchedMode mode, int L, int N, double P,
                                           double N0, int f_samples, Rng& rng) {
  SchedulerState st;
  st.mode = mode;
  st.L = L;
  st.N = N;
  st.M = (mode == SchedMode::PacketCentric3u2r || mode == SchedMode::PacketCentric3u3r)
             ? 3
             : 2;
  st.P = P;
  st.N0 = N0;
  st.f_samples = f_samples;
  if (st.M == 2) {
    st.buffer = make_full_buffer(L, N, 2, P, N0, rng);
    st.next_packet_id = static_cast<long>(L) * N;
    st.next_slot = static_cast<long>(L) * N;
    st.rbar_fresh = expected_fresh_rate(2, P, N0, 20000, rng);
  }
  // positive common arrival rate so backlogs act as fairness weights
  st.queues = make_virtual_queues(L, 1.0);
  return st;
}

namespace detail_sched {

// Realized 2x2 mutual information once a session between stored packets
// (m,i) and (n,j) is completed by a round-2 slot with fresh scalar channels.
inline double realized_session_mi(const Eigen::VectorXcd& h_own,
                                  const Eigen::VectorXcd& h_eav, double denom,
                                  std::complex<double> g, double P, double N0) {
  const double alpha2 = 2.0 / denom;  // alpha^2 = 2 / (|h_eav|^2 + |h_rev|^2)
  const double s2 = alpha2 * std::norm(g);
  const double w1 = (P / 2.0) / N0;
  const double w2 = (P / 2.0) * s2 / (N0 * (1.0 + s2));
  const double g11 = h_own.squaredNorm();
  const std::complex<double> g12 = h_own.adjoint() * h_eav;
  const double g22 = h_eav.squaredNorm();
  const double det = (1.0 + w1 * g11) * (1.0 + w2 * g22) - w1 * w2 * std::norm(g12);
  return std::log2(det);
}

}  // namespace detail_sched

// One scheduling decision: serves packets, refills round-1 buffers and
// updates virtual queues. Returns the per-user realized rates of the frame
// (mutual information normalized by the slots the frame consumes).
inline std::vector<double> run_scheduled_frame(SchedulerState& st, Rng& rng) {
  std::vector<double> served(st.L, 0.0);

  if (st.mode == SchedMode::PacketCentric3u2r || st.mode == SchedMode::PacketCentric3u3r) {
    const bool two_round = (st.mode == SchedMode::PacketCentric3u2r);
    const double sum = two_round
                           ? three_user_2r_sum_rate_sample(st.L, st.P, st.N0, rng, true)
                           : three_user_3r_sum_rate_sample(st.L, st.P, st.N0, rng, true);
    for (int k = 0; k < 3; ++k) {
      served[(st.round_robin + k) % st.L] = sum / 3.0;
    }
    st.round_robin = (st.round_robin + 3) % st.L;
    st.total_mi += sum;
    st.completed_transmissions += 1;
    virtual_queue_update(st.queues, served);
    return served;
  }

  if (st.mode == SchedMode::MatSession) {
    const std::uint64_t seed = rng.next_u64();
    const SessionChoice c = mat_session_schedule(st.buffer, st.queues, st.P, st.N0,
                                                 st.f_samples, st.rbar_fresh, seed);
    const BufferEntry& em = st.buffer.at(c.m, c.i);
    const BufferEntry& en = st.buffer.at(c.n, c.j);
    const double denom = em.channels.col(c.n).squaredNorm() +
                         en.channels.col(c.m).squaredNorm();
    const double mi_m = detail_sched::realized_session_mi(
        em.channels.col(c.m), em.channels.col(c.n), denom, rng.cgauss(), st.P, st.N0);
    const double mi_n = detail_sched::realized_session_mi(
        en.channels.col(c.n), en.channels.col(c.m), denom, rng.cgauss(), st.P, st.N0);
    served[c.m] = mi_m / 3.0;
    served[c.n] = mi_n / 3.0;
    st.total_mi += mi_m + mi_n;
    st.completed_transmissions += 1;
    // round-2 transmission is accompanied by fresh round-1 packets
    st.buffer.entries[c.m][c.i] = draw_buffer_entry(c.m, st.M, st.L, st.next_packet_id++,
                                                    st.next_slot++, st.P, st.N0, rng);
    st.buffer.entries[c.n][c.j] = draw_buffer_entry(c.n, st.M, st.L, st.next_packet_id++,
                                                    st.next_slot++, st.P, st.N0, rng);
    virtual_queue_update(st.queues, served);
    return served;
  }

  // PacketCentric2u: a fresh round-1 transmission for the round-robin user,
  // eavesdropper selection, and (when a pairing queue is ready) one round-2
  // transmission completing two packets.
  const int u = st.round_robin;
  st.round_robin = (st.round_robin + 1) % st.L;
  const int i = 0;  // newest packet slot of the user (fixed-buffer head)
  st.buffer.entries[u][i] = draw_buffer_entry(u, st.M, st.L, st.next_packet_id++,
                                              st.next_slot++, st.P, st.N0, rng);
  const BufferEntry& eu = st.buffer.at(u, i);
  const int n_star = packet_centric_select(u, i, st.buffer, st.P, st.N0);

  const std::pair<int, int> key{std::min(u, n_star), std::max(u, n_star)};
  auto it = st.pair_queues.find(key);
  if (it == st.pair_queues.end()) {
    it = st.pair_queues.emplace(key, PairingQueue({key.first, key.second})).first;
  }
  SubMessage sub;
  sub.packet_id = eu.packet_id;
  sub.slot = eu.slot;
  sub.eaves_channel = eu.channels.col(n_star);
  sub.own_channel = eu.channels.col(u);
  pairing_enqueue(it->second, n_star, std::move(sub));

  if (auto msg = pairing_combine(it->second)) {
    // lanes are ordered by member id; parts[k] is the sub-message
    // eavesdropped by members[k], i.e. a packet of the *other* member
    const SubMessage& by_first = msg->parts[0];   // packet of key.second
    const SubMessage& by_second = msg->parts[1];  // packet of key.first
    const double denom = by_first.eaves_channel.squaredNorm() +
                         by_second.eaves_channel.squaredNorm();
    const double mi_first = detail_sched::realized_session_mi(
        by_second.own_channel, by_second.eaves_channel, denom, rng.cgauss(), st.P,
        st.N0);
    const double mi_second = detail_sched::realized_session_mi(
        by_first.own_channel, by_first.eaves_channel, denom, rng.cgauss(), st.P, st.N0);
    served[key.first] = mi_first / 3.0;
    served[key.second] = mi_second / 3.0;
    st.total_mi += mi_first + mi_second;
    st.completed_transmissions += 1;
  }
  virtual_queue_update(st.queues, served);
  return served;
}

// Long-run sum rate in bits per slot under the steady-state accounting:
// every completed round-2 transmission stands for 3 slots (itself plus the
// two round-1 slots of the packets it completes).
inline double scheduled_sum_rate(const SchedulerState& st) {
  if (st.mode == SchedMode::PacketCentric3u2r || st.mode == SchedMode::PacketCentric3u3r) {
    return st.total_mi / static_cast<double>(st.completed_transmissions);
  }
  return st.total_mi / (3.0 * static_cast<double>(st.completed_transmissions));
}

}  // namespace mumimo
