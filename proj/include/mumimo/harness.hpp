#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mumimo/lzfb.hpp"
#include "mumimo/mat.hpp"
#include "mumimo/mat3.hpp"
#include "mumimo/sched.hpp"

namespace mumimo {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment = "fig3_mat_vs_lzfb";
  std::vector<double> snr_grid_db = {0, 5, 10, 15, 20, 25, 30, 35, 40};
  std::vector<double> rho_list = {1.0, 0.99, 0.95};
  double beta1 = 2.0;
  double beta_f = 2.0;
  double p1_over_p = 1.0;
  int L = 20;
  int N = 1;
  int K = 2;
  int R = 2;
  long samples = 5000;
  int f_samples = 200;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (experiment != "fig3_mat_vs_lzfb" && experiment != "fig2_sched_parity" &&
        experiment != "fig4_sched_modes" && experiment != "custom") {
      fail("experiment: unknown id '" + experiment + "'");
    }
    if (snr_grid_db.empty()) fail("snr_grid_db: must be non-empty");
    if (rho_list.empty()) fail("rho_list: must be non-empty");
    for (double r : rho_list) {
      if (r < 0.0 || r > 1.0) fail("rho_list: values must lie in [0,1]");
    }
    if (beta1 < 1.0) fail("beta1: must be >= 1");
    if (beta_f <= 0.0) fail("beta_f: must be > 0");
    if (p1_over_p <= 0.0) fail("p1_over_p: must be > 0");
    if (L < 2) fail("L: must be >= 2");
    if (N < 1) fail("N: must be >= 1");
    if (K < 2 || K > 3) fail("K: must be 2 or 3");
    if (R < 2 || R > K) fail("R: must lie in [2,K]");
    if (samples < 1) fail("samples: must be >= 1");
    if (f_samples < 1) fail("f_samples: must be >= 1");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return nlohmann::json{{"experiment", c.experiment},
                        {"snr_grid_db", c.snr_grid_db},
                        {"rho_list", c.rho_list},
                        {"beta1", c.beta1},
                        {"beta_f", c.beta_f},
                        {"p1_over_p", c.p1_over_p},
                        {"L", c.L},
                        {"N", c.N},
                        {"K", c.K},
                        {"R", c.R},
                        {"samples", c.samples},
                        {"f_samples", c.f_samples},
                        {"seed", c.seed}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "experiment", "snr_grid_db", "rho_list", "beta1", "beta_f", "p1_over_p",
      "L",          "N",           "K",        "R",     "samples", "f_samples",
      "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("config: unknown key '" + it.key() + "'");
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
    if (j.contains("snr_grid_db"))
      c.snr_grid_db = j.at("snr_grid_db").get<std::vector<double>>();
    if (j.contains("rho_list")) c.rho_list = j.at("rho_list").get<std::vector<double>>();
    if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta_f")) c.beta_f = j.at("beta_f").get<double>();
    if (j.contains("p1_over_p")) c.p1_over_p = j.at("p1_over_p").get<double>();
    if (j.contains("L")) c.L = j.at("L").get<int>();
    if (j.contains("N")) c.N = j.at("N").get<int>();
    if (j.contains("K")) c.K = j.at("K").get<int>();
    if (j.contains("R")) c.R = j.at("R").get<int>();
    if (j.contains("samples")) c.samples = j.at("samples").get<long>();
    if (j.contains("f_samples")) c.f_samples = j.at("f_samples").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad field type: ") + e.what());
  }
  c.validate();
  return c;
}

inline std::string config_fingerprint(const ExperimentConfig& c) {
  const std::string dump = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct CurvePoint {
  double snr_db = 0.0;
  double mean_rate = 0.0;
  double ci95 = 0.0;  // NaN when unavailable (single sample)
  long samples = 0;
};

struct RateCurve {
  std::string scheme;
  double rho = 1.0;
  std::vector<CurvePoint> points;  // sorted by SNR
  std::string fingerprint;
};

// Empirical pre-log slope between two grid SNRs.
inline double measure_dof(const RateCurve& curve, double snr_lo_db, double snr_hi_db) {
  if (!(snr_hi_db > snr_lo_db)) {
    throw std::invalid_argument("measure_dof: need hi > lo");
  }
  auto lookup = [&](double snr) -> double {
    for (const auto& p : curve.points) {
      if (std::abs(p.snr_db - snr) < 1e-9) return p.mean_rate;
    }
    throw std::invalid_argument("measure_dof: SNR not on curve grid");
  };
  const double dlogp = (snr_hi_db - snr_lo_db) / 10.0 * std::log2(10.0);
  return (lookup(snr_hi_db) - lookup(snr_lo_db)) / dlogp;
}

// ---------------------------------------------------------------------------
// Monte Carlo machinery
// ---------------------------------------------------------------------------

namespace detail_harness {

struct Stats {
  double mean = 0.0;
  double ci95 = 0.0;
  long n = 0;
};

inline Stats reduce(const std::vector<double>& v) {
  Stats s;
  s.n = static_cast<long>(v.size());
  double acc = 0.0;
  for (double x : v) acc += x;
  s.mean = acc / s.n;
  if (s.n < 2) {
    s.ci95 = std::nan("");
    return s;
  }
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  const double sd = std::sqrt(sq / (s.n - 1));
  s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

// Evaluates fn(sample_index, rng) for every sample. Sub-stream seeding makes
// the result independent of the worker count and of scheduling order.
inline Stats run_samples(long n, int workers, std::uint64_t seed, std::uint64_t stream_base,
                         const std::function<double(long, Rng&)>& fn) {
  std::vector<double> out(static_cast<std::size_t>(n));
  auto body = [&](long lo, long hi) {
    for (long s = lo; s < hi; ++s) {
      Rng rng = Rng::substream(seed, stream_base + static_cast<std::uint64_t>(s));
      out[static_cast<std::size_t>(s)] = fn(s, rng);
    }
  };
  if (workers <= 1 || n < 64) {
    body(0, n);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const long lo = w * chunk;
      const long hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(body, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  return reduce(out);
}

inline std::uint64_t point_stream(std::size_t curve_idx, std::size_t point_idx) {
  return mix64((static_cast<std::uint64_t>(curve_idx) << 32) | point_idx) << 20;
}

}  // namespace detail_harness

// ---------------------------------------------------------------------------
// Scheme evaluators (one Monte Carlo draw each)
// ---------------------------------------------------------------------------

namespace schemes {

inline TrainingConfig training_config(const ExperimentConfig& c, double P, int M) {
  TrainingConfig t;
  t.beta1 = c.beta1;
  t.beta_f = c.beta_f;
  t.P = P;
  t.P1 = c.p1_over_p * P;
  t.N0 = 1.0;
  t.M = M;
  return t;
}

// Unscheduled 2-user MAT with the per-session power normalization used by
// the schedulers (random pairing, no selection).
inline double unscheduled_mat2_sample(double P, double N0, Rng& rng) {
  auto draw2v = [&rng]() {
    return Eigen::Vector2cd{rng.cgauss(), rng.cgauss()};
  };
  const Eigen::Vector2cd h1_own = draw2v(), h2_at1 = draw2v();
  const Eigen::Vector2cd h2_own = draw2v(), h1_at2 = draw2v();
  const double denom = h2_at1.squaredNorm() + h1_at2.squaredNorm();
  const double mi1 = detail_sched::realized_session_mi(h1_own, h2_at1, denom,
                                                       rng.cgauss(), P, N0);
  const double mi2 = detail_sched::realized_session_mi(h2_own, h1_at2, denom,
                                                       rng.cgauss(), P, N0);
  return (mi1 + mi2) / 3.0;
}

}  // namespace schemes

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace detail_harness {

inline RateCurve frame_loop_curve(const ExperimentConfig& cfg, SchedMode mode,
                                  const std::string& label, std::size_t curve_idx) {
  RateCurve curve;
  curve.scheme = label;
  curve.rho = 0.0;  // schedulers use perfect outdated CSIT; rho is immaterial
  curve.fingerprint = config_fingerprint(cfg);
  const long completions_target = cfg.samples;
  for (std::size_t pi = 0; pi < cfg.snr_grid_db.size(); ++pi) {
    const double P = std::pow(10.0, cfg.snr_grid_db[pi] / 10.0);
    Rng rng = Rng::substream(cfg.seed, point_stream(curve_idx, pi));
    SchedulerState st = make_scheduler_state(mode, cfg.L, cfg.N, P, 1.0,
                                             cfg.f_samples, rng);
    const long warmup = std::max<long>(20, completions_target / 10);
    std::vector<double> per_completion;
    per_completion.reserve(completions_target);
    long frames = 0;
    const long max_frames = 40 * (completions_target + warmup) + 1000;
    while (static_cast<long>(per_completion.size()) < completions_target + warmup &&
           frames < max_frames) {
      const long before = st.completed_transmissions;
      const double prev_mi = st.total_mi;
      run_scheduled_frame(st, rng);
      ++frames;
      if (st.completed_transmissions > before) {
        const double mi = st.total_mi - prev_mi;
        per_completion.push_back(
            (mode == SchedMode::PacketCentric3u2r || mode == SchedMode::PacketCentric3u3r)
                ? mi
                : mi / 3.0);
      }
    }
    per_completion.erase(per_completion.begin(),
                         per_completion.begin() +
                             std::min<std::size_t>(warmup, per_completion.size()));
    Stats s = reduce(per_completion);
    curve.points.push_back({cfg.snr_grid_db[pi], s.mean, s.ci95, s.n});
  }
  return curve;
}

inline RateCurve sample_curve(const ExperimentConfig& cfg, const std::string& label,
                              double rho, std::size_t curve_idx, int workers,
                              const std::function<double(double P, Rng&)>& sample) {
  RateCurve curve;
  curve.scheme = label;
  curve.rho = rho;
  curve.fingerprint = config_fingerprint(cfg);
  for (std::size_t pi = 0; pi < cfg.snr_grid_db.size(); ++pi) {
    const double P = std::pow(10.0, cfg.snr_grid_db[pi] / 10.0);
    Stats s = run_samples(cfg.samples, workers, cfg.seed, point_stream(curve_idx, pi),
                          [&](long, Rng& rng) { return sample(P, rng); });
    curve.points.push_back({cfg.snr_grid_db[pi], s.mean, s.ci95, s.n});
  }
  return curve;
}

}  // namespace detail_harness

inline std::vector<RateCurve> run_experiment(const ExperimentConfig& cfg,
                                             int workers = 1) {
  cfg.validate();
  using detail_harness::frame_loop_curve;
  using detail_harness::sample_curve;
  std::vector<RateCurve> curves;
  std::size_t ci = 0;

  const bool fig3 = cfg.experiment == "fig3_mat_vs_lzfb" || cfg.experiment == "custom";
  const bool fig2 = cfg.experiment == "fig2_sched_parity" || cfg.experiment == "custom";
  const bool fig4 = cfg.experiment == "fig4_sched_modes" || cfg.experiment == "custom";

  if (fig3) {
    for (double rho : cfg.rho_list) {
      curves.push_back(sample_curve(cfg, "mat_perfect", rho, ci++, workers,
                                    [rho](double P, Rng& rng) {
                                      return mat_perfect_sum_rate(
                                          draw_session2(rho, rng), P, 1.0);
                                    }));
      curves.push_back(sample_curve(
          cfg, "mat_trained", rho, ci++, workers, [rho, &cfg](double P, Rng& rng) {
            TrainingConfig t = schemes::training_config(cfg, P, 2);
            return mat_trained_sum_rate(draw_trained_session(t, rho, rng), P);
          }));
      curves.push_back(sample_curve(
          cfg, "lzfb_trained", rho, ci++, workers, [rho, &cfg](double P, Rng& rng) {
            TrainingConfig t = schemes::training_config(cfg, P, 2);
            return lzfb_trained_sum_rate(t, rho, rng);
          }));
    }
  }
  if (fig2) {
    curves.push_back(frame_loop_curve(cfg, SchedMode::MatSession, "sched_mat_session", ci++));
    curves.push_back(
        frame_loop_curve(cfg, SchedMode::PacketCentric2u, "sched_packet_centric", ci++));
  }
  if (fig4) {
    curves.push_back(
        frame_loop_curve(cfg, SchedMode::PacketCentric2u, "sched_pc_2u", ci++));
    const int L = cfg.L;
    curves.push_back(sample_curve(cfg, "sched_pc_3u_2r", 0.0, ci++, workers,
                                  [L](double P, Rng& rng) {
                                    return three_user_2r_sum_rate_sample(L, P, 1.0, rng,
                                                                         true);
                                  }));
    curves.push_back(sample_curve(cfg, "sched_pc_3u_3r", 0.0, ci++, workers,
                                  [L](double P, Rng& rng) {
                                    return three_user_3r_sum_rate_sample(L, P, 1.0, rng,
                                                                         true);
                                  }));
    curves.push_back(sample_curve(cfg, "unsched_mat2", 0.0, ci++, workers,
                                  [](double P, Rng& rng) {
                                    return schemes::unscheduled_mat2_sample(P, 1.0, rng);
                                  }));
    curves.push_back(sample_curve(cfg, "unsched_3u_2r", 0.0, ci++, workers,
                                  [L](double P, Rng& rng) {
                                    return three_user_2r_sum_rate_sample(L, P, 1.0, rng,
                                                                         false);
                                  }));
    curves.push_back(sample_curve(cfg, "unsched_3u_3r", 0.0, ci++, workers,
                                  [L](double P, Rng& rng) {
                                    return three_user_3r_sum_rate_sample(L, P, 1.0, rng,
                                                                         false);
                                  }));
  }
  return curves;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string curves_to_csv(const std::vector<RateCurve>& curves) {
  std::ostringstream os;
  os << "scheme,rho,snr_db,mean_rate,ci95,samples\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      os << c.scheme << ',' << format_double(c.rho) << ',' << format_double(p.snr_db)
         << ',' << format_double(p.mean_rate) << ',' << format_double(p.ci95) << ','
         << p.samples << '\n';
    }
  }
  return os.str();
}

inline void write_results(const std::string& out_dir, const ExperimentConfig& cfg,
                          const std::vector<RateCurve>& curves) {
  const std::string base = out_dir + "/" + cfg.experiment;
  {
    std::ofstream f(base + ".csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + base + ".csv");
    f << curves_to_csv(curves);
  }
  {
    nlohmann::json j;
    j["config"] = to_json(cfg);
    j["fingerprint"] = config_fingerprint(cfg);
    std::ofstream f(base + ".json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + base + ".json");
    f << j.dump(2) << '\n';
  }
}

// Parses curves back from CSV (for the dof subcommand).
inline std::vector<RateCurve> curves_from_csv(std::istream& in) {
  std::vector<RateCurve> curves;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty curve file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string scheme, tok;
    std::getline(ls, scheme, ',');
    CurvePoint p;
    double rho;
    std::getline(ls, tok, ',');
    rho = std::stod(tok);
    std::getline(ls, tok, ',');
    p.snr_db = std::stod(tok);
    std::getline(ls, tok, ',');
    p.mean_rate = std::stod(tok);
    std::getline(ls, tok, ',');
    p.ci95 = std::stod(tok);
    std::getline(ls, tok, ',');
    p.samples = std::stol(tok);
    auto it = std::find_if(curves.begin(), curves.end(), [&](const RateCurve& c) {
      return c.scheme == scheme && std::abs(c.rho - rho) < 1e-12;
    });
    if (it == curves.end()) {
      curves.push_back({scheme, rho, {}, ""});
      it = curves.end() - 1;
    }
    it->points.push_back(p);
  }
  return curves;
}

}  // namespace mumimo
