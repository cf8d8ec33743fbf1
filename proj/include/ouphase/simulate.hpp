#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ouphase/core_model.hpp"
#include "ouphase/filter_design.hpp"

// Discrete-time Monte Carlo of the closed-loop plant-plus-filter system,
// Euler-Maruyama with per-sample measurement-noise variance 1/(4|a|^2 dt).
// Noise is derived counter-style from (seed, trajectory, step), so results
// are bit-identical across reruns and worker counts.

namespace ouphase {

enum class MeasurementMode { Linearized, Sine };

struct SimConfig {
  double dt = 2e-8;                  // s
  long long n_steps = 5'000'000;     // per trajectory
  int n_traj = 8;
  double burn_in_fraction = 0.2;
  std::uint64_t seed = 0;
  MeasurementMode mode = MeasurementMode::Linearized;
  std::vector<double> tau_grid;  // optional lags for the empirical two-time
};

struct EmpiricalTwoTime {
  std::vector<double> tau;  // snapped to multiples of dt
  std::vector<double> values;
  std::vector<double> std_errors;
};

struct SimResult {
  double mse = 0.0;
  double std_error = 0.0;  // batch-means, 32 batches per trajectory
  std::optional<EmpiricalTwoTime> two_time;
  long long n_effective = 0;  // error-correlation lengths observed
};

namespace simdetail {

constexpr int kBatches = 32;

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double u01(std::uint64_t h) {
  return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;  // in (0, 1]
}

struct NormalPair {
  double z1, z2;
};

// Two standard normals per (seed, trajectory, step) counter via Box-Muller.
inline NormalPair normal_pair(std::uint64_t seed, std::uint64_t traj,
                              std::uint64_t step) {
  const std::uint64_t k1 =
      mix64(mix64(mix64(seed) ^ (traj + 0x632be59bd9b4e019ull)) ^
            (step + 0x9e3779b97f4a7c15ull));
  const std::uint64_t k2 = mix64(k1 ^ 0xd6e8feb86659fd93ull);
  const double r = std::sqrt(-2.0 * std::log(u01(k1)));
  const double th = 6.283185307179586476925287 * u01(k2);
  return {r * std::cos(th), r * std::sin(th)};
}

struct LagAccum {
  // one slot per (lag, batch)
  std::vector<double> sums;
  std::vector<long long> counts;
  int n_lags = 0;

  void init(int lags) {
    n_lags = lags;
    sums.assign(static_cast<std::size_t>(lags) * kBatches, 0.0);
    counts.assign(static_cast<std::size_t>(lags) * kBatches, 0);
  }
  double& sum(int lag, int batch) {
    return sums[static_cast<std::size_t>(lag) * kBatches + batch];
  }
  long long& count(int lag, int batch) {
    return counts[static_cast<std::size_t>(lag) * kBatches + batch];
  }
};

}  // namespace simdetail

inline void validate_sim_config(const FilterDesign& f, const SimConfig& cfg) {
  auto fail = [](const std::string& msg) {
    throw ConfigInvariantViolated("SimConfig: " + msg);
  };
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) fail("dt must be positive");
  if (cfg.n_steps < 10000) fail("n_steps must be >= 1e4");
  if (cfg.n_traj < 1) fail("n_traj must be >= 1");
  if (!(cfg.burn_in_fraction > 0.0 && cfg.burn_in_fraction < 1.0)) {
    fail("burn_in_fraction must lie in (0,1)");
  }
  if (f.corner * cfg.dt > 0.02 * (1.0 + 1e-12)) {
    fail("dt * corner = " + std::to_string(f.corner * cfg.dt) +
         " exceeds 0.02");
  }
  const double burn_steps = cfg.burn_in_fraction *
                            static_cast<double>(cfg.n_steps);
  if (burn_steps * f.corner * cfg.dt < 10.0) {
    fail("burn-in shorter than 10 filter time constants");
  }
  for (double tau : cfg.tau_grid) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) fail("tau grid must be >= 0");
  }
}

/// Euler-Maruyama closed loop:
///   phi_{k+1}     = phi_k (1 - lambda_u dt) + sqrt(kappa dt) xi_k
///   theta_k       = phihat_k + m(phi_k - phihat_k) + n_k / (2|a| sqrt(dt))
///   phihat_{k+1}  = phihat_k + dt (pole_A + gain_B) phihat_k
///                   + gain_B (theta_k - phihat_k) dt
/// with m(x) = x (Linearized) or sin x (Sine). phi_0 is drawn from the
/// stationary prior N(0, kappa/(2 lambda_u)); phihat_0 = 0; feedback delay is
/// zero. The MSE averages (phi - phihat)^2 after burn-in over a window
/// truncated to 32 equal batches per trajectory.
inline SimResult run_closed_loop(const PlantParams& p, const Uncertainty& u,
                                 const FilterDesign& f, const SimConfig& cfg,
                                 int workers = 0) {
  validate_sim_config(f, cfg);
  using namespace simdetail;

  const double lu = lambda_u(p, u);
  const double al = p.alpha_eff();
  const double dt = cfg.dt;
  const double sq_kdt = std::sqrt(p.kappa * dt);
  const double meas_scale = 1.0 / (2.0 * al * std::sqrt(dt));
  const double lam_term = f.pole_A + f.gain_B;  // filter decay, negative
  const bool sine = cfg.mode == MeasurementMode::Sine;

  const long long burn =
      static_cast<long long>(cfg.burn_in_fraction * cfg.n_steps);
  long long usable = cfg.n_steps - burn;
  const long long batch_len = usable / kBatches;
  if (batch_len < 1) {
    throw ConfigInvariantViolated("SimConfig: post-burn-in window too short");
  }
  usable = batch_len * kBatches;

  // lag 0 is always present; requested lags snap to multiples of dt
  std::vector<long long> lags{0};
  std::vector<double> snapped{0.0};
  for (double tau : cfg.tau_grid) {
    const long long l = std::llround(tau / dt);
    lags.push_back(l);
    snapped.push_back(static_cast<double>(l) * dt);
  }
  long long max_lag = 0;
  for (long long l : lags) max_lag = std::max(max_lag, l);
  if (max_lag >= usable) {
    throw ConfigInvariantViolated("SimConfig: tau grid exceeds usable window");
  }
  const int n_lags = static_cast<int>(lags.size());

  const std::size_t ring_size = static_cast<std::size_t>(max_lag) + 1;
  std::vector<LagAccum> acc(cfg.n_traj);

  auto run_traj = [&](int traj) {
    LagAccum& a = acc[traj];
    a.init(n_lags);
    std::vector<double> ring(ring_size, 0.0);

    const double prior_sd = std::sqrt(p.kappa / (2.0 * lu));
    double phi = prior_sd *
                 normal_pair(cfg.seed, static_cast<std::uint64_t>(traj), ~0ull)
                     .z1;
    double phihat = 0.0;
    const long long total = burn + usable;
    for (long long k = 0; k < total; ++k) {
      const double eps = phi - phihat;
      if (k >= burn) {
        const long long idx = k - burn;
        const int b = static_cast<int>(idx / batch_len);
        ring[static_cast<std::size_t>(k % ring_size)] = eps;
        for (int li = 0; li < n_lags; ++li) {
          const long long l = lags[li];
          if (idx >= l) {
            const double prev = ring[static_cast<std::size_t>((k - l) % ring_size)];
            a.sum(li, b) += eps * prev;
            a.count(li, b) += 1;
          }
        }
      }
      const auto z = normal_pair(cfg.seed, static_cast<std::uint64_t>(traj),
                                 static_cast<std::uint64_t>(k));
      const double gap = sine ? std::sin(eps) : eps;
      const double theta = phihat + gap + z.z2 * meas_scale;
      phi = phi * (1.0 - lu * dt) + sq_kdt * z.z1;
      phihat = phihat + dt * (lam_term * phihat) +
               f.gain_B * (theta - phihat) * dt;
      if ((k & 0xfff) == 0xfff) {
        if (!(std::abs(phihat) <= 1e6)) {
          throw NumericalBlowup(
              "run_closed_loop: |phihat| exceeded 1e6 (dt too large?)");
        }
      }
    }
    if (!std::isfinite(phihat) || !(std::abs(phihat) <= 1e6)) {
      throw NumericalBlowup("run_closed_loop: estimate diverged");
    }
  };

  int nw = workers > 0 ? workers
                       : static_cast<int>(std::thread::hardware_concurrency());
  nw = std::max(1, std::min(nw, cfg.n_traj));
  if (nw == 1) {
    for (int t = 0; t < cfg.n_traj; ++t) run_traj(t);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const int t = next.fetch_add(1);
          if (t >= cfg.n_traj) return;
          try {
            run_traj(t);
          } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Combine in trajectory order; two-level (batch, then trajectory) sums keep
  // the reduction order-independent.
  auto lag_stats = [&](int li, double& value, double& se) {
    double total_sum = 0.0;
    long long total_cnt = 0;
    for (int t = 0; t < cfg.n_traj; ++t) {
      for (int b = 0; b < kBatches; ++b) {
        total_sum += acc[t].sum(li, b);
        total_cnt += acc[t].count(li, b);
      }
    }
    value = total_sum / static_cast<double>(total_cnt);
    double ss = 0.0;
    long long nb = 0;
    for (int t = 0; t < cfg.n_traj; ++t) {
      for (int b = 0; b < kBatches; ++b) {
        if (acc[t].count(li, b) == 0) continue;
        const double m =
            acc[t].sum(li, b) / static_cast<double>(acc[t].count(li, b));
        ss += (m - value) * (m - value);
        ++nb;
      }
    }
    se = nb > 1 ? std::sqrt(ss / (static_cast<double>(nb - 1) *
                                  static_cast<double>(nb)))
                : 0.0;
  };

  SimResult out;
  lag_stats(0, out.mse, out.std_error);
  out.n_effective = static_cast<long long>(
      static_cast<double>(cfg.n_traj) * static_cast<double>(usable) * dt *
      f.corner);
  if (!cfg.tau_grid.empty()) {
    EmpiricalTwoTime tt;
    for (int li = 1; li < n_lags; ++li) {
      double v, se;
      lag_stats(li, v, se);
      tt.tau.push_back(snapped[li]);
      tt.values.push_back(v);
      tt.std_errors.push_back(se);
    }
    out.two_time = std::move(tt);
  }
  return out;
}

/// Lag-product averages of a recorded error trace. tau values snap to
/// multiples of dt. Requires at least 100 windows of the largest lag.
inline EmpiricalTwoTime empirical_two_time(const std::vector<double>& errors,
                                           const std::vector<double>& tau_grid,
                                           double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("empirical_two_time: dt <= 0");
  const long long n = static_cast<long long>(errors.size());
  std::vector<long long> lags;
  long long max_lag = 0;
  for (double tau : tau_grid) {
    if (!(tau >= 0.0)) {
      throw std::invalid_argument("empirical_two_time: tau must be >= 0");
    }
    const long long l = std::llround(tau / dt);
    lags.push_back(l);
    max_lag = std::max(max_lag, l);
  }
  const long long spans = max_lag > 0 ? (n - max_lag) / max_lag : n;
  if (n <= max_lag || spans < 100) {
    throw InsufficientSamples(
        "empirical_two_time: fewer than 100 correlation lengths at the "
        "largest tau");
  }
  EmpiricalTwoTime out;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const long long l = lags[i];
    const long long m = n - l;
    const long long batch = std::max<long long>(m / simdetail::kBatches, 1);
    double total = 0.0;
    std::vector<double> batch_means;
    double bsum = 0.0;
    long long bcnt = 0;
    for (long long k = l; k < n; ++k) {
      const double prod = errors[static_cast<std::size_t>(k)] *
                          errors[static_cast<std::size_t>(k - l)];
      total += prod;
      bsum += prod;
      if (++bcnt == batch) {
        batch_means.push_back(bsum / static_cast<double>(bcnt));
        bsum = 0.0;
        bcnt = 0;
      }
    }
    const double value = total / static_cast<double>(m);
    double ss = 0.0;
    for (double bm : batch_means) ss += (bm - value) * (bm - value);
    const double nb = static_cast<double>(batch_means.size());
    out.tau.push_back(static_cast<double>(l) * dt);
    out.values.push_back(value);
    out.std_errors.push_back(nb > 1 ? std::sqrt(ss / ((nb - 1) * nb)) : 0.0);
  }
  return out;
}

struct BiasProbe {
  double mse_linear = 0.0;
  double mse_sine = 0.0;
  double relative_gap = 0.0;
};

/// Runs both measurement modes on identical noise streams and reports the
/// relative MSE gap of the sine nonlinearity.
inline BiasProbe linearization_bias_probe(const PlantParams& p,
                                          const Uncertainty& u,
                                          const FilterDesign& f,
                                          const SimConfig& cfg,
                                          int workers = 0) {
  SimConfig lin = cfg;
  lin.mode = MeasurementMode::Linearized;
  lin.tau_grid.clear();
  SimConfig sin_cfg = cfg;
  sin_cfg.mode = MeasurementMode::Sine;
  sin_cfg.tau_grid.clear();
  const SimResult a = run_closed_loop(p, u, f, lin, workers);
  const SimResult b = run_closed_loop(p, u, f, sin_cfg, workers);
  return {a.mse, b.mse, std::abs(b.mse - a.mse) / a.mse};
}

}  // namespace ouphase
