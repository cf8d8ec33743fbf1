// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line with its measured margin. Tolerances are fixed here, in
// code.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "ouphase/ouphase.hpp"

#include "oracles.hpp"

using namespace ouphase;

namespace {

const PlantParams kDefaults;

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("[acceptance] %s: %s (%s)\n", id, ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

struct Draw {
  PlantParams p;
  double mu;
  double delta;
};

std::vector<Draw> parameter_draws(int n, std::uint64_t seed) {
  oracle::Rng rng(seed);
  std::vector<Draw> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Draw d;
    d.p.lambda = rng.log_uniform(1e2, 1e8);
    d.p.kappa = rng.log_uniform(1e2, 1e8);
    d.p.alpha2 = rng.log_uniform(1e2, 1e8);
    d.mu = std::max(rng.uniform(0.0, 0.99), 1e-12);
    d.delta = rng.uniform(-1.0, 1.0);
    out.push_back(d);
  }
  return out;
}

bool bits_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

TEST_CASE("C1 closed-form designs vs generic Riccati solver") {
  Stopwatch sw;
  const auto draws = parameter_draws(1000, 20240901);
  double worst = 0.0;
  using linsolve::Matrix;
  for (const Draw& d : draws) {
    const double al = d.p.alpha_eff();
    // Kalman
    const Matrix pk = linsolve::solve_care(
        Matrix::Constant(1, 1, -d.p.lambda), Matrix::Constant(1, 1, 1.0),
        Matrix::Constant(1, 1, std::sqrt(d.p.kappa)),
        Matrix::Constant(1, 1, 1.0 / (2.0 * al)));
    worst = std::max(worst, std::abs(pk(0, 0) - design_kalman(d.p).error_value) /
                                design_kalman(d.p).error_value);
    // Robust at the optimising epsilon
    const FilterDesign fr = design_robust(d.p, d.mu);
    const auto gc = linsolve::solve_gc_riccati_pair(
        make_scalar_gc_problem(d.p, d.mu, fr.epsilon_opt));
    worst = std::max(worst, std::abs(gc.q_plus(0, 0) - fr.error_value) /
                                fr.error_value);
    // SQL (dual homodyne: twice the measurement noise power)
    const double lu = lambda_u(d.p, {d.mu, d.delta});
    Matrix dr2(1, 2);
    dr2 << 1.0 / (2.0 * al), 1.0 / (2.0 * al);
    const Matrix ps = linsolve::solve_care(
        Matrix::Constant(1, 1, -lu), Matrix::Constant(1, 1, 1.0),
        Matrix::Constant(1, 1, std::sqrt(d.p.kappa)), dr2);
    const double sql = design_sql(d.p, {d.mu, d.delta}).error_value;
    worst = std::max(worst, std::abs(ps(0, 0) - sql) / sql);
  }
  const double secs = sw.seconds();
  const bool ok = worst <= 1e-10 && secs < 5.0;
  report("C1 closed-form cross-validation (1000 draws)", ok,
         "max rel err " + format_g17(worst) + ", " +
             std::to_string(secs) + " s");
  CHECK(worst <= 1e-10);
  CHECK(secs < 5.0);
}

TEST_CASE("C2 robust design reduces to Kalman at mu = 0") {
  const auto draws = parameter_draws(200, 77);
  double worst = 0.0;
  for (const Draw& d : draws) {
    const FilterDesign k = design_kalman(d.p);
    const FilterDesign r = design_robust(d.p, 0.0);
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
    };
    worst = std::max({worst, rel(k.gain_B, r.gain_B), rel(k.pole_A, r.pole_A),
                      rel(k.corner, r.corner),
                      rel(k.error_value, r.error_value),
                      std::abs(r.epsilon_opt)});
  }
  const bool ok = worst <= 1e-12;
  report("C2 reduction identity at mu = 0", ok,
         "max field deviation " + format_g17(worst));
  CHECK(ok);
}

TEST_CASE("C3 worst-case orderings on the same randomized draws") {
  const auto draws = parameter_draws(1000, 20240901);
  double min_a = 1e300, min_b = 1e300, min_c = 1e300;
  for (const Draw& d : draws) {
    const OrderingReport r = check_orderings(d.p, d.mu);
    min_a = std::min(min_a, r.margin_robust_vs_kalman);
    min_b = std::min(min_b, r.margin_robust_vs_sql);
    min_c = std::min(min_c, r.margin_appendix_c);
  }
  const bool ok = min_a >= -1e-12 && min_b >= -1e-12 && min_c >= -1e-12;
  report("C3 worst-case orderings (1000 draws)", ok,
         "min margins " + format_g17(min_a) + " / " + format_g17(min_b) +
             " / " + format_g17(min_c));
  CHECK(min_a >= -1e-12);
  CHECK(min_b >= -1e-12);
  CHECK(min_c >= -1e-12);
}

TEST_CASE("C4 figure-1 regeneration at mu = 0.5") {
  const double mu = 0.5;
  SweepRequest req;
  req.axis = SweepAxis::Delta;
  req.mu = mu;
  for (int i = 0; i < 201; ++i) req.grid.push_back(-1.0 + 2.0 * i / 200.0);
  const DataTable t = sweep(kDefaults, req);

  bool ok = true;
  std::string why;
  const auto& worst_row = t.rows.front();   // delta = -1
  const auto& center_row = t.rows[100];     // delta = 0
  const double qp = design_robust(kDefaults, mu).error_value;
  if (!(center_row[1] < center_row[2])) ok = false, why += "kalman !< robust at delta 0; ";
  if (!(worst_row[2] < worst_row[1])) ok = false, why += "robust !< kalman at delta -1; ";
  if (std::abs(worst_row[2] - qp) > 1e-10 * qp) {
    ok = false;
    why += "robust(-1) != Q+; ";
  }
  // monotone decreasing curves (columns 1,2,4,5; Q+ is a constant line)
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    for (int c : {1, 2, 4, 5}) {
      if (!(t.rows[i][c] < t.rows[i - 1][c])) {
        ok = false;
        why += "column " + std::to_string(c) + " not decreasing; ";
        break;
      }
    }
  }
  // spot values against the independent Lyapunov-route oracle
  const Uncertainty worst_u{mu, -1.0};
  const double lyap_k =
      mse_uncertain(kDefaults, worst_u, design_kalman(kDefaults)).sigma2;
  const double lyap_r =
      mse_uncertain(kDefaults, worst_u, design_robust(kDefaults, mu)).sigma2;
  const double spot_k = 6.5306922792710359e-2;
  if (std::abs(worst_row[1] - lyap_k) > 1e-10 * lyap_k) ok = false, why += "sigma_K(-1) vs Lyapunov; ";
  if (std::abs(worst_row[1] - spot_k) > 1e-10 * spot_k) ok = false, why += "sigma_K(-1) spot value; ";
  if (std::abs(qp - lyap_r) > 1e-10 * qp) ok = false, why += "Q+ vs Lyapunov; ";
  if (std::abs(qp - 6.1938711666595954e-2) > 1e-10 * qp) ok = false, why += "Q+ spot value; ";
  report("C4 figure-1 regeneration (delta sweep, mu = 0.5)", ok,
         ok ? "sigma_K(-1) = " + format_g17(worst_row[1]) +
                  ", Q+ = " + format_g17(qp)
            : why);
  CHECK(ok);
}

TEST_CASE("C5 figure-2a behavior on mu in [0, 0.95]") {
  bool robust_below_sql = true;
  bool kalman_exceeds_somewhere = false;
  double min_gap = 1e300;
  for (int i = 0; i <= 190; ++i) {
    const double mu = 0.95 * i / 190.0;
    const double qp = design_robust(kDefaults, mu).error_value;
    const double sqlw = design_sql(kDefaults, {mu, -1.0}).error_value;
    const double kw = sigma_kalman_closed(kDefaults, {mu, -1.0});
    if (!(qp < sqlw)) robust_below_sql = false;
    min_gap = std::min(min_gap, sqlw - qp);
    if (kw > sqlw) kalman_exceeds_somewhere = true;
  }
  const bool ok = robust_below_sql && kalman_exceeds_somewhere;
  report("C5 figure-2a worst-case vs SQL", ok,
         "min SQL-robust gap " + format_g17(min_gap) +
             (kalman_exceeds_somewhere ? ", kalman crosses the SQL"
                                       : ", kalman never crosses"));
  CHECK(robust_below_sql);
  CHECK(kalman_exceeds_somewhere);
}

TEST_CASE("C6 effective-efficiency endpoints and range") {
  const double mu = 0.8;
  const double eta_k0 = effective_quantum_efficiency(
      kDefaults, {mu, 0.0}, sigma_kalman_closed(kDefaults, {mu, 0.0}));
  const double eta_rw = effective_quantum_efficiency(
      kDefaults, {mu, -1.0}, sigma_robust_closed(kDefaults, {mu, -1.0}));
  bool range_ok = true;
  int valid_rows = 0, skipped = 0;
  for (int i = 0; i <= 200; ++i) {
    const Uncertainty u{mu, -1.0 + 2.0 * i / 200.0};
    for (double e : {sigma_kalman_closed(kDefaults, u),
                     sigma_robust_closed(kDefaults, u)}) {
      try {
        const double eta = effective_quantum_efficiency(kDefaults, u, e);
        if (!(eta > 0.0 && eta <= 1.0)) range_ok = false;
        ++valid_rows;
      } catch (const AnalysisError&) {
        ++skipped;
      }
    }
  }
  const bool ok = std::abs(eta_k0 - 1.0) <= 1e-9 &&
                  std::abs(eta_rw - 1.0) <= 1e-9 && range_ok &&
                  valid_rows > 0;
  report("C6 effective quantum efficiency endpoints (mu = 0.8)", ok,
         "eta(kalman, d=0) - 1 = " + format_g17(eta_k0 - 1.0) +
             ", eta(robust, d=-1) - 1 = " + format_g17(eta_rw - 1.0) + ", " +
             std::to_string(valid_rows) + " rows in (0,1], " +
             std::to_string(skipped) + " precondition skips");
  CHECK(std::abs(eta_k0 - 1.0) <= 1e-9);
  CHECK(std::abs(eta_rw - 1.0) <= 1e-9);
  CHECK(range_ok);
}

TEST_CASE("C7 effective-noise-power endpoints and round trip") {
  const double mu = 0.5;
  const NoisePower np_r = effective_noise_power(
      kDefaults, {mu, -1.0}, sigma_robust_closed(kDefaults, {mu, -1.0}));
  const NoisePower np_k0 = effective_noise_power(
      kDefaults, {mu, 0.0}, sigma_kalman_closed(kDefaults, {mu, 0.0}));
  double worst_rt = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const Uncertainty u{mu, -1.0 + 2.0 * i / 200.0};
    for (double e : {sigma_kalman_closed(kDefaults, u),
                     sigma_robust_closed(kDefaults, u)}) {
      const NoisePower np = effective_noise_power(kDefaults, u, e);
      const double back = added_noise_cov(kDefaults, u, np.kappa_n).p1;
      worst_rt = std::max(worst_rt, std::abs(back - e) / e);
    }
  }
  const double rel_r = std::abs(np_r.kappa_eff - kDefaults.kappa) /
                       kDefaults.kappa;
  const double rel_k = std::abs(np_k0.kappa_eff - kDefaults.kappa) /
                       kDefaults.kappa;
  const bool ok = rel_r <= 1e-9 && rel_k <= 1e-9 && worst_rt <= 1e-10;
  report("C7 effective noise power endpoints (mu = 0.5)", ok,
         "kappa_eff(robust,-1)/kappa - 1 = " + format_g17(rel_r) +
             ", kappa_eff(kalman,0)/kappa - 1 = " + format_g17(rel_k) +
             ", max round-trip err " + format_g17(worst_rt));
  CHECK(rel_r <= 1e-9);
  CHECK(rel_k <= 1e-9);
  CHECK(worst_rt <= 1e-10);
}

TEST_CASE("C8 two-time no-match at delta = 1, mu = 0.5") {
  const Uncertainty u{0.5, 1.0};
  const FilterDesign f = design_kalman(kDefaults);
  const double e = sigma_kalman_closed(kDefaults, u);
  const double kn = effective_noise_power(kDefaults, u, e).kappa_n;

  const auto grid = default_tau_grid(f.corner, 60);
  const TwoTimeCurve sub = arbitrary_two_time(kDefaults, u, f, grid);
  const TwoTimeCurve opt = optimal_added_noise_two_time(
      kDefaults, u, kn, grid, CurveKind::EffectiveForKalman);
  const double tau0_gap =
      std::abs(sub.values[0] - opt.values[0]) / std::abs(opt.values[0]);
  double max_gap = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    max_gap = std::max(max_gap, std::abs(sub.values[i] - opt.values[i]) /
                                    std::max(std::abs(opt.values[i]), 1e-300));
  }

  std::vector<double> kn_grid;
  for (int i = 0; i < 10000; ++i) {
    kn_grid.push_back(10.0 * kDefaults.kappa * i / 9999.0);
  }
  const MatchScan scan = match_residual_scan(kDefaults, u, f, kn_grid);

  const bool ok = tau0_gap <= 1e-10 && max_gap > 0.01 &&
                  scan.min_max_residual > 1e-3;
  report("C8 two-time no-match (Fig. 6 configuration)", ok,
         "tau0 gap " + format_g17(tau0_gap) + ", max rel gap " +
             format_g17(max_gap) + ", min-max residual " +
             format_g17(scan.min_max_residual));
  CHECK(tau0_gap <= 1e-10);
  CHECK(max_gap > 0.01);
  CHECK(scan.min_max_residual > 1e-3);
}

TEST_CASE("C9 Monte Carlo agreement over the 15-cell grid") {
  Stopwatch sw;
  SimConfig cfg;
  cfg.dt = 1e-8;
  cfg.n_steps = 8'000'000;
  cfg.n_traj = 8;
  cfg.seed = 42;

  bool ok = true;
  std::string why;
  double worst_z = 0.0, worst_se = 0.0;
  for (double mu : {0.0, 0.5, 0.8}) {
    const FilterDesign fk = design_kalman(kDefaults);
    const FilterDesign fr = design_robust(kDefaults, mu);
    for (double d : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      const Uncertainty u{mu, d};
      for (const FilterDesign& f : {fk, fr}) {
        const SimResult r = run_closed_loop(kDefaults, u, f, cfg);
        const double analytic = sigma2_for_design(kDefaults, u, f);
        const double z = (r.mse - analytic) / r.std_error;
        const double rel_se = r.std_error / r.mse;
        worst_z = std::max(worst_z, std::abs(z));
        worst_se = std::max(worst_se, rel_se);
        if (!(std::abs(z) <= 3.0)) {
          ok = false;
          why += "cell(mu=" + std::to_string(mu) + ",d=" + std::to_string(d) +
                 "," + to_string(f.kind) + ") z=" + std::to_string(z) + "; ";
        }
        if (!(rel_se <= 0.01)) {
          ok = false;
          why += "cell(mu=" + std::to_string(mu) + ",d=" + std::to_string(d) +
                 "," + to_string(f.kind) + ") se/mse=" +
                 std::to_string(rel_se) + "; ";
        }
      }
    }
  }

  // bit-identical across reruns and worker counts
  SimConfig small = cfg;
  small.n_steps = 200'000;
  small.n_traj = 4;
  const Uncertainty u0{0.5, -1.0};
  const SimResult w1 =
      run_closed_loop(kDefaults, u0, design_robust(kDefaults, 0.5), small, 1);
  const SimResult w2 =
      run_closed_loop(kDefaults, u0, design_robust(kDefaults, 0.5), small, 2);
  const SimResult w4 =
      run_closed_loop(kDefaults, u0, design_robust(kDefaults, 0.5), small, 4);
  if (!bits_equal(w1.mse, w2.mse) || !bits_equal(w1.mse, w4.mse) ||
      !bits_equal(w1.std_error, w2.std_error)) {
    ok = false;
    why += "not bit-identical across worker counts; ";
  }

  const double secs = sw.seconds();
  if (!(secs < 600.0)) {
    ok = false;
    why += "runtime " + std::to_string(secs) + " s; ";
  }
  report("C9 Monte Carlo agreement (15 cells x 2 filters)", ok,
         ok ? "max |z| " + format_g17(worst_z) + ", max se/mse " +
                  format_g17(worst_se) + ", " + std::to_string(secs) + " s"
            : why);
  CHECK(ok);
}

TEST_CASE("C10 sine-mode linearization probe") {
  SimConfig cfg;
  cfg.dt = 2e-8;
  cfg.n_steps = 4'000'000;
  cfg.n_traj = 8;
  cfg.seed = 42;
  const BiasProbe probe = linearization_bias_probe(
      kDefaults, {0.0, 0.0}, design_kalman(kDefaults), cfg);
  const bool ok = probe.relative_gap < 0.05;
  report("C10 linearized-vs-sine gap at the defaults", ok,
         "gap " + format_g17(probe.relative_gap) + " (rms phase error " +
             format_g17(std::sqrt(probe.mse_linear)) + " rad)");
  CHECK(ok);
}
