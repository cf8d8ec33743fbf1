#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ouphase/core_model.hpp"
#include "ouphase/filter_design.hpp"
#include "ouphase/linsolve.hpp"
#include "ouphase/table.hpp"

// Mean-square errors of a filter design against the uncertain plant, via the
// augmented Lyapunov route and the closed forms, plus the worst-case
// orderings, effective quantum efficiency and effective noise power.

namespace ouphase {

/// Steady-state second moments of the plant-filter pair:
/// p1 = <phi^2>, p2 = <phi phi_hat>, p3 = <phi_hat^2>.
struct AugmentedCov {
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;

  double sigma2() const { return p1 - 2.0 * p2 + p3; }
};

struct MseResult {
  AugmentedCov cov;
  double sigma2 = 0.0;
};

namespace detail {

/// Closed-loop pair (Abar, Bbar) of plant and filter under the homodyne
/// measurement, driven by unit white noises [v; w].
inline std::pair<linsolve::Matrix, linsolve::Matrix> augmented_system(
    const PlantParams& p, const Uncertainty& u, const FilterDesign& f) {
  const double lu = lambda_u(p, u);
  linsolve::Matrix abar(2, 2), bbar(2, 2);
  abar << -lu, 0.0, f.gain_B, -f.corner;
  bbar << std::sqrt(p.kappa), 0.0, 0.0, f.gain_B / (2.0 * p.alpha_eff());
  return {abar, bbar};
}

/// Closed-form sigma^2 of a stable first-order filter with input gain
/// `omega`, corner `lam_cap` and design decay `lam_design` = lam_cap - omega:
///   kappa (lam_design^2 + lam_cap lu) / (2 lu lam_cap (lam_cap + lu))
///     + omega^2 / (8 a2 lam_cap).
inline double sigma2_closed(double kappa, double a2, double lu,
                            double lam_design, double omega, double lam_cap) {
  return kappa * (lam_design * lam_design + lam_cap * lu) /
             (2.0 * lu * lam_cap * (lam_cap + lu)) +
         omega * omega / (8.0 * a2 * lam_cap);
}

}  // namespace detail

/// Lyapunov-route mean-square error of `f` on the uncertain plant.
inline MseResult mse_uncertain(const PlantParams& p, const Uncertainty& u,
                               const FilterDesign& f) {
  if (!(f.pole_A < 0.0)) throw UnstableA("mse_uncertain: filter not stable");
  auto [abar, bbar] = detail::augmented_system(p, u, f);
  const linsolve::Matrix ps =
      linsolve::solve_lyapunov(abar, bbar * bbar.transpose());
  AugmentedCov cov{ps(0, 0), ps(0, 1), ps(1, 1)};
  return {cov, cov.sigma2()};
}

/// Closed-form sigma^2 of the Kalman design on the uncertain plant.
inline double sigma_kalman_closed(const PlantParams& p, const Uncertainty& u) {
  const FilterDesign f = design_kalman(p);
  return detail::sigma2_closed(p.kappa, p.alpha2_eff(), lambda_u(p, u),
                               p.lambda, f.gain_B, f.corner);
}

/// Closed-form sigma^2 of the robust design (level u.mu) on the uncertain
/// plant.
inline double sigma_robust_closed(const PlantParams& p, const Uncertainty& u) {
  const FilterDesign f = design_robust(p, u.mu);
  return detail::sigma2_closed(p.kappa, p.alpha2_eff(), lambda_u(p, u),
                               p.lambda * (1.0 - u.mu), f.gain_B, f.corner);
}

/// Closed-form sigma^2 of an arbitrary stable first-order design.
inline double sigma2_for_design(const PlantParams& p, const Uncertainty& u,
                                const FilterDesign& f) {
  if (!(f.pole_A < 0.0)) throw UnstableA("sigma2_for_design: filter not stable");
  return detail::sigma2_closed(p.kappa, p.alpha2_eff(), lambda_u(p, u),
                               f.design_decay(), f.gain_B, f.corner);
}

struct WorstCase {
  double sigma2 = 0.0;     // sigma^2 at delta = -1
  bool delta_monotone = true;  // decreasing in delta on an 11-point grid
};

/// Worst-case mean-square error, defined as delta = -1. Monotonicity of
/// sigma^2 in delta is verified numerically and reported.
inline WorstCase worst_case(const PlantParams& p, double mu,
                            const FilterDesign& f) {
  auto at = [&](double d) { return sigma2_for_design(p, {mu, d}, f); };
  WorstCase out;
  out.sigma2 = at(-1.0);
  double prev = out.sigma2;
  for (int k = 1; k <= 10; ++k) {
    const double cur = at(-1.0 + 0.2 * k);
    if (cur > prev * (1.0 + 1e-12)) out.delta_monotone = false;
    prev = cur;
  }
  return out;
}

struct OrderingReport {
  double margin_robust_vs_kalman = 0.0;  // sigma_K^2(-1) - Q+
  double margin_robust_vs_sql = 0.0;     // P_SQL(-1) - Q+
  double margin_appendix_c = 0.0;        // lhs - rhs of the root inequality

  bool robust_beats_kalman(double tol = 1e-12) const {
    return margin_robust_vs_kalman >= -tol;
  }
  bool robust_beats_sql(double tol = 1e-12) const {
    return margin_robust_vs_sql >= -tol;
  }
  bool root_inequality_holds(double tol = 1e-12) const {
    return margin_appendix_c >= -tol;
  }
};

namespace detail {

// 2 sqrt(lm^2 + 2c) - lm - sqrt(lm^2 + 4c) with c = kappa a2, rationalised to
// the subtraction-free form 4 c^2 / ((lm^2 + c + lm x)(2x - lm + y)); the raw
// expression drowns in rounding when c << lm^2.
inline double appendix_c_margin(double lm, double c) {
  const double x = std::sqrt(lm * lm + 2.0 * c);
  const double y = std::sqrt(lm * lm + 4.0 * c);
  return 4.0 * c * c / ((lm * lm + c + lm * x) * (2.0 * x - lm + y));
}

}  // namespace detail

/// Worst-case orderings: robust vs Kalman, robust vs SQL, and the root
/// inequality behind the SQL comparison. Margins are (larger - smaller), so
/// every margin is nonnegative when the ordering holds.
inline OrderingReport check_orderings(const PlantParams& p, double mu) {
  OrderingReport r;
  const double qp = design_robust(p, mu).error_value;
  r.margin_robust_vs_kalman = sigma_kalman_closed(p, {mu, -1.0}) - qp;
  const double a2 = p.alpha2_eff();
  const double lm = p.lambda * (1.0 - mu);
  const double c = p.kappa * a2;
  const double cs = std::sqrt(lm * lm + 2.0 * c);
  const double ck = std::sqrt(lm * lm + 4.0 * c);
  // P_SQL(-1) - Q+ = kappa (ck - cs) / ((lm + cs)(lm + ck)), subtraction-free.
  r.margin_robust_vs_sql =
      2.0 * p.kappa * c / ((ck + cs) * (lm + cs) * (lm + ck));
  r.margin_appendix_c = detail::appendix_c_margin(lm, c);
  return r;
}

/// Detector efficiency that would make the optimal filter reproduce a given
/// error e: eta_eff = (kappa - 2 e lambda_u) / (4 |a|^2 e^2).
inline double effective_quantum_efficiency(const PlantParams& p,
                                           const Uncertainty& u, double e) {
  const double lu = lambda_u(p, u);
  const double prior = p.kappa / (2.0 * lu);
  if (!(e < prior)) {
    throw EstimateWorseThanPrior(
        "effective_quantum_efficiency: e >= kappa/(2 lambda_u) = " +
        std::to_string(prior));
  }
  const double sopt = optimal_limit(p, u);
  if (e < sopt * (1.0 - 1e-9)) {
    throw BetterThanOptimal(
        "effective_quantum_efficiency: e below the optimal limit");
  }
  double eta = (p.kappa - 2.0 * e * lu) / (4.0 * p.alpha2_eff() * e * e);
  if (eta > 1.0) eta = 1.0;  // rounding overshoot exactly at the optimum
  return eta;
}

struct NoisePower {
  double kappa_n = 0.0;
  double kappa_eff = 0.0;
};

/// Added OU noise power such that the optimal filter on the noisier phase
/// matches a given error e, with lambda_n = lambda_u. The closed expression
/// kappa lu (2|a|e - sqrt(kappa - 2 lu e)) / (|a|(kappa - 2 lu e)) is
/// evaluated in the factored form whose numerator vanishes exactly at the
/// optimum.
inline NoisePower effective_noise_power(const PlantParams& p,
                                        const Uncertainty& u, double e) {
  const double lu = lambda_u(p, u);
  const double a2 = p.alpha2_eff();
  const double al = p.alpha_eff();
  const double g = p.kappa - 2.0 * lu * e;
  if (!(g > 0.0)) {
    throw PriorBoundViolated(
        "effective_noise_power: kappa - 2 lambda_u e must be positive");
  }
  const double quad = 4.0 * a2 * e * e + 2.0 * lu * e - p.kappa;
  double kn = p.kappa * lu * quad / (al * g * (2.0 * al * e + std::sqrt(g)));
  if (kn < 0.0) {
    if (e >= optimal_limit(p, u) * (1.0 - 1e-9)) {
      kn = 0.0;
    } else {
      throw NegativeKappaN("effective_noise_power: e below the optimal limit");
    }
  }
  return {kn, p.kappa + kn};
}

/// Steady-state covariance of the optimal filter for the added-noise pair
/// (phi, phi'), lambda_n = lambda_u; closed forms of the 2x2 Riccati
/// solution, rationalised against cancellation at small kappa_n.
struct AddedNoiseCov {
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;
  double beta = 0.0;  // sqrt(4 a2 (kappa + kappa_n) + lambda_u^2)
};

inline AddedNoiseCov added_noise_cov(const PlantParams& p,
                                     const Uncertainty& u, double kappa_n) {
  if (!(kappa_n >= 0.0)) {
    throw NegativeKappaN("added_noise_cov: kappa_n must be >= 0");
  }
  const double lu = lambda_u(p, u);
  const double a2 = p.alpha2_eff();
  const double k = p.kappa;
  const double kt = k + kappa_n;
  const double beta = std::sqrt(4.0 * a2 * kt + lu * lu);
  AddedNoiseCov c;
  c.beta = beta;
  c.p1 = k * kappa_n / (2.0 * lu * kt) + k * k / (kt * (beta + lu));
  c.p2 = -2.0 * a2 * k * kappa_n / (lu * (beta + lu) * (beta + lu));
  c.p3 = k * kappa_n / (2.0 * lu * kt) + kappa_n * kappa_n / (kt * (beta + lu));
  return c;
}

/// One filter's error in context: against the pointwise optimal limit and
/// the SQL benchmark at the same uncertainty realisation.
struct MseReport {
  double sigma2 = 0.0;
  double optimal_limit = 0.0;
  double sql = 0.0;
  double ratio_to_sql = 0.0;
};

inline MseReport mse_report(const PlantParams& p, const Uncertainty& u,
                            const FilterDesign& f) {
  MseReport r;
  r.sigma2 = sigma2_for_design(p, u, f);
  r.optimal_limit = ouphase::optimal_limit(p, u);
  r.sql = design_sql(p, u).error_value;
  r.ratio_to_sql = r.sigma2 / r.sql;
  return r;
}

enum class SweepAxis { Delta, Mu, Alpha2, Kappa, Lambda };

inline const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::Delta: return "delta";
    case SweepAxis::Mu: return "mu";
    case SweepAxis::Alpha2: return "alpha2";
    case SweepAxis::Kappa: return "kappa";
    default: return "lambda";
  }
}

struct SweepRequest {
  SweepAxis axis = SweepAxis::Delta;
  std::vector<double> grid;
  double mu = 0.0;     // fixed value when axis != Mu
  double delta = 0.0;  // fixed value when axis != Delta
  bool kalman = true, robust = true, sql = true, optimal = true;
  bool efficiency = false;
  bool noise_power = false;
};

/// One row per grid point; rows where an inner precondition fails keep the
/// remaining columns and carry a flag. Rows are independent of evaluation
/// order.
inline DataTable sweep(const PlantParams& p0, const SweepRequest& req) {
  if (req.grid.empty()) throw ValidationError("sweep: empty grid");
  for (std::size_t i = 1; i < req.grid.size(); ++i) {
    if (!(req.grid[i] >= req.grid[i - 1])) {
      throw ValidationError("sweep: grid must be sorted");
    }
  }
  DataTable t;
  t.columns.push_back(axis_name(req.axis));
  if (req.kalman) t.columns.push_back("sigma2_kalman");
  if (req.robust) t.columns.push_back("sigma2_robust");
  if (req.robust) t.columns.push_back("q_plus");
  if (req.optimal) t.columns.push_back("sigma2_opt");
  if (req.sql) t.columns.push_back("p_sql");
  if (req.efficiency && req.kalman) t.columns.push_back("eta_eff_kalman");
  if (req.efficiency && req.robust) t.columns.push_back("eta_eff_robust");
  if (req.noise_power && req.kalman) {
    t.columns.push_back("kappa_n_kalman");
    t.columns.push_back("kappa_eff_kalman");
  }
  if (req.noise_power && req.robust) {
    t.columns.push_back("kappa_n_robust");
    t.columns.push_back("kappa_eff_robust");
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double g : req.grid) {
    PlantParams p = p0;
    Uncertainty u{req.mu, req.delta};
    switch (req.axis) {
      case SweepAxis::Delta: u.delta = g; break;
      case SweepAxis::Mu: u.mu = g; break;
      case SweepAxis::Alpha2: p.alpha2 = g; break;
      case SweepAxis::Kappa: p.kappa = g; break;
      case SweepAxis::Lambda: p.lambda = g; break;
    }
    require_valid(p, u);

    std::vector<double> row;
    std::string flag;
    auto guarded = [&](const char* col, auto&& fn) {
      try {
        row.push_back(fn());
      } catch (const std::exception& e) {
        row.push_back(nan);
        if (!flag.empty()) flag += "; ";
        flag += std::string(col) + ": " + e.what();
      }
    };

    row.push_back(g);
    const double sk = req.kalman ? sigma_kalman_closed(p, u) : nan;
    const double sr = req.robust ? sigma_robust_closed(p, u) : nan;
    if (req.kalman) row.push_back(sk);
    if (req.robust) row.push_back(sr);
    if (req.robust) row.push_back(design_robust(p, u.mu).error_value);
    if (req.optimal) row.push_back(optimal_limit(p, u));
    if (req.sql) row.push_back(design_sql(p, u).error_value);
    if (req.efficiency && req.kalman) {
      guarded("eta_eff_kalman",
              [&] { return effective_quantum_efficiency(p, u, sk); });
    }
    if (req.efficiency && req.robust) {
      guarded("eta_eff_robust",
              [&] { return effective_quantum_efficiency(p, u, sr); });
    }
    if (req.noise_power && req.kalman) {
      NoisePower np{nan, nan};
      guarded("kappa_n_kalman", [&] {
        np = effective_noise_power(p, u, sk);
        return np.kappa_n;
      });
      row.push_back(np.kappa_eff);
    }
    if (req.noise_power && req.robust) {
      NoisePower np{nan, nan};
      guarded("kappa_n_robust", [&] {
        np = effective_noise_power(p, u, sr);
        return np.kappa_n;
      });
      row.push_back(np.kappa_eff);
    }
    t.rows.push_back(std::move(row));
    t.flags.push_back(std::move(flag));
  }
  return t;
}

}  // namespace ouphase
