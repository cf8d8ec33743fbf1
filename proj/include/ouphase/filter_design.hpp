#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "ouphase/core_model.hpp"
#include "ouphase/linsolve.hpp"

// The four estimator designs. Each is a stable first-order filter
//   d/dt phi_hat = pole_A * phi_hat + gain_B * theta,
// parameterised by its input gain, pole and steady-state error value.

namespace ouphase {

enum class FilterKind { Kalman, Robust, Sql, OptimalLimit };

inline const char* to_string(FilterKind k) {
  switch (k) {
    case FilterKind::Kalman: return "kalman";
    case FilterKind::Robust: return "robust";
    case FilterKind::Sql: return "sql";
    default: return "optimal";
  }
}

struct FilterDesign {
  FilterKind kind = FilterKind::Kalman;
  double gain_B = 0.0;       // input gain B_e (1/s)
  double pole_A = 0.0;       // state coefficient A_e (1/s), negative
  double corner = 0.0;       // corner frequency = -pole_A (rad/s)
  double error_value = 0.0;  // steady-state mean-square error / bound (rad^2)
  double epsilon_opt = 0.0;  // Robust only
  TransferFunction1 tf;

  /// The design-model decay rate: lambda (Kalman), lambda*(1-mu) (Robust),
  /// lambda_u (SQL). Equals corner - gain_B by construction.
  double design_decay() const { return corner - gain_B; }
};

namespace detail {

inline FilterDesign first_order_design(FilterKind kind, double decay,
                                       double gain, double error_value,
                                       double epsilon_opt = 0.0) {
  const double corner = decay + gain;
  return FilterDesign{kind,   gain,        -corner, corner,
                      error_value, epsilon_opt, TransferFunction1{gain, corner}};
}

}  // namespace detail

/// Steady-state Kalman filter for the exact plant:
///   P+ = kappa / (lambda + sqrt(lambda^2 + 4 kappa |a|^2)),
///   K  = -lambda + sqrt(lambda^2 + 4 kappa |a|^2).
/// The gain uses the subtraction-free form 4 kappa |a|^2 / (lambda + corner).
inline FilterDesign design_kalman(const PlantParams& p) {
  const double a2 = p.alpha2_eff();
  const double g = 4.0 * p.kappa * a2;
  const double root = std::sqrt(p.lambda * p.lambda + g);
  const double gain = g / (p.lambda + root);
  const double err = p.kappa / (p.lambda + root);
  return detail::first_order_design(FilterKind::Kalman, p.lambda, gain, err);
}

/// Guaranteed-cost robust filter for uncertainty level mu. Independent of
/// delta. Identical to the Kalman design with lambda -> lambda*(1-mu);
/// epsilon_opt is the multiplier minimising the guaranteed bound.
inline FilterDesign design_robust(const PlantParams& p, double mu) {
  if (!(mu >= 0.0 && mu < 1.0)) {
    throw ValidationError("design_robust: mu must lie in [0,1)");
  }
  const double a2 = p.alpha2_eff();
  const double lm = p.lambda * (1.0 - mu);
  const double g = 4.0 * p.kappa * a2;
  const double root = std::sqrt(lm * lm + g);
  const double q = p.kappa / (lm + root);
  const double eps = mu * (lm + root) / (p.kappa * p.lambda);
  return detail::first_order_design(FilterKind::Robust, lm, 4.0 * a2 * q, q,
                                    eps);
}

/// Dual-homodyne (heterodyne) Kalman filter; the standard quantum limit
/// benchmark. Depends on the realised lambda_u.
inline FilterDesign design_sql(const PlantParams& p, const Uncertainty& u) {
  const double a2 = p.alpha2_eff();
  const double lu = lambda_u(p, u);
  const double g = 2.0 * p.kappa * a2;
  const double root = std::sqrt(lu * lu + g);
  const double gain = g / (lu + root);
  const double err = p.kappa / (lu + root);
  return detail::first_order_design(FilterKind::Sql, lu, gain, err);
}

/// Minimum achievable mean-square error if lambda_u were known exactly.
inline double optimal_limit(const PlantParams& p, const Uncertainty& u) {
  const double a2 = p.alpha2_eff();
  const double lu = lambda_u(p, u);
  return p.kappa / (lu + std::sqrt(lu * lu + 4.0 * p.kappa * a2));
}

/// Scalar guaranteed-cost problem of the uncertain plant: A = -lambda, C = 1,
/// D1 = mu, D2 = 0, E1 = lambda, V1 = kappa, V2 = 1/(4 |a|^2).
inline linsolve::GcProblem make_scalar_gc_problem(const PlantParams& p,
                                                  double mu, double epsilon) {
  using linsolve::Matrix;
  linsolve::GcProblem gp;
  gp.A = Matrix::Constant(1, 1, -p.lambda);
  gp.C = Matrix::Constant(1, 1, 1.0);
  gp.D1 = Matrix::Constant(1, 1, mu);
  gp.D2 = Matrix::Zero(1, 1);
  gp.E1 = Matrix::Constant(1, 1, p.lambda);
  gp.V1 = Matrix::Constant(1, 1, p.kappa);
  gp.V2 = Matrix::Constant(1, 1, 1.0 / (4.0 * p.alpha2_eff()));
  gp.epsilon = epsilon;
  return gp;
}

/// General matrix guaranteed-cost estimator
///   d/dt x_hat = A_pred x_hat + gain (y - C x_hat),
/// with A_pred = A + eps Q+ E1'E1 and gain = (eps Q+ C' + D1 D2') W^{-1},
/// chosen at the epsilon minimising trace(Q+).
struct GcMatrixEstimator {
  linsolve::Matrix a_pred;
  linsolve::Matrix gain;
  linsolve::Matrix q_plus;
  double epsilon = 0.0;
  double trace_q = 0.0;
  // Observed feasible epsilon ranges over the scanned grid: the estimator
  // equation (gates the design) and the first equation (whose upper edge is
  // the eps* of the existence theorem). NaN when never feasible.
  double q_feasible_lo = std::numeric_limits<double>::quiet_NaN();
  double q_feasible_hi = std::numeric_limits<double>::quiet_NaN();
  double s_feasible_lo = std::numeric_limits<double>::quiet_NaN();
  double s_feasible_hi = std::numeric_limits<double>::quiet_NaN();
};

inline GcMatrixEstimator design_gc_matrix(linsolve::GcProblem gp,
                                          const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) {
    throw std::invalid_argument("design_gc_matrix: empty epsilon grid");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto trace_at = [&](double eps) -> double {
    gp.epsilon = eps;
    try {
      return solve_gc_riccati_pair(gp).q_plus.trace();
    } catch (const SolverError&) {
      return nan;
    } catch (const std::invalid_argument&) {
      return nan;
    }
  };

  GcMatrixEstimator out;
  int best = -1;
  double best_trace = std::numeric_limits<double>::infinity();
  std::vector<double> traces(eps_grid.size(), nan);
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    const double eps = eps_grid[i];
    if (!(eps > 0.0)) continue;
    gp.epsilon = eps;
    linsolve::GcSolution sol;
    try {
      sol = solve_gc_riccati_pair(gp);
    } catch (const SolverError&) {
      continue;
    }
    traces[i] = sol.q_plus.trace();
    if (std::isnan(out.q_feasible_lo)) out.q_feasible_lo = eps;
    out.q_feasible_hi = eps;
    if (sol.s_plus) {
      if (std::isnan(out.s_feasible_lo)) out.s_feasible_lo = eps;
      out.s_feasible_hi = eps;
    }
    if (traces[i] < best_trace) {
      best_trace = traces[i];
      best = static_cast<int>(i);
    }
  }
  if (best < 0) {
    throw AllEpsilonInfeasible(
        "design_gc_matrix: no epsilon in the grid admits a stabilising "
        "solution");
  }

  // Local golden-section refinement around the best grid point. Infeasible
  // probes count as +inf.
  double lo = best > 0 ? eps_grid[best - 1] : eps_grid[best];
  double hi = best + 1 < static_cast<int>(eps_grid.size()) ? eps_grid[best + 1]
                                                           : eps_grid[best];
  auto value = [&](double eps) {
    const double t = trace_at(eps);
    return std::isnan(t) ? std::numeric_limits<double>::infinity() : t;
  };
  const double gr = 0.6180339887498949;
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = value(x1), f2 = value(x2);
  for (int it = 0; it < 90 && (hi - lo) > 1e-12 * std::max(hi, 1e-300); ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = value(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = value(x2);
    }
  }
  double eps_star = 0.5 * (lo + hi);
  if (!(value(eps_star) <= best_trace) && std::isfinite(best_trace)) {
    eps_star = eps_grid[best];
  }

  gp.epsilon = eps_star;
  const linsolve::GcSolution sol = solve_gc_riccati_pair(gp);
  const linsolve::Matrix w =
      eps_star * gp.V2 + gp.D2 * gp.D2.transpose();
  const linsolve::Matrix winv = w.inverse();
  out.q_plus = sol.q_plus;
  out.epsilon = eps_star;
  out.trace_q = sol.q_plus.trace();
  out.gain = (eps_star * sol.q_plus * gp.C.transpose() +
              gp.D1 * gp.D2.transpose()) *
             winv;
  out.a_pred = gp.A + eps_star * sol.q_plus * gp.E1.transpose() * gp.E1;
  return out;
}

}  // namespace ouphase
