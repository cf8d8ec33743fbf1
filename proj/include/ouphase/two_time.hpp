#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ouphase/core_model.hpp"
#include "ouphase/error_analysis.hpp"
#include "ouphase/filter_design.hpp"
#include "ouphase/linsolve.hpp"

// Steady-state two-time error correlations P(t, t-tau) for optimal and
// arbitrary filters, and the residuals of the conditions under which a
// suboptimal filter could match the added-noise optimal filter at every lag.

namespace ouphase {

enum class CurveKind {
  OptimalAddedNoise,
  SubKalman,
  SubRobust,
  EffectiveForKalman,
  EffectiveForRobust,
};

struct TwoTimeCurve {
  std::vector<double> tau;
  std::vector<double> values;
  CurveKind kind = CurveKind::OptimalAddedNoise;
};

/// tau = 0 followed by log-spaced lags up to 5/corner (three decades).
inline std::vector<double> default_tau_grid(double corner, int points = 60) {
  std::vector<double> g{0.0};
  const double tmax = 5.0 / corner;
  const double tmin = tmax * 1e-3;
  const int m = std::max(points - 1, 1);
  for (int i = 0; i < m; ++i) {
    g.push_back(tmin * std::pow(tmax / tmin, m == 1 ? 1.0 : double(i) / (m - 1)));
  }
  return g;
}

/// Two-time error correlation of an arbitrary stable first-order filter on
/// the uncertain plant: solves Abar X + X Abar^T + e^{Abar tau} Bbar Bbar^T
/// = 0 per lag and contracts with [1, -1].
inline TwoTimeCurve arbitrary_two_time(const PlantParams& p,
                                       const Uncertainty& u,
                                       const FilterDesign& f,
                                       const std::vector<double>& tau_grid) {
  if (!(f.pole_A < 0.0)) throw UnstableA("arbitrary_two_time: unstable filter");
  auto [abar, bbar] = detail::augmented_system(p, u, f);
  const linsolve::Matrix m = bbar * bbar.transpose();
  TwoTimeCurve c;
  c.kind = f.kind == FilterKind::Robust ? CurveKind::SubRobust
                                        : CurveKind::SubKalman;
  c.tau = tau_grid;
  c.values.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    const linsolve::Matrix x = linsolve::solve_sylvester_forced(abar, m, tau);
    c.values.push_back(x(0, 0) - x(0, 1) - x(1, 0) + x(1, 1));
  }
  return c;
}

/// Two-time error correlation of the optimal filter for the plant plus an
/// added OU noise of power kappa_n (lambda_n = lambda_u). The 2x2 gain comes
/// from the added-noise Riccati equation; each lag solves the forced
/// steady-state equation for the closed loop A - K C and extracts the (1,1)
/// entry.
inline TwoTimeCurve optimal_added_noise_two_time(
    const PlantParams& p, const Uncertainty& u, double kappa_n,
    const std::vector<double>& tau_grid,
    CurveKind kind = CurveKind::OptimalAddedNoise) {
  if (!(kappa_n >= 0.0)) {
    throw NegativeKappaN("optimal_added_noise_two_time: kappa_n must be >= 0");
  }
  using linsolve::Matrix;
  const double lu = lambda_u(p, u);
  const double a2 = p.alpha2_eff();
  Matrix a(2, 2), b(2, 2), cmat(1, 2), dr(1, 1);
  a << -lu, 0.0, 0.0, -lu;
  b << std::sqrt(p.kappa), 0.0, 0.0, std::sqrt(kappa_n);
  cmat << 1.0, 1.0;
  dr << 1.0 / (2.0 * p.alpha_eff());
  const Matrix pcov = linsolve::solve_care(a, cmat, b, dr);
  const Matrix gain = 4.0 * a2 * pcov * cmat.transpose();  // [K1; K2]
  const Matrix acl = a - gain * cmat;
  const Matrix m =
      b * b.transpose() + gain * gain.transpose() / (4.0 * a2);
  TwoTimeCurve c;
  c.kind = kind;
  c.tau = tau_grid;
  c.values.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    const Matrix x = linsolve::solve_sylvester_forced(acl, m, tau);
    c.values.push_back(x(0, 0));
  }
  return c;
}

/// Residuals of the three match conditions between a suboptimal filter's
/// two-time correlation and the added-noise optimal one. r1..r3 as written;
/// the normalised variants divide r1 by beta and r3 by the larger side of
/// its equation.
struct MatchResiduals {
  double r1 = 0.0, r2 = 0.0, r3 = 0.0;
  double r1_norm = 0.0, r2_norm = 0.0, r3_norm = 0.0;

  double max_norm() const {
    return std::max({std::abs(r1_norm), std::abs(r2_norm), std::abs(r3_norm)});
  }
};

inline MatchResiduals match_residuals(const PlantParams& p,
                                      const Uncertainty& u,
                                      const FilterDesign& f, double kappa_n) {
  if (!(kappa_n >= 0.0)) {
    throw NegativeKappaN("match_residuals: kappa_n must be >= 0");
  }
  const double lu = lambda_u(p, u);
  const double a2 = p.alpha2_eff();
  const double k = p.kappa;
  const double kt = k + kappa_n;
  const double ae = f.pole_A;
  const double be = f.gain_B;
  const double den = ae * ae - lu * lu;
  if (std::abs(den) < 1e-12 * lu * lu) {
    throw DegenerateDenominator("match_residuals: |A_e^2 - lambda_u^2| ~ 0");
  }
  const double beta = std::sqrt(4.0 * a2 * kt + lu * lu);
  MatchResiduals r;
  r.r1 = ae + beta;
  const double sum = ae + be;
  r.r2 = (sum * sum - lu * lu) / den - kappa_n / kt;
  const double lhs =
      be * k * (2.0 * ae + be) / (2.0 * ae * den) - be * be / (8.0 * a2 * ae);
  const double rhs = k * k / (kt * (beta + lu));
  r.r3 = lhs - rhs;
  r.r1_norm = r.r1 / beta;
  r.r2_norm = r.r2;
  r.r3_norm = r.r3 / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return r;
}

struct MatchScan {
  double min_max_residual = 0.0;
  double argmin_kappa_n = 0.0;
};

/// Minimum over a kappa_n grid of the max normalised match residual;
/// evidence that no single kappa_n matches all three conditions.
inline MatchScan match_residual_scan(const PlantParams& p,
                                     const Uncertainty& u,
                                     const FilterDesign& f,
                                     const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("match_residual_scan: empty grid");
  MatchScan out;
  out.min_max_residual = std::numeric_limits<double>::infinity();
  for (double kn : grid) {
    const double v = match_residuals(p, u, f, kn).max_norm();
    if (v < out.min_max_residual) {
      out.min_max_residual = v;
      out.argmin_kappa_n = kn;
    }
  }
  return out;
}

}  // namespace ouphase
