#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ouphase/errors.hpp"

namespace ouphase {

/// Ornstein-Uhlenbeck plant and homodyne measurement constants.
///
/// `lambda` is the inverse correlation time of the phase (rad/s), `kappa` the
/// magnitude of the phase variation (rad/s, so that kappa/(2*lambda) is a
/// variance in rad^2), `alpha2` the photon flux |alpha_c|^2 (1/s) and `eta_d`
/// the homodyne detector efficiency. Every formula sees the effective flux
/// eta_d * alpha2. Defaults are the parameter set used throughout the figures.
struct PlantParams {
  double lambda = 5.9e4;
  double kappa = 1.9e4;
  double alpha2 = 1.0e6;
  double eta_d = 1.0;

  double alpha2_eff() const { return eta_d * alpha2; }
  double alpha_eff() const { return std::sqrt(alpha2_eff()); }
};

/// Uncertain decay rate lambda -> lambda*(1 + mu*delta) with |delta| <= 1
/// unknown and mu in [0,1) the uncertainty level.
struct Uncertainty {
  double mu = 0.0;
  double delta = 0.0;
};

/// lambda*(1 + mu*delta); strictly positive for valid inputs.
inline double lambda_u(const PlantParams& p, const Uncertainty& u) {
  return p.lambda * (1.0 + u.mu * u.delta);
}

/// First-order filter G(s) = gain / (s + pole) with pole > 0.
struct TransferFunction1 {
  double gain = 0.0;
  double pole = 1.0;

  double dc_gain() const { return gain / pole; }
};

enum class ValidationIssue {
  NonPositiveParameter,
  MuOutOfRange,
  DeltaOutOfRange,
  EfficiencyOutOfRange,
};

struct ValidationReport {
  struct Item {
    ValidationIssue issue;
    std::string detail;
  };
  std::vector<Item> items;

  bool ok() const { return items.empty(); }

  std::string to_string() const {
    std::ostringstream os;
    for (const auto& it : items) {
      if (&it != &items.front()) os << "; ";
      os << it.detail;
    }
    return os.str();
  }
};

/// Checks every type invariant and lists each violated bound.
inline ValidationReport validate(const PlantParams& p, const Uncertainty& u) {
  ValidationReport r;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      r.items.push_back({ValidationIssue::NonPositiveParameter,
                         std::string(name) + " must be positive, got " +
                             std::to_string(v)});
    }
  };
  positive(p.lambda, "lambda");
  positive(p.kappa, "kappa");
  positive(p.alpha2, "alpha2");
  if (!(p.eta_d > 0.0 && p.eta_d <= 1.0)) {
    r.items.push_back({ValidationIssue::EfficiencyOutOfRange,
                       "eta_d must lie in (0,1], got " +
                           std::to_string(p.eta_d)});
  }
  if (!(u.mu >= 0.0 && u.mu < 1.0)) {
    r.items.push_back({ValidationIssue::MuOutOfRange,
                       "mu must lie in [0,1), got " + std::to_string(u.mu)});
  }
  if (!(u.delta >= -1.0 && u.delta <= 1.0)) {
    r.items.push_back({ValidationIssue::DeltaOutOfRange,
                       "delta must lie in [-1,1], got " +
                           std::to_string(u.delta)});
  }
  return r;
}

inline void require_valid(const PlantParams& p, const Uncertainty& u = {}) {
  ValidationReport r = validate(p, u);
  if (!r.ok()) throw ValidationError(r.to_string());
}

}  // namespace ouphase
