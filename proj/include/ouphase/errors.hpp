#pragma once

#include <stdexcept>
#include <string>

namespace ouphase {

// Failures of the dense linear-algebra kernels.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No stable invariant subspace of the right dimension exists.
struct NoStabilizingSolution : SolverError {
  using SolverError::SolverError;
};

// Back-substituted residual exceeds the documented tolerance.
struct IllConditioned : SolverError {
  using SolverError::SolverError;
};

// The guaranteed-cost Riccati has no stabilising solution at this epsilon
// (epsilon at or beyond the feasible range).
struct EpsilonInfeasible : SolverError {
  using SolverError::SolverError;
};

// No epsilon in a supplied grid admits a stabilising solution.
struct AllEpsilonInfeasible : SolverError {
  using SolverError::SolverError;
};

// A Hurwitz state matrix was required.
struct UnstableA : SolverError {
  using SolverError::SolverError;
};

// Matrix exponential argument outside the reliable range.
struct Overflow : SolverError {
  using SolverError::SolverError;
};

// Precondition violations of the error-analysis operations.
struct AnalysisError : std::domain_error {
  using std::domain_error::domain_error;
};

// e >= kappa/(2*lambda_u): the estimate is no better than the prior, the
// effective efficiency would be nonpositive.
struct EstimateWorseThanPrior : AnalysisError {
  using AnalysisError::AnalysisError;
};

// e < sigma2_opt beyond tolerance: no physical efficiency reproduces it.
struct BetterThanOptimal : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct PriorBoundViolated : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct NegativeKappaN : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct DegenerateDenominator : AnalysisError {
  using AnalysisError::AnalysisError;
};

// Simulation failures.
struct ConfigInvariantViolated : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalBlowup : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientSamples : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by require_valid() when plant/uncertainty bounds are violated.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace ouphase
