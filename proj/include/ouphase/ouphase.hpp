#pragma once

// Umbrella header: Kalman, robust guaranteed-cost and SQL filter design for a
// noisy optical phase under parametric uncertainty, with worst-case error
// analysis, effective quantum efficiency and noise power, two-time error
// correlations, and a closed-loop Monte Carlo validator.

#include "ouphase/core_model.hpp"
#include "ouphase/errors.hpp"
#include "ouphase/error_analysis.hpp"
#include "ouphase/filter_design.hpp"
#include "ouphase/linsolve.hpp"
#include "ouphase/run_spec.hpp"
#include "ouphase/simulate.hpp"
#include "ouphase/table.hpp"
#include "ouphase/two_time.hpp"
#include "ouphase/version.hpp"
