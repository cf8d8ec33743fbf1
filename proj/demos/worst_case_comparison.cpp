// Minimal library walkthrough: design the three filters, compare their
// worst-case errors against the optimal limit, and confirm the analytic
// error of the robust filter with a short closed-loop simulation.

#include <cstdio>

#include "ouphase/ouphase.hpp"

int main() {
  using namespace ouphase;

  PlantParams plant;  // defaults: lambda 5.9e4, kappa 1.9e4, alpha2 1e6
  const double mu = 0.5;
  const Uncertainty worst{mu, -1.0};

  const FilterDesign kalman = design_kalman(plant);
  const FilterDesign robust = design_robust(plant, mu);
  const FilterDesign sql = design_sql(plant, worst);

  std::printf("worst-case (delta = -1, mu = %.2f):\n", mu);
  std::printf("  kalman  sigma^2 = %.6e rad^2\n",
              sigma_kalman_closed(plant, worst));
  std::printf("  robust  sigma^2 = %.6e rad^2 (bound Q+ = %.6e)\n",
              sigma_robust_closed(plant, worst), robust.error_value);
  std::printf("  sql     sigma^2 = %.6e rad^2\n", sql.error_value);
  std::printf("  optimal limit   = %.6e rad^2\n", optimal_limit(plant, worst));
  std::printf("  kalman corner %.4e rad/s, robust corner %.4e rad/s\n",
              kalman.corner, robust.corner);

  SimConfig cfg;
  cfg.dt = 2e-8;
  cfg.n_steps = 400'000;
  cfg.n_traj = 4;
  cfg.seed = 1;
  const SimResult sim = run_closed_loop(plant, worst, robust, cfg);
  std::printf("  monte carlo (robust): %.6e +/- %.2e rad^2\n", sim.mse,
              sim.std_error);
  return 0;
}
