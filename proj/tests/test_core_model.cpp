#include <catch2/catch_amalgamated.hpp>

#include "ouphase/core_model.hpp"

#include "oracles.hpp"

using namespace ouphase;

TEST_CASE("lambda_u") {
  PlantParams p;
  CHECK(lambda_u(p, {0.0, 0.7}) == 5.9e4);
  CHECK(lambda_u(p, {0.5, -1.0}) == Catch::Approx(2.95e4).epsilon(1e-14));
  CHECK(lambda_u(p, {0.8, 1.0}) == Catch::Approx(1.062e5).epsilon(1e-14));
}

TEST_CASE("lambda_u monotone in delta, positive at the worst case") {
  PlantParams p;
  oracle::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    p.lambda = rng.log_uniform(1e2, 1e8);
    const double mu = rng.uniform(0.0, 0.999);
    double prev = lambda_u(p, {mu, -1.0});
    CHECK(prev > 0.0);
    for (int k = 1; k <= 8; ++k) {
      const double cur = lambda_u(p, {mu, -1.0 + 0.25 * k});
      if (mu > 0.0) CHECK(cur >= prev);
      prev = cur;
    }
    CHECK(lambda_u(p, {0.0, rng.uniform(-1.0, 1.0)}) == p.lambda);
  }
}

TEST_CASE("validate accepts the default parameter set") {
  PlantParams p{5.9e4, 1.9e4, 1e6, 1.0};
  CHECK(validate(p, {0.5, 0.0}).ok());
  CHECK_NOTHROW(require_valid(p, {0.5, 0.0}));
}

TEST_CASE("validate lists each violated bound") {
  PlantParams p;
  Uncertainty u;

  u.mu = 1.0;  // boundary excluded
  auto r = validate(p, u);
  REQUIRE(r.items.size() == 1);
  CHECK(r.items[0].issue == ValidationIssue::MuOutOfRange);

  p.kappa = -1.0;
  u.mu = 0.0;
  r = validate(p, u);
  REQUIRE(r.items.size() == 1);
  CHECK(r.items[0].issue == ValidationIssue::NonPositiveParameter);

  p.kappa = 1.9e4;
  u.delta = 1.5;
  r = validate(p, u);
  REQUIRE(r.items.size() == 1);
  CHECK(r.items[0].issue == ValidationIssue::DeltaOutOfRange);

  p.eta_d = 1.2;
  r = validate(p, u);
  CHECK(r.items.size() == 2);
  CHECK_THROWS_AS(require_valid(p, u), ValidationError);
}

TEST_CASE("eta_d scales the effective flux") {
  PlantParams p;
  p.eta_d = 0.25;
  CHECK(p.alpha2_eff() == Catch::Approx(2.5e5).epsilon(1e-15));
  CHECK(p.alpha_eff() == Catch::Approx(500.0).epsilon(1e-15));
}

TEST_CASE("transfer function DC gain") {
  TransferFunction1 tf{2.0e5, 2.5e5};
  CHECK(tf.dc_gain() == Catch::Approx(0.8).epsilon(1e-15));
}
