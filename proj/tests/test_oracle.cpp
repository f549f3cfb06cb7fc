#include <doctest.h>

#include <vector>

#include "batchlr/model.hpp"
#include "batchlr/moments.hpp"
#include "batchlr/oracle.hpp"

using namespace batchlr;

TEST_CASE("oracle reports compute relative error against brute force") {
  // relative to the larger magnitude, so the comparison is symmetric
  const OracleReport ok = make_oracle_report("x", 2.0, 2.01, 0.01);
  CHECK(ok.relative_error == doctest::Approx(0.01 / 2.01));
  CHECK(ok.passed);
  const OracleReport bad = make_oracle_report("x", 2.0, 2.1, 0.01);
  CHECK_FALSE(bad.passed);
}

TEST_CASE("directional sup is sandwiched by the flattened eigenvalue") {
  Rng r(44);
  for (int trial = 0; trial < 10; ++trial) {
    Rng rt = r.derive("t", static_cast<uint64_t>(trial));
    const int d = 1 + static_cast<int>(rt.below(4));
    const int k = 1 + static_cast<int>(rt.below(2));
    std::vector<Vec> pts;
    for (int i = 0; i < 60; ++i) pts.push_back(rt.gaussian_vec(d));

    const MomentCertificate cert = certify_moment_bound(pts, k, 1.0);
    Rng rd = rt.derive("dirs");
    const double sup = directional_moment_sup(pts, k, 400, rd);
    CHECK(sup <= cert.lambda_max * (1.0 + 1e-9));
    CHECK(sup > 0.0);
    if (d == 1)  // one direction only, so the sandwich is an equality
      CHECK(sup == doctest::Approx(cert.lambda_max).epsilon(1e-9));
  }
}

TEST_CASE("pooled least squares recovers the regressor from clean batches") {
  ProblemParams p;
  p.d = 4;
  p.n = 6;
  p.m = 10;
  p.alpha = 1.0;
  p.sigma = 0.0;
  p.R = 3.0;

  Rng r(55);
  Vec beta(4);
  beta << 1.0, -1.0, 2.0, 0.25;
  const CovariateModel cov;
  std::vector<Batch> batches;
  for (int i = 0; i < p.m; ++i) {
    Rng rb = r.derive("b", static_cast<uint64_t>(i));
    batches.push_back(sample_inlier_batch(p, cov, beta, rb));
  }

  const LsqResult full = subset_least_squares(batches, {0, 1, 2, 3, 4});
  CHECK_FALSE(full.degenerate);
  CHECK((full.beta - beta).norm() == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

  // two points cannot pin four coordinates
  ProblemParams tiny = p;
  tiny.n = 1;
  std::vector<Batch> two;
  for (int i = 0; i < 2; ++i) {
    Rng rb = r.derive("tiny", static_cast<uint64_t>(i));
    two.push_back(sample_inlier_batch(tiny, cov, beta, rb));
  }
  const LsqResult def = subset_least_squares(two, {0, 1});
  CHECK(def.degenerate);
  CHECK((two[0].X * def.beta - two[0].y).norm() ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
}

TEST_CASE("tiny-support enumeration rejects oversized instances") {
  CHECK_THROWS_AS(mz_exact_tiny({-1.0, 0.0, 1.0}, {0.3, 0.4, 0.3}, 11, 2),
                  config_error);  // 3^11 outcomes
}
