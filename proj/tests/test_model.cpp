#include <doctest.h>

#include <cmath>

#include "batchlr/model.hpp"

using namespace batchlr;

namespace {
ProblemParams base_params() {
  ProblemParams p;
  p.d = 3;
  p.n = 5;
  p.m = 40;
  p.alpha = 0.5;
  p.sigma = 0.0;
  p.R = 2.0;
  p.k = 1;
  p.seed = 9;
  return p;
}
}  // namespace

TEST_CASE("parameter validation enforces the contract") {
  ProblemParams p = base_params();
  CHECK_NOTHROW(p.validate());
  p.alpha = 1.0;
  CHECK_NOTHROW(p.validate());

  p = base_params();
  p.alpha = 0.6;  // inadmissible: above 1/2 but not exactly 1
  CHECK_THROWS_AS(p.validate(), config_error);
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), config_error);
  p.alpha = -0.1;
  CHECK_THROWS_AS(p.validate(), config_error);

  p = base_params();
  p.d = 0;
  CHECK_THROWS_AS(p.validate(), config_error);
  p = base_params();
  p.n = 0;
  CHECK_THROWS_AS(p.validate(), config_error);
  p = base_params();
  p.k = 0;
  CHECK_THROWS_AS(p.validate(), config_error);
  p = base_params();
  p.sigma = -1.0;
  CHECK_THROWS_AS(p.validate(), config_error);
  p = base_params();
  p.R = 0.0;
  CHECK_THROWS_AS(p.validate(), config_error);
}

TEST_CASE("sigma floor keeps radius schedules finite") {
  ProblemParams p = base_params();
  p.sigma = 0.0;
  p.R = 2.0;
  CHECK(p.sigma_floor() == doctest::Approx(2e-6));
  p.sigma = 0.7;
  CHECK(p.sigma_floor() == doctest::Approx(0.7));
}

TEST_CASE("covariate models parse by name and round-trip") {
  for (const char* name :
       {"standard-gaussian", "rademacher-product", "whitened-uniform-cube"}) {
    const CovariateModel cov = CovariateModel::parse(name);
    CHECK(cov.name() == name);
  }
  CHECK_THROWS_AS(CovariateModel::parse("cauchy"), config_error);
}

TEST_CASE("gaussian directional moment bounds are the odd double factorials") {
  const CovariateModel cov;
  CHECK(cov.q_for_degree(2) == doctest::Approx(1.0));
  CHECK(cov.q_for_degree(4) == doctest::Approx(3.0));
  CHECK(cov.q_for_degree(8) == doctest::Approx(105.0));
}

TEST_CASE("gaussian bound dominates the bounded models") {
  const CovariateModel g = CovariateModel::parse("standard-gaussian");
  for (const char* name : {"rademacher-product", "whitened-uniform-cube"}) {
    const CovariateModel cov = CovariateModel::parse(name);
    for (int deg : {2, 4, 8, 16}) {
      CHECK(cov.q_for_degree(deg) >= 1.0);
      CHECK(cov.q_for_degree(deg) <= g.q_for_degree(deg));
    }
  }
}

TEST_CASE("covariate samples match their distributions") {
  Rng r(31);
  const CovariateModel rad = CovariateModel::parse("rademacher-product");
  Vec mean = Vec::Zero(4);
  for (int i = 0; i < 2000; ++i) {
    const Vec x = rad.sample(4, r);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(x[j]) == doctest::Approx(1.0));
    mean += x / 2000.0;
  }
  CHECK(mean.norm() < 0.12);

  const CovariateModel cube = CovariateModel::parse("whitened-uniform-cube");
  double sq = 0.0;
  const double lim = std::sqrt(3.0) + 1e-12;
  for (int i = 0; i < 2000; ++i) {
    const Vec x = cube.sample(4, r);
    for (int j = 0; j < 4; ++j) REQUIRE(std::abs(x[j]) <= lim);
    sq += x.squaredNorm() / (4.0 * 2000.0);
  }
  CHECK(sq == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("clean batches satisfy the regression equation") {
  ProblemParams p = base_params();
  const CovariateModel cov;
  Vec beta(3);
  beta << 1.0, -2.0, 0.5;

  Rng r(42);
  const Batch b = sample_inlier_batch(p, cov, beta, r);
  REQUIRE(b.X.rows() == p.n);
  REQUIRE(b.X.cols() == p.d);
  REQUIRE(b.y.size() == p.n);
  CHECK((b.y - b.X * beta).norm() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  // the design and the noise draws must not depend on the regressor
  p.sigma = 0.3;
  Rng r1(42), r2(42);
  const Batch c1 = sample_inlier_batch(p, cov, beta, r1);
  const Batch c2 = sample_inlier_batch(p, cov, 2.0 * beta, r2);
  CHECK((c1.X - c2.X).norm() == 0.0);
  // identical noise up to the rounding of X beta itself
  CHECK(((c1.y - c1.X * beta) - (c2.y - c2.X * (2.0 * beta))).norm() ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("point-mass batches pin the batch statistic exactly") {
  ProblemParams p = base_params();
  AdversaryModel adv;
  adv.kind = AdversaryKind::PointMass;
  adv.target = Vec(3);
  adv.target << 4.0, 0.0, -3.0;

  Rng r(7);
  const Batch b = adv.make_outlier_batch(p, CovariateModel{}, r);
  Vec stat = Vec::Zero(3);
  for (int i = 0; i < p.n; ++i) stat += b.X.row(i).transpose() * b.y[i];
  stat /= p.n;
  CHECK((stat - adv.target).norm() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("decoy adversaries materialize a fixed committee") {
  AdversaryModel adv;
  adv.kind = AdversaryKind::DecoyRegressors;
  adv.decoy_count = 3;
  adv.decoy_norm = 5.0;

  Rng r(13);
  const AdversaryModel fixed = adv.materialize(4, r);
  REQUIRE(fixed.decoys.size() == 3);
  for (const Vec& v : fixed.decoys)
    CHECK(v.norm() == doctest::Approx(5.0).epsilon(1e-9));

  Rng r2(13);
  const AdversaryModel again = adv.materialize(4, r2);
  for (size_t i = 0; i < 3; ++i)
    CHECK((fixed.decoys[i] - again.decoys[i]).norm() == 0.0);
}

TEST_CASE("datasets carry parallel provenance and honest composition") {
  ProblemParams p = base_params();
  p.m = 200;
  p.sigma = 0.1;
  AdversaryModel adv;
  adv.kind = AdversaryKind::GaussianNoiseBatches;
  adv.scale = 3.0;

  Vec beta(3);
  beta << 1.0, 1.0, 0.0;
  Rng r(99);
  const Dataset ds = sample_dataset(p, CovariateModel{}, adv.materialize(p.d, r), beta, r);
  REQUIRE(ds.batches.size() == 200);
  REQUIRE(ds.provenance.size() == 200);
  int clean = 0;
  for (const Provenance& pv : ds.provenance)
    clean += pv.origin == BatchOrigin::Inlier ? 1 : 0;
  // Binomial(200, 0.5): beyond 6 sigma is generator breakage, not luck.
  CHECK(clean > 55);
  CHECK(clean < 145);

  p.alpha = 1.0;
  Rng r2(100);
  const Dataset all_clean =
      sample_dataset(p, CovariateModel{}, adv.materialize(p.d, r2), beta, r2);
  for (const Provenance& pv : all_clean.provenance)
    CHECK(pv.origin == BatchOrigin::Inlier);
}

TEST_CASE("regrouping singleton batches multiplies out the clean fraction") {
  ProblemParams p = base_params();
  p.n = 1;
  p.m = 60;
  p.alpha = 0.5;
  AdversaryModel adv;
  adv.kind = AdversaryKind::GaussianNoiseBatches;

  Vec beta(3);
  beta << 0.5, 0.0, 1.0;
  Rng r(17);
  const Dataset singles =
      sample_dataset(p, CovariateModel{}, adv.materialize(p.d, r), beta, r);
  const Dataset grouped = self_batching_reduce(singles, 3);

  REQUIRE(grouped.batches.size() == 20);
  CHECK(grouped.params.n == 3);
  CHECK(grouped.params.alpha == doctest::Approx(0.125));
  for (size_t g = 0; g < grouped.batches.size(); ++g) {
    bool all = true;
    for (int j = 0; j < 3; ++j)
      all = all &&
            singles.provenance[3 * g + j].origin == BatchOrigin::Inlier;
    CHECK((grouped.provenance[g].origin == BatchOrigin::Inlier) == all);
    CHECK((grouped.batches[g].X.row(1) - singles.batches[3 * g + 1].X.row(0)).norm() == 0.0);
  }
}
