#include <doctest.h>

#include <cmath>
#include <vector>

#include "batchlr/model.hpp"
#include "batchlr/pruning.hpp"

using namespace batchlr;

namespace {
// clean batches from `model` plus batches fitting `rival` exactly
std::vector<Batch> two_camp_batches(const Vec& model, const Vec& rival,
                                    int n_model, int n_rival, int pts,
                                    uint64_t seed) {
  ProblemParams p;
  p.d = static_cast<int>(model.size());
  p.n = pts;
  p.sigma = 0.0;
  Rng r(seed);
  const CovariateModel cov;
  std::vector<Batch> out;
  for (int i = 0; i < n_model + n_rival; ++i) {
    Rng rb = r.derive("b", static_cast<uint64_t>(i));
    out.push_back(sample_inlier_batch(p, cov, i < n_model ? model : rival, rb));
  }
  return out;
}
}  // namespace

TEST_CASE("batch squared error is the residual norm") {
  Batch b;
  b.X = Mat(2, 2);
  b.X << 1.0, 0.0, 0.0, 2.0;
  b.y = Vec(2);
  b.y << 3.0, 4.0;
  Vec beta(2);
  beta << 1.0, 1.0;
  // residuals: 3 - 1 = 2 and 4 - 2 = 2
  CHECK(batch_sq_error(beta, b) == doctest::Approx(8.0));
}

TEST_CASE("the separation radius matches its closed form") {
  ProblemParams p;
  p.d = 8;
  p.n = 10;
  p.m = 100;
  p.alpha = 0.1;
  p.sigma = 1.0;
  p.R = 2.0;
  p.k = 2;
  CHECK(candidate_separation(p, 3.0, 4.0) ==
        doctest::Approx(21.856406460551014).epsilon(1e-12));
  // alpha = 1 and k = 1 collapse to R + sigma sqrt(Q) / sqrt(n)
  p.alpha = 1.0;
  p.k = 1;
  CHECK(candidate_separation(p, 1.0, 1.0) ==
        doctest::Approx(p.R + 1.0 / std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("box simplex solves small instances exactly") {
  // unconstrained rows: the box corner is optimal
  {
    Mat A(0, 3);
    Vec up = Vec::Ones(3) * 2.0;
    const SimplexResult res = simplex_box_max(A, up, 1e18);
    CHECK(res.objective == doctest::Approx(6.0));
  }
  // z1 <= z2 with unit box: both at the top
  {
    Mat A(1, 2);
    A << 1.0, -1.0;
    const SimplexResult res = simplex_box_max(A, Vec::Ones(2), 1e18);
    CHECK(res.objective == doctest::Approx(2.0));
    CHECK((A * res.z).maxCoeff() <= 1e-9);
  }
  // 2 z1 <= z2: z = (1/2, 1)
  {
    Mat A(1, 2);
    A << 2.0, -1.0;
    const SimplexResult res = simplex_box_max(A, Vec::Ones(2), 1e18);
    CHECK(res.objective == doctest::Approx(1.5));
  }
  // contradictory pair forces z1 = z2 = 0... but z3 is free
  {
    Mat A(2, 3);
    A << 1.0, -0.5, 0.0, -0.5, 1.0, 0.0;
    const SimplexResult res = simplex_box_max(A, Vec::Ones(3), 1e18);
    CHECK(res.objective == doctest::Approx(1.0));
  }
}

TEST_CASE("box simplex dominates grid search on random instances") {
  Rng r(404);
  for (int inst = 0; inst < 60; ++inst) {
    Rng ri = r.derive("lp", static_cast<uint64_t>(inst));
    const int nv = 2 + static_cast<int>(ri.below(3));
    const int nr = static_cast<int>(ri.below(4));
    Mat A(nr, nv);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nv; ++j) A(i, j) = ri.normal();
    Vec up(nv);
    for (int j = 0; j < nv; ++j) up[j] = 0.5 + ri.uniform();

    const SimplexResult res = simplex_box_max(A, up, 1e18);
    // returned point must be feasible
    CHECK(res.z.minCoeff() >= -1e-9);
    CHECK((res.z - up).maxCoeff() <= 1e-9);
    if (nr > 0) CHECK((A * res.z).maxCoeff() <= 1e-7);
    CHECK(res.objective == doctest::Approx(res.z.sum()).epsilon(1e-9));

    // and must beat every feasible grid point
    const int levels = 7;
    std::vector<int> idx(nv, 0);
    double best = 0.0;
    while (true) {
      Vec z(nv);
      for (int j = 0; j < nv; ++j) z[j] = up[j] * idx[j] / (levels - 1);
      if (nr == 0 || (A * z).maxCoeff() <= 1e-12) best = std::max(best, z.sum());
      int j = 0;
      while (j < nv && ++idx[j] == levels) idx[j++] = 0;
      if (j == nv) break;
    }
    CHECK(res.objective >= best - 1e-7);
  }
}

TEST_CASE("feasibility separates supported candidates from abandoned ones") {
  ProblemParams p;
  p.d = 3;
  p.n = 6;
  p.m = 60;
  p.alpha = 0.5;
  p.sigma = 0.0;
  p.R = 4.0;
  p.k = 1;

  Vec mine(3), theirs(3);
  mine << 2.0, 0.0, 0.0;
  theirs << -30.0, 0.0, 0.0;
  const std::vector<Batch> T = two_camp_batches(mine, theirs, 30, 30, 6, 8080);
  const double sep = 10.0;

  // half the batches fit `mine` exactly: a witness exists
  const std::vector<Vec> L = {mine, theirs};
  const auto w_mine = ie_feasible(mine, L, T, p.alpha, sep);
  REQUIRE(w_mine.has_value());
  CHECK(w_mine->size() == 60);
  CHECK(w_mine->sum() >= 0.9 * p.alpha * 60 - 1e-9);
  CHECK(w_mine->minCoeff() >= -1e-12);
  CHECK(w_mine->maxCoeff() <= 1.0 + 1e-12);
  // weight on batches the rival wins (its error <= ours) must be tiny
  double rival_mass = 0.0;
  for (int i = 0; i < 60; ++i)
    if (batch_sq_error(theirs, T[i]) <= batch_sq_error(mine, T[i]))
      rival_mass += (*w_mine)[i];
  CHECK(rival_mass <= (p.alpha / 20.0) * w_mine->sum() + 1e-9);

  // a candidate no batch supports has no witness against a strong rival
  Vec orphan(3);
  orphan << 40.0, 40.0, 0.0;
  const auto w_orphan = ie_feasible(orphan, {orphan, mine, theirs}, T, p.alpha, sep);
  CHECK_FALSE(w_orphan.has_value());
}

TEST_CASE("rivals inside the separation radius are not rivals") {
  // both candidates sit on the same clean cluster; each is feasible because
  // the other is too close to count against it
  ProblemParams p;
  p.d = 2;
  p.n = 5;
  p.alpha = 0.5;
  p.sigma = 0.0;
  p.R = 2.0;
  p.k = 1;
  Vec a(2), b(2);
  a << 1.0, 0.0;
  b << 1.2, 0.0;
  const std::vector<Batch> T = two_camp_batches(a, a, 40, 0, 5, 99);
  const auto wa = ie_feasible(a, {a, b}, T, p.alpha, 5.0);
  const auto wb = ie_feasible(b, {a, b}, T, p.alpha, 5.0);
  CHECK(wa.has_value());
  CHECK(wb.has_value());
}

TEST_CASE("pruning keeps one well-separated representative per camp") {
  ProblemParams p;
  p.d = 3;
  p.n = 8;
  p.m = 80;
  p.alpha = 0.5;
  p.sigma = 0.5;
  p.R = 3.0;
  p.k = 1;
  const double Q = CovariateModel{}.q_for_degree(2);
  const double sep = candidate_separation(p, Q, 4.0);

  Vec beta(3);
  beta << 2.0, -1.0, 0.0;
  Vec rival = beta;
  rival[0] += 3.0 * sep;
  const std::vector<Batch> T = two_camp_batches(beta, rival, 40, 40, 8, 1234);

  std::vector<Vec> L;
  L.push_back(beta + Vec::Constant(3, 0.05));
  L.push_back(beta - Vec::Constant(3, 0.05));  // near-duplicate
  L.push_back(rival);
  Vec junk = beta;
  junk[1] += 10.0 * sep;  // no batch fits: infeasible
  L.push_back(junk);

  const std::vector<int> kept = prune_indices(L, T, p, Q, 4.0);
  REQUIRE(!kept.empty());
  const std::vector<Vec> out = prune(L, T, p, Q, 4.0);
  REQUIRE(out.size() == kept.size());
  for (size_t i = 0; i < kept.size(); ++i)
    CHECK((out[i] - L[kept[i]]).norm() == 0.0);

  bool has_mine = false, has_rival = false;
  for (const Vec& v : out) {
    if ((v - beta).norm() < 1.0) has_mine = true;
    if ((v - rival).norm() < 1.0) has_rival = true;
    CHECK((v - junk).norm() > 1.0);
  }
  CHECK(has_mine);
  CHECK(has_rival);

  // near-duplicates collapse: at most one survivor within sep of beta
  int close = 0;
  for (const Vec& v : out)
    close += (v - beta).norm() < sep ? 1 : 0;
  CHECK(close == 1);

  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = i + 1; j < out.size(); ++j)
      CHECK((out[i] - out[j]).norm() >= sep);

  CHECK(out.size() <= static_cast<size_t>(std::ceil(4.0 / p.alpha)) + 1);
}
