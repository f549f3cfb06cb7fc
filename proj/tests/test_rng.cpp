#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "batchlr/rng.hpp"

using namespace batchlr;

TEST_CASE("streams are frozen across releases") {
  // Pinned first draws for seed 1. A change here means every stored seed in
  // the acceptance suite silently re-rolls, so treat a failure as a breaking
  // change, not a tolerance issue.
  Rng r(1);
  CHECK(r.uniform() == doctest::Approx(0.53246524338255163).epsilon(1e-15));
  CHECK(r.uniform() == doctest::Approx(0.89269856320577545).epsilon(1e-15));
  Rng r2(1);
  CHECK(r2.normal() == doctest::Approx(0.96331860788207446).epsilon(1e-15));
  CHECK(mix64(0) == 16294208416658607535ull);
  CHECK(mix64(1) == 10451216379200822465ull);
}

TEST_CASE("same seed gives identical streams") {
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("derive is label-addressed and non-consuming") {
  const Rng root(5);
  Rng a = root.derive("x", 1);
  Rng b = root.derive("x", 1);
  Rng c = root.derive("x", 2);
  Rng d = root.derive("y", 1);
  CHECK(a.uniform() == b.uniform());
  const double va = Rng(root.derive("x", 1)).uniform();
  CHECK(va != c.uniform());
  CHECK(va != Rng(root.derive("y", 1)).uniform());
  (void)d;

  // deriving from a stream must not advance it
  Rng p(9), q(9);
  (void)p.derive("child", 3);
  CHECK(p.uniform() == q.uniform());

  // all three index slots address distinct children
  std::set<double> firsts;
  for (uint64_t i = 0; i < 3; ++i)
    for (uint64_t j = 0; j < 3; ++j)
      for (uint64_t l = 0; l < 3; ++l)
        firsts.insert(Rng(root.derive("ijk", i, j, l)).uniform());
  CHECK(firsts.size() == 27);
}

TEST_CASE("uniform and normal have sane ranges and moments") {
  Rng r(123);
  double sum = 0.0, sq = 0.0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sq += u * u;
  }
  CHECK(sum / N == doctest::Approx(0.5).epsilon(0.02));
  CHECK(sq / N - (sum / N) * (sum / N) == doctest::Approx(1.0 / 12).epsilon(0.05));

  Rng g(321);
  double gs = 0.0, gq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = g.normal();
    gs += x;
    gq += x * x;
  }
  CHECK(gs / N == doctest::Approx(0.0).scale(1.0).epsilon(0.03));
  CHECK(gq / N == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("below is in range and covers small supports") {
  Rng r(11);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const uint64_t v = r.below(7);
    REQUIRE(v < 7);
    ++counts[static_cast<int>(v)];
  }
  for (int c : counts) CHECK(c > 800);  // expected 1000 each
}

TEST_CASE("unit vectors are unit") {
  Rng r(2);
  for (int d : {1, 2, 5, 16}) {
    const Vec u = r.unit_vector(d);
    REQUIRE(u.size() == d);
    CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}
