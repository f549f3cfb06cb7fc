#include "batchlr/model.hpp"

#include <algorithm>
#include <cmath>

namespace batchlr {

void ProblemParams::validate() const {
  require_arg(d >= 1, "params: d must be >= 1");
  require_arg(n >= 1, "params: n must be >= 1");
  require_arg(m >= 1, "params: m must be >= 1");
  bool alpha_ok = (alpha > 0.0 && alpha <= 0.5) || alpha == 1.0;
  require_arg(alpha_ok, "params: alpha must lie in (0, 1/2], or be exactly 1");
  require_arg(sigma >= 0.0, "params: sigma must be >= 0");
  require_arg(R > 0.0, "params: R must be positive");
  require_arg(sigma <= R, "params: sigma must not exceed R");
  require_arg(k >= 1 && k <= 8, "params: k must lie in [1, 8]");
}

double CovariateModel::q_for_degree(int degree) const {
  require_arg(degree >= 2 && degree % 2 == 0, "covariates: degree must be even and >= 2");
  require_arg(degree <= max_degree, "covariates: degree exceeds the model's certified range");
  // Gaussian directional moment; dominates the product-of-signs and the
  // whitened cube as well (both are sub-gaussian with variance proxy 1).
  return double_factorial(degree - 1);
}

Vec CovariateModel::sample(int d, Rng& rng) const {
  Vec x(d);
  switch (kind) {
    case CovariateKind::StandardGaussian:
      for (int i = 0; i < d; ++i) x[i] = rng.normal();
      break;
    case CovariateKind::RademacherProduct:
      for (int i = 0; i < d; ++i) x[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      break;
    case CovariateKind::WhitenedUniformCube: {
      // uniform on [-sqrt(3), sqrt(3)], unit variance per coordinate
      const double s = 1.7320508075688772935;
      for (int i = 0; i < d; ++i) x[i] = s * (2.0 * rng.uniform() - 1.0);
      break;
    }
  }
  return x;
}

std::string CovariateModel::name() const {
  switch (kind) {
    case CovariateKind::StandardGaussian: return "standard-gaussian";
    case CovariateKind::RademacherProduct: return "rademacher-product";
    case CovariateKind::WhitenedUniformCube: return "whitened-uniform-cube";
  }
  return "?";
}

CovariateModel CovariateModel::parse(const std::string& name) {
  CovariateModel c;
  if (name == "standard-gaussian") c.kind = CovariateKind::StandardGaussian;
  else if (name == "rademacher-product") c.kind = CovariateKind::RademacherProduct;
  else if (name == "whitened-uniform-cube") c.kind = CovariateKind::WhitenedUniformCube;
  else throw config_error("covariates: unknown kind '" + name + "'");
  return c;
}

AdversaryModel AdversaryModel::materialize(int d, Rng& rng) const {
  AdversaryModel out = *this;
  if (kind == AdversaryKind::DecoyRegressors && out.decoys.empty()) {
    require_arg(decoy_count > 0, "adversary: decoy-regressors needs decoys or a decoy count");
    Rng r = rng.derive("decoys");
    for (int i = 0; i < decoy_count; ++i)
      out.decoys.push_back(decoy_norm * r.unit_vector(d));
  }
  for (const Vec& b : out.decoys)
    require_arg(b.size() == d, "adversary: decoy dimension mismatch");
  if (kind == AdversaryKind::PointMass)
    require_arg(target.size() == d, "adversary: point-mass target dimension mismatch");
  return out;
}

Batch AdversaryModel::make_outlier_batch(const ProblemParams& p,
                                         const CovariateModel& cov,
                                         Rng& rng) const {
  switch (kind) {
    case AdversaryKind::DecoyRegressors: {
      require_state(!decoys.empty(), "adversary: decoys not materialized");
      const Vec& b = decoys[rng.below(decoys.size())];
      // identical generation path to a clean batch
      return sample_inlier_batch(p, cov, b, rng);
    }
    case AdversaryKind::PointMass: {
      // every point contributes x*y = target, so the batch statistic equals
      // the target exactly regardless of n
      Batch batch;
      batch.X.resize(p.n, p.d);
      batch.y.resize(p.n);
      double nrm = target.norm();
      Vec dir = nrm > 0 ? Vec(target / nrm) : Vec(Vec::Unit(p.d, 0));
      for (int i = 0; i < p.n; ++i) {
        batch.X.row(i) = dir.transpose();
        batch.y[i] = nrm;
      }
      return batch;
    }
    case AdversaryKind::HeavyTailLabels: {
      Batch batch;
      batch.X.resize(p.n, p.d);
      batch.y.resize(p.n);
      for (int i = 0; i < p.n; ++i) {
        batch.X.row(i) = cov.sample(p.d, rng).transpose();
        // standard Cauchy as a ratio of normals, scaled
        double den = rng.normal();
        while (std::abs(den) < 1e-12) den = rng.normal();
        batch.y[i] = scale * rng.normal() / den;
      }
      return batch;
    }
    case AdversaryKind::GaussianNoiseBatches: {
      Batch batch;
      batch.X.resize(p.n, p.d);
      batch.y.resize(p.n);
      for (int i = 0; i < p.n; ++i) {
        batch.X.row(i) = cov.sample(p.d, rng).transpose();
        batch.y[i] = scale * rng.normal();
      }
      return batch;
    }
  }
  throw invariant_error("adversary: unreachable kind");
}

std::string AdversaryModel::name() const {
  switch (kind) {
    case AdversaryKind::DecoyRegressors: return "decoy-regressors";
    case AdversaryKind::PointMass: return "point-mass";
    case AdversaryKind::HeavyTailLabels: return "heavy-tail-labels";
    case AdversaryKind::GaussianNoiseBatches: return "gaussian-noise-batches";
  }
  return "?";
}

Batch sample_inlier_batch(const ProblemParams& p, const CovariateModel& cov,
                          const Vec& beta_star, Rng& rng) {
  require_arg(beta_star.size() == p.d, "sample_inlier_batch: beta dimension mismatch");
  Batch b;
  b.X.resize(p.n, p.d);
  b.y.resize(p.n);
  for (int i = 0; i < p.n; ++i) {
    Vec x = cov.sample(p.d, rng);
    double noise = rng.normal();  // drawn unconditionally to keep streams aligned
    b.X.row(i) = x.transpose();
    b.y[i] = x.dot(beta_star) + p.sigma * noise;
  }
  return b;
}

Dataset sample_dataset(const ProblemParams& p, const CovariateModel& cov,
                       const AdversaryModel& adv, const Vec& beta_star,
                       Rng& rng) {
  p.validate();
  require_arg(beta_star.norm() <= p.R * (1.0 + 1e-12),
              "sample_dataset: ||beta*|| exceeds R");
  Dataset ds;
  ds.params = p;
  ds.cov = cov;
  ds.beta_star = beta_star;
  ds.batches.reserve(p.m);
  ds.provenance.reserve(p.m);
  for (int b = 0; b < p.m; ++b) {
    Rng rb = rng.derive("batch", static_cast<uint64_t>(b));
    bool inlier = p.alpha >= 1.0 || rb.uniform() < p.alpha;
    if (inlier) {
      ds.batches.push_back(sample_inlier_batch(p, cov, beta_star, rb));
      ds.provenance.push_back({BatchOrigin::Inlier, "inlier"});
    } else {
      ds.batches.push_back(adv.make_outlier_batch(p, cov, rb));
      ds.provenance.push_back({BatchOrigin::Outlier, adv.name()});
    }
  }
  // Bernoulli placement is already exchangeable; shuffle anyway so batch
  // index carries no information.
  Rng rs = rng.derive("shuffle");
  for (int i = p.m - 1; i > 0; --i) {
    int j = static_cast<int>(rs.below(static_cast<uint64_t>(i) + 1));
    std::swap(ds.batches[i], ds.batches[j]);
    std::swap(ds.provenance[i], ds.provenance[j]);
  }
  return ds;
}

Dataset self_batching_reduce(const Dataset& singles, int n) {
  require_arg(n >= 1, "reduce: n must be >= 1");
  const int m1 = static_cast<int>(singles.batches.size());
  require_arg(m1 % n == 0, "reduce: point count not divisible by n");
  for (const Batch& b : singles.batches)
    require_arg(b.X.rows() == 1, "reduce: input batches must hold exactly one point");

  Dataset out;
  out.params = singles.params;
  out.params.n = n;
  out.params.m = m1 / n;
  out.params.alpha = ipow(singles.params.alpha, n);
  out.cov = singles.cov;
  out.beta_star = singles.beta_star;
  const int d = singles.params.d;
  for (int g = 0; g < m1 / n; ++g) {
    Batch b;
    b.X.resize(n, d);
    b.y.resize(n);
    bool all_clean = true;
    for (int i = 0; i < n; ++i) {
      const Batch& s = singles.batches[g * n + i];
      b.X.row(i) = s.X.row(0);
      b.y[i] = s.y[0];
      all_clean = all_clean &&
                  singles.provenance[g * n + i].origin == BatchOrigin::Inlier;
    }
    out.batches.push_back(std::move(b));
    out.provenance.push_back(
        {all_clean ? BatchOrigin::Inlier : BatchOrigin::Outlier,
         all_clean ? "inlier" : "mixed-group"});
  }
  return out;
}

}  // namespace batchlr
