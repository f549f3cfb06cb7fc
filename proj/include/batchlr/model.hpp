#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "batchlr/common.hpp"
#include "batchlr/rng.hpp"

namespace batchlr {

/// Instance parameters for regression from batches. Each batch holds n
/// labeled points y = <beta*, x> + noise; an alpha fraction of batches is
/// clean and the rest is arbitrary.
struct ProblemParams {
  int d = 1;             // covariate dimension
  int n = 1;             // points per batch
  int m = 1;             // batches per generated dataset
  double alpha = 1.0;    // clean-batch fraction; (0, 1/2] or exactly 1
  double sigma = 0.0;    // label noise level on clean batches
  double R = 1.0;        // norm bound on the target regressor
  int k = 1;             // moment half-degree used by the estimator
  uint64_t seed = 0;

  void validate() const;

  /// sigma bounded away from zero so radius schedules stay finite.
  double sigma_floor() const { return std::max(sigma, 1e-6 * R); }
};

enum class CovariateKind { StandardGaussian, RademacherProduct, WhitenedUniformCube };

/// Covariate distribution with identity second moment and bounded
/// directional moments. q_for_degree(2t) bounds E[<u, X>^{2t}] for unit u;
/// the gaussian value (2t-1)!! dominates all three models.
struct CovariateModel {
  CovariateKind kind = CovariateKind::StandardGaussian;
  int max_degree = 16;  // largest even degree the bound is claimed for

  double q_for_degree(int degree) const;
  Vec sample(int d, Rng& rng) const;
  std::string name() const;
  static CovariateModel parse(const std::string& name);
};

/// One batch as the estimator sees it: no origin information.
struct Batch {
  Mat X;  // n rows, d columns, one point per row
  Vec y;  // n labels
};

enum class BatchOrigin { Inlier, Outlier };

struct Provenance {
  BatchOrigin origin = BatchOrigin::Inlier;
  std::string detail;  // generator tag, e.g. "decoy-regressors"
};

enum class AdversaryKind {
  DecoyRegressors,
  PointMass,
  HeavyTailLabels,
  GaussianNoiseBatches,
};

/// Outlier batch generator. Decoy batches run through the same code path as
/// clean ones with a decoy regressor in place of beta*; point-mass batches
/// concentrate every batch statistic at one adversarial point; the other two
/// produce label noise decoupled from the covariates.
struct AdversaryModel {
  AdversaryKind kind = AdversaryKind::GaussianNoiseBatches;
  std::vector<Vec> decoys;  // decoy-regressors
  int decoy_count = 0;      // when decoys is empty: draw this many at materialize()
  double decoy_norm = 1.0;
  Vec target;               // point-mass
  double scale = 1.0;       // heavy-tail-labels, gaussian-noise-batches

  /// Resolve generated decoys once per run so repeated sampler calls see a
  /// fixed adversary.
  AdversaryModel materialize(int d, Rng& rng) const;

  Batch make_outlier_batch(const ProblemParams& p, const CovariateModel& cov,
                           Rng& rng) const;
  std::string name() const;
};

/// A generated dataset. Provenance lives in a parallel array rather than on
/// Batch itself, so estimation code cannot see it by construction; only the
/// harness and the oracles hold Dataset.
struct Dataset {
  ProblemParams params;
  CovariateModel cov;
  Vec beta_star;
  std::vector<Batch> batches;
  std::vector<Provenance> provenance;
};

/// One clean batch: X rows from cov, y = X beta* + sigma * noise. Covariate
/// and noise draws do not depend on beta*, so equal seeds give equal designs
/// across different regressors.
Batch sample_inlier_batch(const ProblemParams& p, const CovariateModel& cov,
                          const Vec& beta_star, Rng& rng);

/// m batches, each independently clean with probability alpha, in randomized
/// order. The adversary must already be materialized.
Dataset sample_dataset(const ProblemParams& p, const CovariateModel& cov,
                       const AdversaryModel& adv, const Vec& beta_star,
                       Rng& rng);

/// Regroup a dataset of singleton batches into batches of n consecutive
/// points. A grouped batch is clean only when all members are, so the
/// effective clean fraction drops to alpha^n (recorded in the result).
Dataset self_batching_reduce(const Dataset& singles, int n);

}  // namespace batchlr
