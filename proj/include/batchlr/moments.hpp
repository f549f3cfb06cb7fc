#pragma once

#include <vector>

#include "batchlr/common.hpp"
#include "batchlr/model.hpp"
#include "batchlr/rng.hpp"

namespace batchlr {

/// Per-batch average of x*y. On a clean batch this is an unbiased estimate
/// of the regressor, since E[x x^T] = I.
struct BatchStatistic {
  Vec z;
  int source = -1;  // index of the originating batch
};

/// Order-2t central moment tensor of a point cloud, flattened to a
/// d^t x d^t symmetric matrix. Row/column indices enumerate multi-indices
/// (i_1, ..., i_t) lexicographically. Its top eigenvalue upper-bounds every
/// directional moment E[<u, z - mu>^{2t}] because unit u gives a unit
/// flattening u^(x)t.
struct FlattenedMomentMatrix {
  int t = 1;
  Vec mu;
  Mat mat;
};

struct MomentCertificate {
  int degree = 2;          // 2k
  double bound = 0.0;      // M
  double lambda_max = 0.0;
  bool passed = false;
};

struct MzReport {
  int k = 0;
  int n = 0;
  int trials = 0;
  double lhs = 0.0;    // worst direction's k-th moment of the centered n-sum
  double bound = 0.0;  // (k n)^{k/2} times the per-sample moment, same direction
  double ratio = 0.0;  // max over directions of lhs / bound
  bool violated = false;
};

struct BatchMomentReport {
  MomentCertificate cert;      // degree-2k certificate at the theory bound
  double moment_bound = 0.0;   // the M it was checked against
  double cov_lambda_max = 0.0;
  double cov_bound = 0.0;      // cov_factor * (||beta*||^2 + sigma^2) / n
  bool cov_passed = false;
};

/// Mean of x_i * y_i over the batch, accumulated coordinate-wise with a
/// fixed cascade order so results are reproducible bit for bit.
BatchStatistic batch_average(const Batch& b, int source_index = -1);

std::vector<BatchStatistic> batch_averages(const std::vector<Batch>& batches);

/// v^(x)t flattened lexicographically; index of (i_1..i_t) is
/// sum_j i_j d^(t-j).
Vec tensor_power(const Vec& v, int t);

/// Central moment matrix about the caller-supplied center mu.
/// Requires d^t <= 4096.
FlattenedMomentMatrix empirical_moment_matrix(const std::vector<Vec>& points,
                                              int t, const Vec& mu);

/// Weighted variant used by the estimator. Weights need not be normalized;
/// zero-weight points are skipped.
FlattenedMomentMatrix weighted_moment_matrix(const Mat& points, const Vec& w,
                                             int t, const Vec& mu);

/// Eigenvalue certificate: passes when the degree-2k flattened matrix about
/// the empirical mean has top eigenvalue <= M. Passing soundly bounds every
/// directional moment by M; failing is allowed to be conservative by up to
/// the flattening slack (order d^{k/2}).
MomentCertificate certify_moment_bound(const std::vector<Vec>& points, int k,
                                       double M);

/// Theory-shaped bound on the degree-2k central moments of clean batch
/// statistics: C * (2k)^{2k} / n^k * Q * (sigma^{2k} + 2 * radius^{2k}).
double batch_moment_bound(int n, int k, double Q, double sigma, double radius,
                          double C);

/// Monte Carlo check of the n-sum moment inequality
///   E[(sum_i (p_i - E p))^k] <= (k n)^{k/2} * E[(p - E p)^k]
/// for p = <v, x> * y along random unit directions v. Flags a violation when
/// the worst ratio exceeds 1.2.
MzReport verify_mz_bound(const CovariateModel& cov, const Vec& beta,
                         double sigma, int n, int k, int trials, Rng& rng);

/// Diagnostic on clean batch statistics: the degree-2k certificate at the
/// theory bound, plus a covariance check against
/// cov_factor * (||beta*||^2 + sigma^2) / n.
BatchMomentReport check_batch_moment_bounds(const std::vector<BatchStatistic>& stats,
                                            const ProblemParams& p, double Q,
                                            const Vec& beta_star,
                                            double C = 8.0,
                                            double cov_factor = 3.0);

}  // namespace batchlr
