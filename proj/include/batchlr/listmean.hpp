#pragma once

#include <vector>

#include "batchlr/common.hpp"
#include "batchlr/rng.hpp"

namespace batchlr {

/// Tuning for list_decode_mean. Defaults are the calibrated values used by
/// the acceptance suite and recorded in run manifests.
struct ListMeanConfig {
  double stop_cov_factor = 10.0;   // covariance gate: lambda_max <= this * M^(1/k)
  double cert_factor = 1.0;        // degree-2k gate: lambda_max <= this * M
  double list_factor = 8.0;        // list cap = ceil(list_factor / alpha)
  double split_mass_factor = 0.5;  // cluster floor = this * alpha * N points of weight
  double gap_factor = 1.0;         // minimum split gap = this * M^(1/(2k))
  double span_factor = 6.0;        // overlap split when the weight span exceeds this * robust sigma
  double overlap_factor = 1.5;     // overlap half-width in robust sigmas
  double dedup_factor = 1.0;       // merge radius = this * M^(1/(2k))
  bool deterministic_filter = false;  // remove the top 2% of scores instead of randomized removal
};

struct MeanCandidate {
  Vec mean;
  Vec support;       // final weight per input point, in [0, 1]
  double weight = 0; // total support weight at emission
  uint64_t branch = 0;
};

struct MeanCandidateList {
  std::vector<MeanCandidate> candidates;
  int input_size = 0;
  /// Weight removed by filter steps, per input point, summed over branches.
  Vec filtered_weight;
};

/// List-decodable mean estimation under a degree-2k moment bound M: returns
/// a small list of candidate means such that, whenever an alpha fraction of
/// the points is an i.i.d. sample from a distribution whose degree-2k
/// central moments are certifiably bounded by M, some candidate lands near
/// that sample's mean.
///
/// The estimator keeps a weight per point and loops: emit the weighted mean
/// once both the covariance gate and the degree-2k certificate pass; split
/// into two branches when either the projections onto the top covariance
/// direction or the point distances from the mean show a wide empty (or
/// near-empty) gap, or when cluster-sized masses sit far apart relative to
/// the robust bulk scale (straddling points survive on both sides of such
/// cuts); filter otherwise, removing weight with probability
/// proportional to the squared degree-k polynomial score along the
/// flattened matrix's top eigendirection.
/// Splits are capped at depth ceil(log2(1/alpha)) + 4, the output at
/// ceil(list_factor / alpha) candidates after near-duplicate merging.
///
/// Requires at least 2/alpha points. Weights only ever decrease.
MeanCandidateList list_decode_mean(const Mat& points, double alpha, int k,
                                   double M, Rng& rng,
                                   const ListMeanConfig& cfg = {});

MeanCandidateList list_decode_mean(const std::vector<Vec>& points, double alpha,
                                   int k, double M, Rng& rng,
                                   const ListMeanConfig& cfg = {});

}  // namespace batchlr
