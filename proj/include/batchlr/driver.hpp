#pragma once

#include <functional>
#include <string>
#include <vector>

#include "batchlr/common.hpp"
#include "batchlr/listmean.hpp"
#include "batchlr/model.hpp"
#include "batchlr/rng.hpp"

namespace batchlr {

/// Supplies `count` fresh batches. The driver hands over a derived generator
/// per call, so a deterministic source makes every run reproducible.
using BatchSource = std::function<std::vector<Batch>(Rng, std::size_t)>;

struct DriverConfig {
  std::size_t batches_per_call = 0;  // 0: use params.m
  std::size_t prune_batches = 0;     // holdout per level; 0: use params.m
  double tau = 0.0;   // failure budget; 0: 0.001 / max(1, log2(R / sigma_floor))
  double c0 = 1.0;    // radius schedule runs until R * 2^(1-t) <= 2 sigma_floor / c0
  double cert_const = 8.0;  // C in the clean-batch moment bound
  double sep_factor = 4.0;  // pruning separation multiplier
  std::size_t max_list = 0;  // working list cap between levels; 0: ceil(8/alpha)
  ListMeanConfig listmean;
  std::vector<Vec> initial;  // starting candidates; empty: the origin
  bool skip_prune = false;
  std::function<void(const std::string&)> progress;  // optional log sink
};

struct DriverResult {
  std::vector<Vec> candidates;   // final list
  std::vector<double> weights;   // support weight per candidate (0 for anchors)
  std::size_t levels = 0;        // refinement levels run
  std::size_t repeats = 0;       // repeats per candidate per level
  std::size_t batches_drawn = 0;
  bool prune_fallback = false;   // some level's pruning rejected everything
  std::vector<std::string> warnings;
};

/// Batches with labels replaced by residuals against a candidate regressor.
/// The statistic of a residualized clean batch estimates beta* - beta.
std::vector<Batch> residualize(const std::vector<Batch>& batches,
                               const Vec& beta);

/// Index of the per-batch-statistic norm used as the data-driven radius: the
/// (1 - alpha/4) quantile, which outliers can inflate but not deflate below
/// the clean cluster's own scale.
double radius_quantile(std::vector<double> norms, double alpha);

/// One refinement pass: residualize against a candidate, form batch
/// statistics, bound their moments from the radius, and list-decode their
/// mean. Returned means are increments; add the candidate back to get
/// regressors.
MeanCandidateList refine_candidate(const std::vector<Batch>& batches,
                                   const Vec& beta, const ProblemParams& p,
                                   double Q, double radius_cap, Rng rng,
                                   const DriverConfig& cfg);

/// Full estimator: halving radius schedule; each level refines every
/// candidate with repeats on fresh batches, re-seeds the initial anchors,
/// and prunes the merged list by feasibility on a held-out draw. Q bounds
/// the covariates' degree-2k directional moment.
DriverResult batch_list_decode(const BatchSource& source,
                               const ProblemParams& p, double Q,
                               const Rng& rng, const DriverConfig& cfg = {});

}  // namespace batchlr
