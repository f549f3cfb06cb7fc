#pragma once

#include <optional>
#include <vector>

#include "batchlr/common.hpp"
#include "batchlr/model.hpp"

namespace batchlr {

/// Squared residual of a candidate on one batch, sum over its points.
double batch_sq_error(const Vec& beta, const Batch& b);

/// Minimum pairwise distance at which two candidates count as rivals:
/// sep_factor * (R + k * alpha^(-1/k) * sigma * Q^(1/k) / sqrt(n)).
double candidate_separation(const ProblemParams& p, double Q,
                            double sep_factor = 4.0);

/// Exact maximization of sum(z) subject to A z <= 0 (row-wise), elementwise
/// 0 <= z <= upper. Bounded-variable primal simplex with Bland's rule; the
/// returned point is feasible and optimal up to the pivot tolerance. Stops
/// early once the objective reaches early_stop (any feasible point at that
/// value is enough for the caller).
struct SimplexResult {
  double objective = 0.0;
  Vec z;
};
SimplexResult simplex_box_max(const Mat& A, const Vec& upper,
                              double early_stop);

/// Batch-weight feasibility test for a candidate against its rivals in L
/// (members at distance >= separation). Searches for weights W over T with
///   sum_B W(B) >= 0.9 * alpha * |T|,
/// and, for every rival beta', weight on batches where the rival's squared
/// error is at most the candidate's (ties included) at most
/// (alpha/20) * sum_B W(B). Returns a verified witness or nothing.
std::optional<Vec> ie_feasible(const Vec& beta, const std::vector<Vec>& L,
                               const std::vector<Batch>& T, double alpha,
                               double separation);

/// Two-phase list pruning: drop candidates with no feasible weighting, then
/// scan the survivors in order and keep each unless it lies within the
/// separation of an already-kept one. Output size is at most
/// ceil(4/alpha) + 1 (enforced; the feasibility system cannot support more
/// pairwise-separated candidates).
std::vector<Vec> prune(const std::vector<Vec>& L, const std::vector<Batch>& T,
                       const ProblemParams& p, double Q,
                       double sep_factor = 4.0);

/// prune, but reporting which input indices survived.
std::vector<int> prune_indices(const std::vector<Vec>& L,
                               const std::vector<Batch>& T,
                               const ProblemParams& p, double Q,
                               double sep_factor = 4.0);

}  // namespace batchlr
