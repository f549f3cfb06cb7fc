#pragma once

#include <string>
#include <vector>

#include "batchlr/common.hpp"
#include "batchlr/model.hpp"
#include "batchlr/rng.hpp"

namespace batchlr {

/// Comparison of a module value against an independent brute-force value.
struct OracleReport {
  std::string name;
  double brute_force_value = 0.0;
  double module_value = 0.0;
  double relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

OracleReport make_oracle_report(const std::string& name, double brute_force,
                                double module_value, double tolerance);

/// Best directional central moment sup_u E[<u, x - mean>^{2k}] found by
/// random search plus the top eigendirection of the flattened moment matrix
/// projected to its nearest rank-one direction. A lower bound on the true
/// sup, and never above the flattened top eigenvalue. Meant for d <= 6.
double directional_moment_sup(const std::vector<Vec>& points, int k,
                              int num_directions, Rng& rng);

struct LsqResult {
  Vec beta;
  bool degenerate = false;  // design matrix was rank deficient
};

/// Ordinary least squares over the pooled points of the selected batches.
/// Rank deficiency is reported, not thrown; the minimum-norm solution is
/// returned in that case.
LsqResult subset_least_squares(const std::vector<Batch>& batches,
                               const std::vector<int>& subset);

struct MzExact {
  double lhs = 0.0;  // E[(sum_{i<=n} (a_i - mean))^k], exact enumeration
  double rhs = 0.0;  // (k n)^{k/2} * E[(a - mean)^k]
};

/// Exact moment computation for an n-fold sum of i.i.d. draws from a finite
/// scalar support. Enumerates all |support|^n outcomes; requires the count
/// to stay within 4096 and at most 4 atoms.
MzExact mz_exact_tiny(const std::vector<double>& atoms,
                      const std::vector<double>& probs, int n, int k);

}  // namespace batchlr
