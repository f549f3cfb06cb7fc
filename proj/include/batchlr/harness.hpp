#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "batchlr/common.hpp"
#include "batchlr/driver.hpp"
#include "batchlr/model.hpp"

namespace batchlr {

/// Adversary as configured. Decoy placement comes in three forms: explicit
/// vectors, a fixed norm (drawn directions), or a fixed distance from the
/// trial's regressor (resolved per trial, so the geometry is controlled).
struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::DecoyRegressors;
  int decoy_count = 1;
  double decoy_norm = 0.0;
  double decoy_distance = 0.0;
  std::vector<Vec> decoys;
  Vec target;         // point-mass
  double scale = 1.0; // heavy-tail-labels, gaussian-noise-batches
};

struct SweepSpec {
  std::vector<int> d, n, k, m;
  std::vector<double> alpha;
  bool empty() const {
    return d.empty() && n.empty() && k.empty() && m.empty() && alpha.empty();
  }
};

/// One JSON document drives every subcommand. Parsing is strict: unknown
/// fields anywhere are rejected; missing fields take the defaults below.
struct ExperimentConfig {
  ProblemParams problem;
  CovariateModel cov;
  AdversarySpec adversary;
  DriverConfig driver;              // includes the listmean block
  double beta_norm = 1.0;           // per-trial regressor norm
  std::optional<Vec> beta_values;   // explicit regressor, overrides the norm
  int trials = 1;
  int reduce_group = 0;             // batch size for the reduce subcommand
  SweepSpec sweep;
  std::string dataset_path;         // replay a stored dataset when non-empty

  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;  // canonical: stable keys, full fields
  std::string hash() const;          // fnv1a of the canonical text
};

struct TrialResult {
  int trial = 0;
  double min_error = 0.0;
  int list_size = 0;
  double wall_ms = 0.0;
  double baseline_error = -1.0;  // inlier-only least squares; -1 if degenerate
  std::vector<Vec> candidates;
  std::vector<double> weights;
  std::size_t batches_drawn = 0;
  bool prune_fallback = false;
  Vec beta_star;
};

/// One seeded trial: fix the regressor and adversary, run the full driver on
/// fresh-batch draws, and score against the generator's regressor. All
/// randomness derives from problem.seed, the cell parameters, and the trial
/// index, so adding trials never perturbs existing ones.
TrialResult run_trial(const ExperimentConfig& cfg, int trial);

/// Same, but with every batch built by regrouping size-1 batches into groups
/// of cfg.reduce_group; the driver sees clean fraction alpha^group.
TrialResult run_reduce_trial(const ExperimentConfig& cfg, int trial);

/// Sweep expansion in document order: d, alpha, k, n, m. Empty axes keep the
/// base value.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& cfg);

struct SweepRow {
  int n = 0;
  double alpha = 0.0;
  int k = 0;
  int m = 0;
  int trial = 0;
  double min_error = 0.0;
  int list_size = 0;
  double wall_ms = 0.0;
};

/// Header "n,alpha,k,m,trial,min_error,list_size,wall_ms"; 17-digit doubles.
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct MzCheckReport {
  int exact_cases = 0;
  int exact_violations = 0;
  int mc_trials = 0;
  int mc_violations = 0;
};
struct CertCheckReport {
  int cases = 0;
  int passes = 0;
  int soundness_violations = 0;  // certificate passed but a direction beat M
  int sandwich_violations = 0;   // directional sup exceeded lambda_max
};
struct PruneCheckReport {
  int cases = 0;
  int survival_hits = 0;          // output within 2*sep of beta*
  int separation_violations = 0;  // an output pair closer than sep
};

/// Exhaustive two-atom moment-inequality sweep plus Monte Carlo trials on
/// Gaussian covariates.
MzCheckReport run_mz_checks(uint64_t seed);
/// Randomized certificate instances; checks pass => directional sup <= M and
/// the eigenvalue always dominates the directional sup.
CertCheckReport run_cert_checks(uint64_t seed, int instances);
/// Seeded pruning instances with guaranteed clean mass and a near-true
/// candidate in the list.
PruneCheckReport run_prune_checks(uint64_t seed, int instances);

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<uint64_t> seed;
  std::optional<int> trials;
  bool deterministic_filter = false;
};

/// Runs one subcommand end to end (file I/O included) and returns a process
/// exit code: 0 ok, 2 config error, 3 invariant or check failure, 4 I/O.
/// Failure text is placed in error_out when non-null.
int run_subcommand(const std::string& name, const CliOptions& opt,
                   std::string* error_out);

}  // namespace batchlr
