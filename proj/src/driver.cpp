#include "batchlr/driver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "batchlr/moments.hpp"
#include "batchlr/pruning.hpp"

namespace batchlr {

std::vector<Batch> residualize(const std::vector<Batch>& batches,
                               const Vec& beta) {
  std::vector<Batch> out;
  out.reserve(batches.size());
  for (const Batch& b : batches) {
    require_arg(b.X.cols() == beta.size(), "residualize: dimension mismatch");
    out.push_back(Batch{b.X, b.y - b.X * beta});
  }
  return out;
}

double radius_quantile(std::vector<double> norms, double alpha) {
  require_arg(!norms.empty(), "radius_quantile: no norms");
  require_arg(alpha > 0.0 && alpha <= 1.0, "radius_quantile: bad alpha");
  std::sort(norms.begin(), norms.end());
  const double q = 1.0 - alpha / 4.0;
  const auto last = static_cast<double>(norms.size() - 1);
  auto idx = static_cast<std::size_t>(std::llround(q * last));
  idx = std::min(idx, norms.size() - 1);
  return norms[idx];
}

MeanCandidateList refine_candidate(const std::vector<Batch>& batches,
                                   const Vec& beta, const ProblemParams& p,
                                   double Q, double radius_cap, Rng rng,
                                   const DriverConfig& cfg) {
  const std::vector<Batch> resid = residualize(batches, beta);
  const std::vector<BatchStatistic> stats = batch_averages(resid);

  std::vector<double> norms;
  norms.reserve(stats.size());
  for (const BatchStatistic& s : stats) norms.push_back(s.z.norm());
  const double eff = std::clamp(radius_quantile(std::move(norms), p.alpha),
                                p.sigma_floor(), radius_cap);
  const double M =
      batch_moment_bound(p.n, p.k, Q, p.sigma, eff, cfg.cert_const);

  Mat points(static_cast<int>(stats.size()), p.d);
  for (std::size_t i = 0; i < stats.size(); ++i)
    points.row(static_cast<int>(i)) = stats[i].z.transpose();
  return list_decode_mean(points, p.alpha, p.k, M, rng, cfg.listmean);
}

namespace {

struct WorkingCandidate {
  Vec beta;
  double weight = 0.0;
};

std::vector<WorkingCandidate> merge_level(std::vector<WorkingCandidate> next,
                                          double merge_radius,
                                          std::size_t max_list) {
  std::stable_sort(next.begin(), next.end(),
                   [](const WorkingCandidate& a, const WorkingCandidate& b) {
                     return a.weight > b.weight;
                   });
  std::vector<WorkingCandidate> kept;
  for (WorkingCandidate& c : next) {
    if (kept.size() >= max_list) break;
    bool merged = false;
    for (const WorkingCandidate& k : kept)
      if ((k.beta - c.beta).norm() < merge_radius) {
        merged = true;
        break;
      }
    if (!merged) kept.push_back(std::move(c));
  }
  return kept;
}

}  // namespace

DriverResult batch_list_decode(const BatchSource& source,
                               const ProblemParams& p, double Q,
                               const Rng& rng, const DriverConfig& cfg) {
  p.validate();
  require_arg(static_cast<bool>(source), "batch_list_decode: null source");
  require_arg(Q > 0.0, "batch_list_decode: Q must be positive");

  const std::size_t m_call =
      cfg.batches_per_call ? cfg.batches_per_call : static_cast<std::size_t>(p.m);
  const std::size_t prune_m =
      cfg.prune_batches ? cfg.prune_batches : static_cast<std::size_t>(p.m);
  require_arg(m_call >= 2, "batch_list_decode: need at least two batches per call");

  const double sfloor = p.sigma_floor();
  const double tau =
      cfg.tau > 0.0 ? cfg.tau
                    : 0.001 / std::max(1.0, std::log2(p.R / sfloor));
  require_arg(tau < 1.0, "batch_list_decode: tau must be below 1");
  const auto r_max = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::log(1.0 / tau))));
  const int t_last = std::max(
      static_cast<int>(std::ceil(std::log2(cfg.c0 * p.R / sfloor))), 0);
  const std::size_t max_list =
      cfg.max_list ? cfg.max_list
                   : static_cast<std::size_t>(std::ceil(8.0 / p.alpha));

  std::vector<WorkingCandidate> anchors;
  if (cfg.initial.empty()) {
    anchors.push_back({Vec::Zero(p.d), 0.0});
  } else {
    for (const Vec& v : cfg.initial) {
      require_arg(v.size() == p.d, "batch_list_decode: initial dim mismatch");
      anchors.push_back({v, 0.0});
    }
  }

  DriverResult res;
  res.levels = static_cast<std::size_t>(t_last) + 1;
  res.repeats = r_max;

  std::vector<WorkingCandidate> cur = anchors;
  for (int t = 0; t <= t_last; ++t) {
    const double radius = p.R * std::pow(2.0, 1 - t);
    std::vector<WorkingCandidate> next;
    for (std::size_t ci = 0; ci < cur.size(); ++ci) {
      for (std::size_t r = 0; r < r_max; ++r) {
        const Rng draw_rng = rng.derive("draw", static_cast<uint64_t>(t), ci, r);
        std::vector<Batch> batches = source(draw_rng, m_call);
        require_state(batches.size() == m_call,
                      "batch_list_decode: source returned wrong batch count");
        res.batches_drawn += batches.size();
        MeanCandidateList found = refine_candidate(
            batches, cur[ci].beta, p, Q, radius,
            rng.derive("refine", static_cast<uint64_t>(t), ci, r), cfg);
        for (const MeanCandidate& mc : found.candidates)
          next.push_back({cur[ci].beta + mc.mean, mc.weight});
      }
    }
    if (next.empty()) {
      std::ostringstream msg;
      msg << "level " << t << " emitted no candidates; keeping the seed anchors";
      res.warnings.push_back(msg.str());
    }
    // Re-seed the initial anchors every level so refinement can restart from
    // scratch even after a level that lost the signal; weight 0 sends them
    // to the back of the pruning scan, where they cannot shadow a refined
    // candidate.
    for (const WorkingCandidate& a : anchors) next.push_back(a);
    cur = merge_level(std::move(next), radius / 4.0, max_list);

    // prune at every level on a fresh holdout so junk never accumulates
    // across levels and the list-size bound holds throughout
    if (!cfg.skip_prune) {
      std::vector<Batch> holdout =
          source(rng.derive("prune-draw", static_cast<uint64_t>(t)), prune_m);
      res.batches_drawn += holdout.size();
      std::vector<Vec> lst;
      std::vector<double> wts;
      for (const WorkingCandidate& c : cur) {
        lst.push_back(c.beta);
        wts.push_back(c.weight);
      }
      const std::vector<int> kept =
          prune_indices(lst, holdout, p, Q, cfg.sep_factor);
      if (kept.empty()) {
        res.prune_fallback = true;
        std::ostringstream msg;
        msg << "level " << t
            << " pruning rejected every candidate; keeping the unpruned list";
        res.warnings.push_back(msg.str());
      } else {
        std::vector<WorkingCandidate> pruned;
        for (int i : kept)
          pruned.push_back({std::move(lst[static_cast<std::size_t>(i)]),
                            wts[static_cast<std::size_t>(i)]});
        cur = std::move(pruned);
      }
    }
    if (cfg.progress) {
      std::ostringstream msg;
      msg << "level=" << t << " radius=" << radius << " list=" << cur.size();
      cfg.progress(msg.str());
    }
  }

  for (WorkingCandidate& c : cur) {
    res.candidates.push_back(std::move(c.beta));
    res.weights.push_back(c.weight);
  }
  return res;
}

}  // namespace batchlr
