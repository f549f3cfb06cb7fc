#include "batchlr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "batchlr/moments.hpp"
#include "batchlr/oracle.hpp"
#include "batchlr/pruning.hpp"
#include "batchlr/serialize.hpp"

namespace batchlr {

using json = nlohmann::ordered_json;

namespace {

void expect_keys(const json& obj, std::initializer_list<const char*> keys,
                 const char* where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : keys)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw config_error(std::string("config: unknown field '") + item.key() +
                         "' in " + where);
  }
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_of(const json& a, const char* where) {
  if (!a.is_array())
    throw config_error(std::string("config: ") + where + " must be an array");
  Vec v(static_cast<int>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

template <typename T>
std::vector<T> axis_of(const json& a, const char* where) {
  if (!a.is_array())
    throw config_error(std::string("config: sweep axis ") + where +
                       " must be an array");
  std::vector<T> out;
  for (const json& x : a) out.push_back(x.get<T>());
  return out;
}

AdversaryKind parse_adversary_kind(const std::string& name) {
  if (name == "decoy-regressors") return AdversaryKind::DecoyRegressors;
  if (name == "point-mass") return AdversaryKind::PointMass;
  if (name == "heavy-tail-labels") return AdversaryKind::HeavyTailLabels;
  if (name == "gaussian-noise-batches")
    return AdversaryKind::GaussianNoiseBatches;
  throw config_error("config: unknown adversary kind '" + name + "'");
}

std::string adversary_kind_name(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::DecoyRegressors: return "decoy-regressors";
    case AdversaryKind::PointMass: return "point-mass";
    case AdversaryKind::HeavyTailLabels: return "heavy-tail-labels";
    case AdversaryKind::GaussianNoiseBatches: return "gaussian-noise-batches";
  }
  return "?";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config parse: ") + e.what());
  }
  if (!root.is_object()) throw config_error("config: expected a JSON object");

  ExperimentConfig cfg;
  try {
    expect_keys(root,
                {"problem", "covariates", "adversary", "driver", "beta",
                 "trials", "reduce_group", "sweep", "dataset_path"},
                "the top level");
    if (root.contains("problem")) {
      const json& p = root["problem"];
      expect_keys(p, {"d", "n", "m", "alpha", "sigma", "R", "k", "seed"},
                  "problem");
      cfg.problem.d = p.value("d", cfg.problem.d);
      cfg.problem.n = p.value("n", cfg.problem.n);
      cfg.problem.m = p.value("m", cfg.problem.m);
      cfg.problem.alpha = p.value("alpha", cfg.problem.alpha);
      cfg.problem.sigma = p.value("sigma", cfg.problem.sigma);
      cfg.problem.R = p.value("R", cfg.problem.R);
      cfg.problem.k = p.value("k", cfg.problem.k);
      cfg.problem.seed = p.value("seed", cfg.problem.seed);
    }
    if (root.contains("covariates")) {
      const json& c = root["covariates"];
      expect_keys(c, {"kind", "max_degree"}, "covariates");
      cfg.cov = CovariateModel::parse(
          c.value("kind", std::string("standard-gaussian")));
      cfg.cov.max_degree = c.value("max_degree", cfg.cov.max_degree);
    }
    if (root.contains("adversary")) {
      const json& a = root["adversary"];
      expect_keys(a,
                  {"kind", "decoy_count", "decoy_norm", "decoy_distance",
                   "decoys", "target", "scale"},
                  "adversary");
      cfg.adversary.kind = parse_adversary_kind(
          a.value("kind", std::string("decoy-regressors")));
      cfg.adversary.decoy_count =
          a.value("decoy_count", cfg.adversary.decoy_count);
      cfg.adversary.decoy_norm =
          a.value("decoy_norm", cfg.adversary.decoy_norm);
      cfg.adversary.decoy_distance =
          a.value("decoy_distance", cfg.adversary.decoy_distance);
      if (a.contains("decoys"))
        for (const json& dv : a["decoys"])
          cfg.adversary.decoys.push_back(vec_of(dv, "adversary.decoys entry"));
      if (a.contains("target"))
        cfg.adversary.target = vec_of(a["target"], "adversary.target");
      cfg.adversary.scale = a.value("scale", cfg.adversary.scale);
    }
    if (root.contains("driver")) {
      const json& d = root["driver"];
      expect_keys(d,
                  {"batches_per_call", "prune_batches", "tau", "c0",
                   "cert_const", "sep_factor", "max_list", "skip_prune",
                   "listmean"},
                  "driver");
      cfg.driver.batches_per_call =
          d.value("batches_per_call", cfg.driver.batches_per_call);
      cfg.driver.prune_batches =
          d.value("prune_batches", cfg.driver.prune_batches);
      cfg.driver.tau = d.value("tau", cfg.driver.tau);
      cfg.driver.c0 = d.value("c0", cfg.driver.c0);
      cfg.driver.cert_const = d.value("cert_const", cfg.driver.cert_const);
      cfg.driver.sep_factor = d.value("sep_factor", cfg.driver.sep_factor);
      cfg.driver.max_list = d.value("max_list", cfg.driver.max_list);
      cfg.driver.skip_prune = d.value("skip_prune", cfg.driver.skip_prune);
      if (d.contains("listmean")) {
        const json& l = d["listmean"];
        expect_keys(l,
                    {"stop_cov_factor", "cert_factor", "list_factor",
                     "split_mass_factor", "gap_factor", "span_factor",
                     "overlap_factor", "dedup_factor", "deterministic_filter"},
                    "driver.listmean");
        ListMeanConfig& lm = cfg.driver.listmean;
        lm.stop_cov_factor = l.value("stop_cov_factor", lm.stop_cov_factor);
        lm.cert_factor = l.value("cert_factor", lm.cert_factor);
        lm.list_factor = l.value("list_factor", lm.list_factor);
        lm.split_mass_factor =
            l.value("split_mass_factor", lm.split_mass_factor);
        lm.gap_factor = l.value("gap_factor", lm.gap_factor);
        lm.span_factor = l.value("span_factor", lm.span_factor);
        lm.overlap_factor = l.value("overlap_factor", lm.overlap_factor);
        lm.dedup_factor = l.value("dedup_factor", lm.dedup_factor);
        lm.deterministic_filter =
            l.value("deterministic_filter", lm.deterministic_filter);
      }
    }
    if (root.contains("beta")) {
      const json& b = root["beta"];
      expect_keys(b, {"norm", "values"}, "beta");
      cfg.beta_norm = b.value("norm", cfg.beta_norm);
      if (b.contains("values")) cfg.beta_values = vec_of(b["values"], "beta.values");
    }
    cfg.trials = root.value("trials", cfg.trials);
    cfg.reduce_group = root.value("reduce_group", cfg.reduce_group);
    if (root.contains("sweep")) {
      const json& s = root["sweep"];
      expect_keys(s, {"d", "n", "alpha", "k", "m"}, "sweep");
      if (s.contains("d")) cfg.sweep.d = axis_of<int>(s["d"], "d");
      if (s.contains("n")) cfg.sweep.n = axis_of<int>(s["n"], "n");
      if (s.contains("alpha"))
        cfg.sweep.alpha = axis_of<double>(s["alpha"], "alpha");
      if (s.contains("k")) cfg.sweep.k = axis_of<int>(s["k"], "k");
      if (s.contains("m")) cfg.sweep.m = axis_of<int>(s["m"], "m");
    }
    if (root.contains("dataset_path"))
      cfg.dataset_path = root["dataset_path"].get<std::string>();
  } catch (const json::exception& e) {
    throw config_error(std::string("config parse: ") + e.what());
  }
  cfg.problem.validate();  // fail at parse time, not mid-run
  return cfg;
}

std::string ExperimentConfig::to_json_text() const {
  json root;
  json p;
  p["d"] = problem.d;
  p["n"] = problem.n;
  p["m"] = problem.m;
  p["alpha"] = problem.alpha;
  p["sigma"] = problem.sigma;
  p["R"] = problem.R;
  p["k"] = problem.k;
  p["seed"] = problem.seed;
  root["problem"] = p;
  json c;
  c["kind"] = cov.name();
  c["max_degree"] = cov.max_degree;
  root["covariates"] = c;
  json a;
  a["kind"] = adversary_kind_name(adversary.kind);
  a["decoy_count"] = adversary.decoy_count;
  a["decoy_norm"] = adversary.decoy_norm;
  a["decoy_distance"] = adversary.decoy_distance;
  if (!adversary.decoys.empty()) {
    json ds = json::array();
    for (const Vec& v : adversary.decoys) ds.push_back(vec_json(v));
    a["decoys"] = ds;
  }
  if (adversary.target.size() > 0) a["target"] = vec_json(adversary.target);
  a["scale"] = adversary.scale;
  root["adversary"] = a;
  json d;
  d["batches_per_call"] = driver.batches_per_call;
  d["prune_batches"] = driver.prune_batches;
  d["tau"] = driver.tau;
  d["c0"] = driver.c0;
  d["cert_const"] = driver.cert_const;
  d["sep_factor"] = driver.sep_factor;
  d["max_list"] = driver.max_list;
  d["skip_prune"] = driver.skip_prune;
  json l;
  l["stop_cov_factor"] = driver.listmean.stop_cov_factor;
  l["cert_factor"] = driver.listmean.cert_factor;
  l["list_factor"] = driver.listmean.list_factor;
  l["split_mass_factor"] = driver.listmean.split_mass_factor;
  l["gap_factor"] = driver.listmean.gap_factor;
  l["span_factor"] = driver.listmean.span_factor;
  l["overlap_factor"] = driver.listmean.overlap_factor;
  l["dedup_factor"] = driver.listmean.dedup_factor;
  l["deterministic_filter"] = driver.listmean.deterministic_filter;
  d["listmean"] = l;
  root["driver"] = d;
  json b;
  b["norm"] = beta_norm;
  if (beta_values) b["values"] = vec_json(*beta_values);
  root["beta"] = b;
  root["trials"] = trials;
  root["reduce_group"] = reduce_group;
  json s;
  s["d"] = json(sweep.d);
  s["n"] = json(sweep.n);
  s["alpha"] = json(sweep.alpha);
  s["k"] = json(sweep.k);
  s["m"] = json(sweep.m);
  root["sweep"] = s;
  root["dataset_path"] = dataset_path;
  return root.dump(2);
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json_text()); }

namespace {

Rng trial_rng(const ProblemParams& p, int trial) {
  const Rng root(p.seed);
  const Rng cell =
      root.derive("cell", static_cast<uint64_t>(p.d),
                  static_cast<uint64_t>(p.n), std::bit_cast<uint64_t>(p.alpha));
  const Rng cell_km = cell.derive("cell-km", static_cast<uint64_t>(p.k),
                                  static_cast<uint64_t>(p.m));
  return cell_km.derive("trial", static_cast<uint64_t>(trial));
}

Vec trial_beta(const ExperimentConfig& cfg, const Rng& tr) {
  if (cfg.beta_values) {
    require_arg(cfg.beta_values->size() == cfg.problem.d,
                "config: beta.values dimension mismatch");
    require_arg(cfg.beta_values->norm() <= cfg.problem.R * (1 + 1e-12),
                "config: beta.values norm exceeds R");
    return *cfg.beta_values;
  }
  require_arg(cfg.beta_norm >= 0.0 && cfg.beta_norm <= cfg.problem.R,
              "config: beta.norm must lie in [0, R]");
  Rng r = tr.derive("beta");
  return cfg.beta_norm * r.unit_vector(cfg.problem.d);
}

AdversaryModel trial_adversary(const ExperimentConfig& cfg,
                               const Vec& beta_star, const Rng& tr) {
  const AdversarySpec& spec = cfg.adversary;
  AdversaryModel adv;
  adv.kind = spec.kind;
  adv.scale = spec.scale;
  adv.target = spec.target;
  if (spec.kind == AdversaryKind::PointMass && adv.target.size() == 0) {
    if (spec.decoy_distance > 0.0) {
      // place the mass a fixed distance from the trial's regressor
      Rng r = tr.derive("decoy-dir", 0);
      adv.target =
          beta_star + spec.decoy_distance * r.unit_vector(cfg.problem.d);
    } else {
      adv.target = Vec::Zero(cfg.problem.d);
    }
  }
  if (spec.kind == AdversaryKind::DecoyRegressors) {
    if (!spec.decoys.empty()) {
      for (const Vec& v : spec.decoys) {
        require_arg(v.size() == cfg.problem.d,
                    "config: adversary decoy dimension mismatch");
        adv.decoys.push_back(v);
      }
    } else if (spec.decoy_distance > 0.0) {
      require_arg(spec.decoy_count >= 1,
                  "config: decoy_count must be >= 1 with decoy_distance");
      for (int j = 0; j < spec.decoy_count; ++j) {
        Rng r = tr.derive("decoy-dir", static_cast<uint64_t>(j));
        adv.decoys.push_back(beta_star +
                             spec.decoy_distance * r.unit_vector(cfg.problem.d));
      }
    } else {
      adv.decoy_count = spec.decoy_count;
      adv.decoy_norm = spec.decoy_norm;
      Rng r = tr.derive("decoys-root");
      adv = adv.materialize(cfg.problem.d, r);
    }
  }
  return adv;
}

BatchSource live_source(const ProblemParams& p, const CovariateModel& cov,
                        const AdversaryModel& adv, const Vec& beta_star) {
  return [p, cov, adv, beta_star](Rng r, std::size_t count) {
    ProblemParams q = p;
    q.m = static_cast<int>(count);
    Dataset ds = sample_dataset(q, cov, adv, beta_star, r);
    return std::move(ds.batches);
  };
}

BatchSource reduce_source(const ProblemParams& singles, int group,
                          const CovariateModel& cov, const AdversaryModel& adv,
                          const Vec& beta_star) {
  return [singles, group, cov, adv, beta_star](Rng r, std::size_t count) {
    ProblemParams q = singles;
    q.m = static_cast<int>(count) * group;
    Dataset ds = sample_dataset(q, cov, adv, beta_star, r);
    Dataset grouped = self_batching_reduce(ds, group);
    return std::move(grouped.batches);
  };
}

/// Source that replays a stored dataset instead of drawing fresh batches;
/// sample-reuse mode, flagged in the manifest.
BatchSource replay_source(std::vector<Batch> batches) {
  return [batches](Rng, std::size_t count) {
    std::vector<Batch> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(batches[i % batches.size()]);
    return out;
  };
}

double min_list_error(const std::vector<Vec>& candidates, const Vec& beta_star) {
  if (candidates.empty()) return beta_star.norm();
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& c : candidates) best = std::min(best, (c - beta_star).norm());
  return best;
}

double inlier_baseline(const ProblemParams& p, const CovariateModel& cov,
                       const AdversaryModel& adv, const Vec& beta_star,
                       const Rng& tr) {
  Rng r = tr.derive("baseline");
  Dataset ds = sample_dataset(p, cov, adv, beta_star, r);
  std::vector<int> inliers;
  for (std::size_t i = 0; i < ds.provenance.size(); ++i)
    if (ds.provenance[i].origin == BatchOrigin::Inlier)
      inliers.push_back(static_cast<int>(i));
  if (inliers.empty()) return -1.0;
  LsqResult fit = subset_least_squares(ds.batches, inliers);
  if (fit.degenerate) return -1.0;
  return (fit.beta - beta_star).norm();
}

TrialResult finish_trial(const ExperimentConfig& cfg, int trial,
                         const ProblemParams& effective, const BatchSource& src,
                         const Vec& beta_star, double baseline) {
  const double Q = cfg.cov.q_for_degree(2 * effective.k);
  DriverConfig dcfg = cfg.driver;
  dcfg.progress = nullptr;
  const Rng tr = trial_rng(cfg.problem, trial);

  const auto t0 = std::chrono::steady_clock::now();
  DriverResult res = batch_list_decode(src, effective, Q, tr.derive("driver"), dcfg);
  const auto t1 = std::chrono::steady_clock::now();

  TrialResult out;
  out.trial = trial;
  out.min_error = min_list_error(res.candidates, beta_star);
  out.list_size = static_cast<int>(res.candidates.size());
  out.wall_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 -
                                                                            t0)
          .count();
  out.baseline_error = baseline;
  out.candidates = std::move(res.candidates);
  out.weights = std::move(res.weights);
  out.batches_drawn = res.batches_drawn;
  out.prune_fallback = res.prune_fallback;
  out.beta_star = beta_star;
  return out;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, int trial) {
  cfg.problem.validate();
  const Rng tr = trial_rng(cfg.problem, trial);
  const Vec beta_star = trial_beta(cfg, tr);
  const AdversaryModel adv = trial_adversary(cfg, beta_star, tr);

  if (!cfg.dataset_path.empty()) {
    Dataset stored = dataset_from_json(read_text_file(cfg.dataset_path));
    stored.params.validate();
    require_arg(stored.params.d == cfg.problem.d,
                "config: stored dataset dimension mismatch");
    const Vec stored_beta = stored.beta_star;
    std::vector<int> inliers;
    for (std::size_t i = 0; i < stored.provenance.size(); ++i)
      if (stored.provenance[i].origin == BatchOrigin::Inlier)
        inliers.push_back(static_cast<int>(i));
    double baseline = -1.0;
    if (!inliers.empty()) {
      LsqResult fit = subset_least_squares(stored.batches, inliers);
      if (!fit.degenerate) baseline = (fit.beta - stored_beta).norm();
    }
    return finish_trial(cfg, trial, stored.params,
                        replay_source(stored.batches), stored_beta, baseline);
  }

  const double baseline =
      inlier_baseline(cfg.problem, cfg.cov, adv, beta_star, tr);
  return finish_trial(cfg, trial, cfg.problem,
                      live_source(cfg.problem, cfg.cov, adv, beta_star),
                      beta_star, baseline);
}

TrialResult run_reduce_trial(const ExperimentConfig& cfg, int trial) {
  require_arg(cfg.problem.n == 1, "reduce: problem.n must be 1");
  require_arg(cfg.reduce_group >= 1, "reduce: reduce_group must be >= 1");
  const Rng tr = trial_rng(cfg.problem, trial);
  const Vec beta_star = trial_beta(cfg, tr);
  const AdversaryModel adv = trial_adversary(cfg, beta_star, tr);

  ProblemParams eff = cfg.problem;
  eff.n = cfg.reduce_group;
  eff.alpha = ipow(cfg.problem.alpha, cfg.reduce_group);
  eff.validate();

  return finish_trial(
      cfg, trial, eff,
      reduce_source(cfg.problem, cfg.reduce_group, cfg.cov, adv, beta_star),
      beta_star, -1.0);
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& cfg) {
  const auto ds = cfg.sweep.d.empty() ? std::vector<int>{cfg.problem.d} : cfg.sweep.d;
  const auto alphas = cfg.sweep.alpha.empty() ? std::vector<double>{cfg.problem.alpha}
                                              : cfg.sweep.alpha;
  const auto ks = cfg.sweep.k.empty() ? std::vector<int>{cfg.problem.k} : cfg.sweep.k;
  const auto ns = cfg.sweep.n.empty() ? std::vector<int>{cfg.problem.n} : cfg.sweep.n;
  const auto ms = cfg.sweep.m.empty() ? std::vector<int>{cfg.problem.m} : cfg.sweep.m;
  std::vector<ExperimentConfig> cells;
  for (int d : ds)
    for (double alpha : alphas)
      for (int k : ks)
        for (int n : ns)
          for (int m : ms) {
            ExperimentConfig cell = cfg;
            cell.sweep = SweepSpec{};
            cell.problem.d = d;
            cell.problem.alpha = alpha;
            cell.problem.k = k;
            cell.problem.n = n;
            cell.problem.m = m;
            cells.push_back(std::move(cell));
          }
  return cells;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "n,alpha,k,m,trial,min_error,list_size,wall_ms\n";
  for (const SweepRow& r : rows) {
    os << r.n << ',' << format_double(r.alpha) << ',' << r.k << ',' << r.m
       << ',' << r.trial << ',' << format_double(r.min_error) << ','
       << r.list_size << ',' << format_double(r.wall_ms) << '\n';
  }
  return os.str();
}

MzCheckReport run_mz_checks(uint64_t seed) {
  MzCheckReport rep;
  const double atoms[] = {-2.0, -1.0, 0.0, 1.0, 2.0};
  const double probs[] = {0.125, 0.25, 0.5, 0.75, 0.875};
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      for (double p1 : probs)
        for (int n = 1; n <= 5; ++n)
          for (int k : {2, 4}) {
            MzExact e = mz_exact_tiny({atoms[i], atoms[j]}, {p1, 1.0 - p1}, n, k);
            ++rep.exact_cases;
            if (e.lhs > e.rhs * (1.0 + 1e-12)) ++rep.exact_violations;
          }

  const Rng root(seed);
  const int dims[] = {2, 3, 4};
  const int batch_ns[] = {4, 8};
  const int half_degrees[] = {2, 4};
  const double sigmas[] = {0.0, 0.5, 1.0};
  for (int t = 0; t < 100; ++t) {
    const int d = dims[t % 3];
    const int n = batch_ns[(t / 3) % 2];
    const int k = half_degrees[(t / 6) % 2];
    const double sigma = sigmas[t % 3];
    Rng r = root.derive("mz-mc", static_cast<uint64_t>(t));
    const Vec beta = r.gaussian_vec(d);
    CovariateModel cov;
    MzReport mz = verify_mz_bound(cov, beta, sigma, n, k, 2000, r);
    ++rep.mc_trials;
    if (mz.violated) ++rep.mc_violations;
  }
  return rep;
}

CertCheckReport run_cert_checks(uint64_t seed, int instances) {
  CertCheckReport rep;
  const Rng root(seed);
  for (int i = 0; i < instances; ++i) {
    Rng r = root.derive("cert", static_cast<uint64_t>(i));
    const int d = 1 + static_cast<int>(r.below(4));
    const int k = 1 + static_cast<int>(r.below(2));
    const int N = 20 + static_cast<int>(r.below(180));
    const int style = static_cast<int>(r.below(3));
    const double scale = std::exp(2.0 * r.uniform() - 0.5);
    std::vector<Vec> points;
    points.reserve(static_cast<std::size_t>(N));
    Vec shift = 3.0 * scale * r.unit_vector(d);
    for (int j = 0; j < N; ++j) {
      Vec x = scale * r.gaussian_vec(d);
      if (style == 1 && j % 3 == 0) x += shift;  // planted second cluster
      if (style == 2) x = x.array().cube();      // heavy tails
      points.push_back(std::move(x));
    }
    MomentCertificate probe = certify_moment_bound(points, k, 1.0);
    const double M =
        std::max(probe.lambda_max, 1e-12) * std::exp(1.4 * r.uniform() - 0.7);
    MomentCertificate cert = certify_moment_bound(points, k, M);
    Rng rdir = r.derive("directions");
    const double sup = directional_moment_sup(points, k, 500, rdir);
    ++rep.cases;
    if (cert.passed) {
      ++rep.passes;
      if (sup > M * (1.0 + 1e-6)) ++rep.soundness_violations;
    }
    if (sup > cert.lambda_max * (1.0 + 1e-9) + 1e-300)
      ++rep.sandwich_violations;
  }
  return rep;
}

PruneCheckReport run_prune_checks(uint64_t seed, int instances) {
  PruneCheckReport rep;
  const Rng root(seed);
  const double alphas[] = {0.05, 0.1, 0.2, 0.3};
  for (int i = 0; i < instances; ++i) {
    Rng r = root.derive("prune-case", static_cast<uint64_t>(i));
    ProblemParams p;
    p.d = 2 + static_cast<int>(r.below(4));
    p.n = 4 + static_cast<int>(r.below(12));
    p.k = 1 + static_cast<int>(r.below(2));
    p.alpha = alphas[r.below(4)];
    p.sigma = 0.5;
    p.R = 4.0;
    p.m = 400;
    const double Q = CovariateModel{}.q_for_degree(2 * p.k);
    const double sep = candidate_separation(p, Q, 4.0);
    const Vec beta_star = 0.8 * p.R * r.unit_vector(p.d);
    const Vec decoy1 = beta_star + 3.0 * sep * r.unit_vector(p.d);
    const Vec decoy2 = beta_star - 3.0 * sep * r.unit_vector(p.d);

    // Clean count is forced to ceil(alpha m), comfortably above the witness
    // threshold, with the remainder split between the two decoy models.
    const int clean = static_cast<int>(std::ceil(p.alpha * p.m));
    CovariateModel cov;
    std::vector<Batch> batches;
    for (int b = 0; b < p.m; ++b) {
      Rng rb = r.derive("batch", static_cast<uint64_t>(b));
      const Vec& model =
          b < clean ? beta_star : (b % 2 == 0 ? decoy1 : decoy2);
      batches.push_back(sample_inlier_batch(p, cov, model, rb));
    }

    std::vector<Vec> L;
    L.push_back(beta_star + 0.2 * p.R * r.unit_vector(p.d));  // near
    L.push_back(beta_star + 0.15 * p.R * r.unit_vector(p.d)); // near dup
    L.push_back(decoy1);
    L.push_back(decoy2);
    L.push_back(beta_star + 2.0 * sep * r.unit_vector(p.d));  // junk rival
    L.push_back(10.0 * sep * r.unit_vector(p.d));             // far junk
    std::rotate(L.begin(), L.begin() + (i % static_cast<int>(L.size())),
                L.end());

    const std::vector<Vec> out = prune(L, batches, p, Q, 4.0);
    ++rep.cases;
    if (min_list_error(out, beta_star) <= 2.0 * sep) ++rep.survival_hits;
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t b = a + 1; b < out.size(); ++b)
        if ((out[a] - out[b]).norm() < sep) ++rep.separation_violations;
  }
  return rep;
}

namespace {

double theoretical_batches(const ProblemParams& p) {
  const double base = std::pow(4.0 * p.k * p.d, 8.0 * p.k) / p.alpha +
                      std::pow(p.alpha, -3.0);
  return base * std::max(1.0, std::log2(p.R / p.sigma_floor()));
}

json constants_json(const ExperimentConfig& cfg) {
  json c;
  c["cert_const"] = cfg.driver.cert_const;
  c["cov_factor"] = 3.0;
  c["stop_cov_factor"] = cfg.driver.listmean.stop_cov_factor;
  c["cert_factor"] = cfg.driver.listmean.cert_factor;
  c["list_factor"] = cfg.driver.listmean.list_factor;
  c["split_mass_factor"] = cfg.driver.listmean.split_mass_factor;
  c["gap_factor"] = cfg.driver.listmean.gap_factor;
  c["span_factor"] = cfg.driver.listmean.span_factor;
  c["overlap_factor"] = cfg.driver.listmean.overlap_factor;
  c["dedup_factor"] = cfg.driver.listmean.dedup_factor;
  c["sep_factor"] = cfg.driver.sep_factor;
  c["prune_weight_fraction"] = 0.9;
  c["prune_rival_fraction"] = 0.05;
  c["c0"] = cfg.driver.c0;
  return c;
}

std::string manifest_json(const ExperimentConfig& cfg,
                          const std::string& subcommand, int cells, int trials,
                          std::size_t actual_batches, double baseline_mean,
                          double wall_ms_total,
                          const std::vector<std::string>& warnings) {
  json m;
  m["format"] = "batchlr-manifest-v1";
  m["subcommand"] = subcommand;
  m["config_hash"] = cfg.hash();
  m["seed"] = cfg.problem.seed;
  m["version"] = "1.0.0";
  m["constants"] = constants_json(cfg);
  m["theoretical_batches_per_run"] = theoretical_batches(cfg.problem);
  m["actual_batches_total"] = actual_batches;
  m["cells"] = cells;
  m["trials_per_cell"] = trials;
  m["baseline_mean_error"] = baseline_mean;
  m["wall_ms_total"] = wall_ms_total;
  json w = json::array();
  for (const std::string& s : warnings) w.push_back(s);
  m["warnings"] = w;
  return m.dump(2);
}

std::string out_path(const CliOptions& opt, const std::string& name) {
  return (std::filesystem::path(opt.out_dir) / name).string();
}

json trial_json(const TrialResult& t) {
  json jt;
  jt["trial"] = t.trial;
  jt["min_error"] = t.min_error;
  jt["list_size"] = t.list_size;
  jt["baseline_error"] = t.baseline_error;
  jt["prune_fallback"] = t.prune_fallback;
  jt["beta_star"] = vec_json(t.beta_star);
  json cands = json::array();
  for (const Vec& c : t.candidates) cands.push_back(vec_json(c));
  jt["candidates"] = cands;
  json ws = json::array();
  for (double w : t.weights) ws.push_back(w);
  jt["weights"] = ws;
  return jt;
}

int run_like_subcommand(const std::string& name, const ExperimentConfig& cfg,
                        const CliOptions& opt, std::string* error_out) {
  const bool reduce = name == "reduce";
  const std::vector<ExperimentConfig> cells =
      name == "sweep" ? expand_sweep(cfg) : std::vector<ExperimentConfig>{cfg};

  std::vector<SweepRow> rows;
  json trials_out = json::array();
  std::vector<std::string> warnings;
  std::size_t batches_total = 0;
  double wall_total = 0.0;
  double baseline_sum = 0.0;
  int baseline_count = 0;
  if (!cfg.dataset_path.empty())
    warnings.push_back("sample-reuse mode: batches replayed from " +
                       cfg.dataset_path);

  // Trials are mutually independent (each derives its own random stream), so
  // they run on a worker pool; results are assembled in (cell, trial) order
  // afterwards, which keeps every output byte independent of scheduling.
  struct Job {
    const ExperimentConfig* cell;
    int trial;
  };
  std::vector<Job> jobs;
  for (const ExperimentConfig& cell : cells)
    for (int t = 0; t < cell.trials; ++t) jobs.push_back({&cell, t});

  std::vector<TrialResult> trial_results(jobs.size());
  std::vector<std::exception_ptr> trial_errors(jobs.size());
  std::atomic<std::size_t> next_job{0};
  auto work = [&] {
    for (std::size_t j; (j = next_job.fetch_add(1)) < jobs.size();) {
      try {
        trial_results[j] = reduce ? run_reduce_trial(*jobs[j].cell, jobs[j].trial)
                                  : run_trial(*jobs[j].cell, jobs[j].trial);
      } catch (...) {
        trial_errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(
      1, std::min<std::size_t>(std::thread::hardware_concurrency(), jobs.size()));
  {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
    work();
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : trial_errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const ExperimentConfig& cell = *jobs[j].cell;
    const int t = jobs[j].trial;
    {
      TrialResult tr = std::move(trial_results[j]);
      SweepRow row;
      row.n = reduce ? cell.reduce_group : cell.problem.n;
      row.alpha = reduce ? ipow(cell.problem.alpha, cell.reduce_group)
                         : cell.problem.alpha;
      row.k = cell.problem.k;
      row.m = cell.problem.m;
      row.trial = t;
      row.min_error = tr.min_error;
      row.list_size = tr.list_size;
      row.wall_ms = tr.wall_ms;
      rows.push_back(row);
      trials_out.push_back(trial_json(tr));
      batches_total += tr.batches_drawn;
      wall_total += tr.wall_ms;
      if (tr.baseline_error >= 0.0) {
        baseline_sum += tr.baseline_error;
        ++baseline_count;
      }
      if (tr.prune_fallback)
        warnings.push_back("prune fallback in trial " + std::to_string(t));
    }
  }

  write_text_file(out_path(opt, "results.csv"), sweep_csv(rows));
  write_text_file(out_path(opt, "candidates.json"), trials_out.dump(2));
  const double baseline_mean =
      baseline_count ? baseline_sum / baseline_count : -1.0;
  write_text_file(
      out_path(opt, "manifest.json"),
      manifest_json(cfg, name, static_cast<int>(cells.size()), cfg.trials,
                    batches_total, baseline_mean, wall_total, warnings));

  double err_sum = 0.0;
  int size_max = 0;
  for (const SweepRow& r : rows) {
    err_sum += r.min_error;
    size_max = std::max(size_max, r.list_size);
  }
  std::cout << name << ": cells=" << cells.size() << " trials=" << cfg.trials
            << " mean_min_error="
            << (rows.empty() ? 0.0 : err_sum / static_cast<double>(rows.size()))
            << " max_list_size=" << size_max
            << " baseline_mean=" << baseline_mean << "\n";
  (void)error_out;
  return 0;
}

}  // namespace

int run_subcommand(const std::string& name, const CliOptions& opt,
                   std::string* error_out) {
  auto fail = [&](int code, const std::string& msg) {
    if (error_out) *error_out = msg;
    return code;
  };
  try {
    static const char* known[] = {"generate", "run",        "sweep",
                                  "mz-check", "cert-check", "prune-check",
                                  "reduce"};
    bool ok = false;
    for (const char* k : known)
      if (name == k) ok = true;
    if (!ok) throw config_error("unknown subcommand '" + name + "'");

    const bool is_check =
        name == "mz-check" || name == "cert-check" || name == "prune-check";
    ExperimentConfig cfg;
    if (!opt.config_path.empty())
      cfg = ExperimentConfig::from_json_text(read_text_file(opt.config_path));
    else if (!is_check)
      throw config_error("subcommand '" + name + "' requires --config");
    if (opt.seed) cfg.problem.seed = *opt.seed;
    if (opt.trials) cfg.trials = *opt.trials;
    if (opt.deterministic_filter)
      cfg.driver.listmean.deterministic_filter = true;

    try {
      std::filesystem::create_directories(opt.out_dir);
    } catch (const std::filesystem::filesystem_error& e) {
      throw io_error(std::string("cannot create output directory: ") +
                     e.what());
    }

    if (name == "generate") {
      cfg.problem.validate();
      const Rng tr = trial_rng(cfg.problem, 0);
      const Vec beta_star = trial_beta(cfg, tr);
      const AdversaryModel adv = trial_adversary(cfg, beta_star, tr);
      Rng gen = tr.derive("generate");
      Dataset ds = sample_dataset(cfg.problem, cfg.cov, adv, beta_star, gen);
      write_text_file(out_path(opt, "dataset.json"), dataset_to_json(ds));
      std::cout << "generate: wrote " << ds.batches.size() << " batches ("
                << cfg.problem.n << " points each) to "
                << out_path(opt, "dataset.json") << "\n";
      return 0;
    }
    if (name == "run" || name == "sweep" || name == "reduce")
      return run_like_subcommand(name, cfg, opt, error_out);

    const uint64_t seed = opt.seed ? *opt.seed : cfg.problem.seed;
    if (name == "mz-check") {
      MzCheckReport rep = run_mz_checks(seed);
      json j;
      j["exact_cases"] = rep.exact_cases;
      j["exact_violations"] = rep.exact_violations;
      j["mc_trials"] = rep.mc_trials;
      j["mc_violations"] = rep.mc_violations;
      write_text_file(out_path(opt, "mz_report.json"), j.dump(2));
      std::cout << "mz-check: " << rep.exact_cases << " exact cases, "
                << rep.exact_violations << " violations; " << rep.mc_trials
                << " mc trials, " << rep.mc_violations << " violations\n";
      const int mc_allowed = rep.mc_trials / 100;
      if (rep.exact_violations > 0 || rep.mc_violations > mc_allowed)
        return fail(3, "mz-check found violations");
      return 0;
    }
    if (name == "cert-check") {
      CertCheckReport rep = run_cert_checks(seed, 1000);
      json j;
      j["cases"] = rep.cases;
      j["passes"] = rep.passes;
      j["soundness_violations"] = rep.soundness_violations;
      j["sandwich_violations"] = rep.sandwich_violations;
      write_text_file(out_path(opt, "cert_report.json"), j.dump(2));
      std::cout << "cert-check: " << rep.cases << " cases, " << rep.passes
                << " passes, " << rep.soundness_violations
                << " soundness violations, " << rep.sandwich_violations
                << " sandwich violations\n";
      if (rep.soundness_violations > 0 || rep.sandwich_violations > 0)
        return fail(3, "cert-check found violations");
      return 0;
    }
    // prune-check
    PruneCheckReport rep = run_prune_checks(seed, 100);
    json j;
    j["cases"] = rep.cases;
    j["survival_hits"] = rep.survival_hits;
    j["separation_violations"] = rep.separation_violations;
    write_text_file(out_path(opt, "prune_report.json"), j.dump(2));
    std::cout << "prune-check: " << rep.cases << " cases, "
              << rep.survival_hits << " survivals, "
              << rep.separation_violations << " separation violations\n";
    if (rep.separation_violations > 0 ||
        rep.survival_hits * 100 < rep.cases * 95)
      return fail(3, "prune-check found violations");
    return 0;
  } catch (const config_error& e) {
    return fail(2, e.what());
  } catch (const io_error& e) {
    return fail(4, e.what());
  } catch (const std::exception& e) {
    return fail(3, e.what());
  }
}

}  // namespace batchlr
