#include "batchlr/listmean.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>

#include "batchlr/moments.hpp"

namespace batchlr {

namespace {

struct Node {
  std::vector<int> idx;  // indices into the input point set
  Vec w;                 // aligned with idx, entries in (0, 1]
  int depth = 0;
  uint64_t branch = 1;   // heap numbering; children are 2b and 2b+1
};

struct Scratch {
  const Mat& X;
  double alpha;
  int k;
  double M;
  const ListMeanConfig& cfg;
  double weight_floor;
  int depth_cap;
  Vec removed;  // filter removals per input point, summed over branches
  std::vector<MeanCandidate> emitted;
};

Vec weighted_mean(const Mat& X, const Node& nd, double W) {
  Vec mu = Vec::Zero(X.cols());
  for (std::size_t i = 0; i < nd.idx.size(); ++i)
    if (nd.w[static_cast<int>(i)] > 0)
      mu += nd.w[static_cast<int>(i)] * X.row(nd.idx[i]).transpose();
  return mu / W;
}

// weighted quantile of sorted (value, weight) pairs at cumulative mass q
double weighted_quantile(const std::vector<std::pair<double, double>>& sorted,
                         double q) {
  double acc = 0.0;
  for (const auto& [v, w] : sorted) {
    acc += w;
    if (acc >= q) return v;
  }
  return sorted.back().first;
}

struct Cut {
  double lo = 0.0;
  double hi = 0.0;
  bool window = false;  // window cuts duplicate interior points into both sides
};

// Widest empty interval of at least min_gap with cluster mass on both sides.
// If none exists, fall back to the lightest window of that width whose
// interior carries at most window_cap weight.
std::optional<Cut> find_cut(const std::vector<std::pair<double, double>>& sorted,
                            double W, double min_gap, double floor,
                            double window_cap) {
  Cut cut;
  double best_width = 0.0;
  double left_mass = 0.0;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    left_mass += sorted[i].second;
    double width = sorted[i + 1].first - sorted[i].first;
    if (width < min_gap || width <= best_width) continue;
    if (left_mass < floor || W - left_mass < floor) continue;
    best_width = width;
    cut.lo = sorted[i].first;
    cut.hi = sorted[i + 1].first;
  }
  if (best_width > 0) return cut;

  cut.window = true;
  double best_interior = std::numeric_limits<double>::infinity();
  std::vector<double> prefix(sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i)
    prefix[i + 1] = prefix[i] + sorted[i].second;
  std::size_t j = 0;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    double lo = sorted[i].first;
    if (j < i + 1) j = i + 1;
    while (j < sorted.size() && sorted[j].first < lo + min_gap) ++j;
    if (j == sorted.size()) break;
    double left_side = prefix[i + 1];
    double interior = prefix[j] - prefix[i + 1];
    double right_side = W - prefix[j];
    if (left_side < floor || right_side < floor) continue;
    if (interior > window_cap || interior >= best_interior) continue;
    best_interior = interior;
    cut.lo = lo;
    cut.hi = lo + min_gap;
  }
  if (std::isfinite(best_interior)) return cut;
  return std::nullopt;
}

double weighted_median(std::vector<double> vals, std::vector<double> ws) {
  std::vector<int> order(vals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return vals[a] < vals[b]; });
  double total = 0.0;
  for (double w : ws) total += w;
  double acc = 0.0;
  for (int i : order) {
    acc += ws[i];
    if (acc >= total / 2) return vals[i];
  }
  return vals[order.back()];
}

void emit(Scratch& s, const Node& nd, const Vec& mu, double W) {
  MeanCandidate c;
  c.mean = mu;
  c.support = Vec::Zero(s.X.rows());
  for (std::size_t i = 0; i < nd.idx.size(); ++i)
    c.support[nd.idx[i]] = nd.w[static_cast<int>(i)];
  c.weight = W;
  c.branch = nd.branch;
  s.emitted.push_back(std::move(c));
}

void process(Scratch& s, Node nd, Rng root_rng, std::deque<Node>& queue) {
  Rng node_rng = root_rng.derive("node", nd.branch);
  const int d = static_cast<int>(s.X.cols());
  const double cov_gate = s.cfg.stop_cov_factor * std::pow(s.M, 1.0 / s.k);
  const double cert_gate = s.cfg.cert_factor * s.M;
  const double scale_2k = std::pow(s.M, 1.0 / (2.0 * s.k));

  int filter_round = 0;
  while (true) {
    double W = nd.w.sum();
    int active = 0;
    for (int i = 0; i < nd.w.size(); ++i)
      if (nd.w[i] > 0) ++active;
    if (W < s.weight_floor || active < 2) return;  // dead branch

    Vec mu = weighted_mean(s.X, nd, W);
    Mat cov = Mat::Zero(d, d);
    for (std::size_t i = 0; i < nd.idx.size(); ++i) {
      double wi = nd.w[static_cast<int>(i)];
      if (wi == 0) continue;
      Vec c = s.X.row(nd.idx[i]).transpose() - mu;
      cov.selfadjointView<Eigen::Lower>().rankUpdate(c, wi / W);
    }
    cov.triangularView<Eigen::StrictlyUpper>() =
        cov.transpose().triangularView<Eigen::StrictlyUpper>();
    Eigen::SelfAdjointEigenSolver<Mat> ces(cov);
    require_state(ces.info() == Eigen::Success, "list_decode_mean: eigensolver failed");
    double lambda2 = ces.eigenvalues()[d - 1];
    Vec u = ces.eigenvectors().col(d - 1);

    // Lazily computed degree-2k data (shared by the stop gate and filtering).
    double lambda2k = -1.0;
    Vec v_top;
    auto compute_flattened = [&]() {
      if (lambda2k >= 0) return;
      if (s.k == 1) {
        lambda2k = lambda2;
        v_top = u;
        return;
      }
      Mat pts(nd.idx.size(), d);
      for (std::size_t i = 0; i < nd.idx.size(); ++i)
        pts.row(static_cast<int>(i)) = s.X.row(nd.idx[i]);
      FlattenedMomentMatrix fm = weighted_moment_matrix(pts, nd.w, s.k, mu);
      Eigen::SelfAdjointEigenSolver<Mat> fes(fm.mat);
      require_state(fes.info() == Eigen::Success,
                    "list_decode_mean: eigensolver failed");
      lambda2k = fes.eigenvalues()[fm.mat.rows() - 1];
      v_top = fes.eigenvectors().col(fm.mat.rows() - 1);
    };

    if (lambda2 <= cov_gate) {
      compute_flattened();
      if (lambda2k <= cert_gate) {
        emit(s, nd, mu, W);
        return;
      }
    }

    // per-point coordinates for the two split axes
    auto proj_of = [&](int row) {
      return u.dot(s.X.row(row).transpose() - mu);
    };
    auto norm_of = [&](int row) {
      return (s.X.row(row).transpose() - mu).norm();
    };

    std::vector<std::pair<double, double>> proj;  // (value, weight), active only
    proj.reserve(nd.idx.size());
    for (std::size_t i = 0; i < nd.idx.size(); ++i) {
      double wi = nd.w[static_cast<int>(i)];
      if (wi == 0) continue;
      proj.emplace_back(proj_of(nd.idx[i]), wi);
    }
    std::sort(proj.begin(), proj.end());

    bool may_split = nd.depth < s.depth_cap;

    // child builder: keeps (index, weight) pairs passing the predicate
    auto make_child = [&](uint64_t branch, auto&& value, auto&& keep) {
      Node child;
      child.depth = nd.depth + 1;
      child.branch = branch;
      std::vector<double> ws;
      for (std::size_t i = 0; i < nd.idx.size(); ++i) {
        double wi = nd.w[static_cast<int>(i)];
        if (wi == 0) continue;
        if (keep(value(nd.idx[i]))) {
          child.idx.push_back(nd.idx[i]);
          ws.push_back(wi);
        }
      }
      child.w = ws.empty() ? Vec()
                           : Vec(Eigen::Map<Vec>(ws.data(),
                                                 static_cast<int>(ws.size())));
      return child;
    };

    // gap cuts split disjointly at a randomized threshold inside the gap;
    // window cuts keep the interior stragglers on both sides so a cluster
    // straddling the cut loses no mass
    auto split_on = [&](const Cut& cut, auto&& value) {
      if (!cut.window) {
        double thr =
            s.cfg.deterministic_filter
                ? 0.5 * (cut.lo + cut.hi)
                : cut.lo + (cut.hi - cut.lo) *
                               node_rng.derive("gap", filter_round).uniform();
        queue.push_back(make_child(nd.branch * 2, value,
                                   [&](double t) { return t <= thr; }));
        queue.push_back(make_child(nd.branch * 2 + 1, value,
                                   [&](double t) { return t > thr; }));
      } else {
        queue.push_back(make_child(nd.branch * 2, value,
                                   [&](double t) { return t < cut.hi; }));
        queue.push_back(make_child(nd.branch * 2 + 1, value,
                                   [&](double t) { return t > cut.lo; }));
      }
    };

    if (may_split) {
      double min_gap = s.cfg.gap_factor * scale_2k;
      double window_cap = 0.2 * s.weight_floor;

      // axis 1: projections onto the top covariance direction
      auto proj_cut = find_cut(proj, W, min_gap, s.weight_floor, window_cap);

      // axis 2: distance from the mean; clusters concentric in every
      // projection can still separate cleanly on point norms
      std::vector<std::pair<double, double>> rad;
      rad.reserve(proj.size());
      for (std::size_t i = 0; i < nd.idx.size(); ++i) {
        double wi = nd.w[static_cast<int>(i)];
        if (wi == 0) continue;
        rad.emplace_back(norm_of(nd.idx[i]), wi);
      }
      std::sort(rad.begin(), rad.end());
      auto rad_cut = find_cut(rad, W, min_gap, s.weight_floor, window_cap);

      // an empty gap on either axis beats any window fallback
      if (proj_cut && !proj_cut->window) {
        split_on(*proj_cut, proj_of);
        return;
      }
      if (rad_cut && !rad_cut->window) {
        split_on(*rad_cut, norm_of);
        return;
      }
      if (proj_cut) {
        split_on(*proj_cut, proj_of);
        return;
      }
      if (rad_cut) {
        split_on(*rad_cut, norm_of);
        return;
      }
    }

    // cluster-sized masses far apart relative to the robust bulk scale:
    // overlapping split so a straddling cluster stays whole on one side
    if (may_split) {
      std::vector<double> vals, ws;
      vals.reserve(proj.size());
      ws.reserve(proj.size());
      for (const auto& [v, w] : proj) {
        vals.push_back(v);
        ws.push_back(w);
      }
      double med = weighted_median(vals, ws);
      std::vector<double> devs;
      devs.reserve(vals.size());
      for (double v : vals) devs.push_back(std::abs(v - med));
      double sigma_rob = weighted_median(devs, ws) / 0.6745;
      double q_lo = weighted_quantile(proj, s.weight_floor);
      double q_hi = weighted_quantile(proj, W - s.weight_floor);
      double span = q_hi - q_lo;
      if (span > s.cfg.span_factor * std::max(sigma_rob, 1e-12)) {
        double center = 0.5 * (q_lo + q_hi);
        double rho = s.cfg.overlap_factor * sigma_rob;
        double excluded_left = 0.0, excluded_right = 0.0;
        for (const auto& [t, w] : proj) {
          if (t > center + rho) excluded_left += w;
          if (t < center - rho) excluded_right += w;
        }
        // both children must be strictly smaller or the recursion stalls
        if (excluded_left > 0 && excluded_right > 0) {
          queue.push_back(make_child(nd.branch * 2, proj_of, [&](double t) {
            return t <= center + rho;
          }));
          queue.push_back(make_child(nd.branch * 2 + 1, proj_of, [&](double t) {
            return t >= center - rho;
          }));
          return;
        }
      }
    }

    // filter: downweight by squared degree-k polynomial score
    compute_flattened();
    std::vector<double> score(nd.idx.size(), 0.0);
    double s_max = 0.0;
    int arg_max = -1;
    for (std::size_t i = 0; i < nd.idx.size(); ++i) {
      if (nd.w[static_cast<int>(i)] == 0) continue;
      Vec c = s.X.row(nd.idx[i]).transpose() - mu;
      double val = tensor_power(c, s.k).dot(v_top);
      score[i] = val * val;
      if (score[i] > s_max) {
        s_max = score[i];
        arg_max = static_cast<int>(i);
      }
    }
    if (arg_max < 0 || s_max <= 0) return;  // nothing to filter, give up
    if (s.cfg.deterministic_filter) {
      std::vector<int> order;
      for (std::size_t i = 0; i < nd.idx.size(); ++i)
        if (nd.w[static_cast<int>(i)] > 0) order.push_back(static_cast<int>(i));
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return score[a] > score[b]; });
      int kill = std::max(1, static_cast<int>(order.size() / 50));
      for (int i = 0; i < kill; ++i) {
        s.removed[nd.idx[order[i]]] += nd.w[order[i]];
        nd.w[order[i]] = 0.0;
      }
    } else {
      Rng fr = node_rng.derive("filter", static_cast<uint64_t>(filter_round));
      for (std::size_t i = 0; i < nd.idx.size(); ++i) {
        int ii = static_cast<int>(i);
        if (nd.w[ii] == 0) continue;
        if (static_cast<int>(i) == arg_max || fr.uniform() * s_max < score[i]) {
          s.removed[nd.idx[i]] += nd.w[ii];
          nd.w[ii] = 0.0;
        }
      }
    }
    ++filter_round;
  }
}

}  // namespace

MeanCandidateList list_decode_mean(const Mat& points, double alpha, int k,
                                   double M, Rng& rng,
                                   const ListMeanConfig& cfg) {
  const int N = static_cast<int>(points.rows());
  require_arg(N >= 2, "list_decode_mean: need at least 2 points");
  require_arg(alpha > 0 && alpha <= 1, "list_decode_mean: alpha must lie in (0, 1]");
  require_arg(static_cast<double>(N) >= 2.0 / alpha,
              "list_decode_mean: need at least 2/alpha points");
  require_arg(k >= 1, "list_decode_mean: k must be >= 1");
  require_arg(M > 0, "list_decode_mean: M must be positive");

  Scratch s{points,
            alpha,
            k,
            M,
            cfg,
            std::max(2.0, cfg.split_mass_factor * alpha * N),
            static_cast<int>(std::ceil(std::log2(1.0 / alpha))) + 4,
            Vec::Zero(N),
            {}};

  Node root;
  root.idx.resize(N);
  std::iota(root.idx.begin(), root.idx.end(), 0);
  root.w = Vec::Ones(N);
  root.depth = 0;
  root.branch = 1;

  Rng root_rng = rng.derive("list-decode-mean");
  std::deque<Node> queue;
  queue.push_back(std::move(root));
  while (!queue.empty()) {
    Node nd = std::move(queue.front());
    queue.pop_front();
    process(s, std::move(nd), root_rng, queue);
  }

  // near-duplicate merge, highest weight wins, then the hard cap; the radius
  // stays at the split-gap scale so split branches are never re-merged
  double dedup_radius = cfg.dedup_factor * std::pow(M, 1.0 / (2.0 * k));
  std::vector<int> order(s.emitted.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (s.emitted[a].weight != s.emitted[b].weight)
      return s.emitted[a].weight > s.emitted[b].weight;
    return s.emitted[a].branch < s.emitted[b].branch;
  });
  int cap = static_cast<int>(std::ceil(cfg.list_factor / alpha));
  std::vector<int> kept;
  for (int i : order) {
    bool dup = false;
    for (int j : kept)
      if ((s.emitted[i].mean - s.emitted[j].mean).norm() < dedup_radius) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(i);
    if (static_cast<int>(kept.size()) >= cap) break;
  }
  std::sort(kept.begin(), kept.end(), [&](int a, int b) {
    return s.emitted[a].branch < s.emitted[b].branch;
  });

  MeanCandidateList out;
  out.input_size = N;
  out.filtered_weight = s.removed;
  for (int i : kept) out.candidates.push_back(std::move(s.emitted[i]));
  require_state(static_cast<int>(out.candidates.size()) <= cap,
                "list_decode_mean: list cap exceeded");
  return out;
}

MeanCandidateList list_decode_mean(const std::vector<Vec>& points, double alpha,
                                   int k, double M, Rng& rng,
                                   const ListMeanConfig& cfg) {
  require_arg(!points.empty(), "list_decode_mean: no points");
  Mat X(points.size(), points[0].size());
  for (std::size_t i = 0; i < points.size(); ++i)
    X.row(static_cast<int>(i)) = points[i].transpose();
  return list_decode_mean(X, alpha, k, M, rng, cfg);
}

}  // namespace batchlr
