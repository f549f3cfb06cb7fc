#include "batchlr/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <utility>

namespace batchlr {

double batch_sq_error(const Vec& beta, const Batch& b) {
  require_arg(b.X.cols() == beta.size(), "batch_sq_error: dimension mismatch");
  return (b.y - b.X * beta).squaredNorm();
}

double candidate_separation(const ProblemParams& p, double Q,
                            double sep_factor) {
  require_arg(Q > 0.0, "candidate_separation: Q must be positive");
  require_arg(sep_factor > 0.0, "candidate_separation: factor must be positive");
  const double k = static_cast<double>(p.k);
  const double tail = k * std::pow(p.alpha, -1.0 / k) * p.sigma *
                      std::pow(Q, 1.0 / k) /
                      std::sqrt(static_cast<double>(p.n));
  return sep_factor * (p.R + tail);
}

SimplexResult simplex_box_max(const Mat& A, const Vec& upper,
                              double early_stop) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  require_arg(static_cast<int>(upper.size()) == n,
              "simplex: bound size mismatch");
  require_arg((upper.array() >= 0.0).all(), "simplex: negative upper bound");

  constexpr double kTol = 1e-9;
  const double kInf = std::numeric_limits<double>::infinity();
  const int total = n + m;

  // Dictionary over structural columns then slacks; start at z = 0 with the
  // slack basis, which is feasible because every right-hand side is zero.
  Mat T(m, total);
  T.leftCols(n) = A;
  T.rightCols(m).setIdentity();
  Vec value = Vec::Zero(m);
  Vec cost = Vec::Zero(total);
  cost.head(n).setOnes();
  Vec hi(total);
  hi.head(n) = upper;
  hi.tail(m).setConstant(kInf);
  std::vector<int> basis(m);
  std::vector<signed char> state(total, 0);  // 0 lower, 1 upper, 2 basic
  for (int i = 0; i < m; ++i) {
    basis[i] = n + i;
    state[n + i] = 2;
  }
  double obj = 0.0;

  const long max_iters = 2000L * (total + 1);
  for (long iter = 0;; ++iter) {
    require_state(iter < max_iters, "simplex: iteration cap exceeded");
    if (obj >= early_stop) break;

    // Bland's rule: lowest-index column whose move improves the objective.
    int q = -1;
    int dir = 0;
    for (int j = 0; j < total; ++j) {
      if (state[j] == 0 && cost[j] > kTol) {
        q = j;
        dir = 1;
        break;
      }
      if (state[j] == 1 && cost[j] < -kTol) {
        q = j;
        dir = -1;
        break;
      }
    }
    if (q < 0) break;

    double theta = hi[q];  // moving all the way to the opposite bound
    int leave = -1;
    int leave_to = 0;
    for (int i = 0; i < m; ++i) {
      const double g = dir * T(i, q);
      double cap = kInf;
      int to = 0;
      if (g > kTol) {
        cap = value[i] / g;
        to = 0;
      } else if (g < -kTol && hi[basis[i]] < kInf) {
        cap = (hi[basis[i]] - value[i]) / (-g);
        to = 1;
      } else {
        continue;
      }
      if (cap < theta - kTol) {
        theta = std::max(cap, 0.0);
        leave = i;
        leave_to = to;
      } else if (leave >= 0 && cap < theta + kTol && basis[i] < basis[leave]) {
        leave = i;  // tie: lowest basic index, again Bland
        leave_to = to;
      } else if (leave < 0 && cap <= theta) {
        theta = std::max(cap, 0.0);
        leave = i;
        leave_to = to;
      }
    }
    require_state(theta < kInf, "simplex: unbounded direction");

    const double delta = dir * theta;
    obj += cost[q] * delta;
    if (leave < 0) {
      // The entering column just flips to its other bound; basis unchanged.
      for (int i = 0; i < m; ++i) value[i] -= T(i, q) * delta;
      state[q] = static_cast<signed char>(state[q] == 0 ? 1 : 0);
      continue;
    }

    const double entering_start = state[q] == 0 ? 0.0 : hi[q];
    for (int i = 0; i < m; ++i)
      if (i != leave) value[i] -= T(i, q) * delta;
    state[basis[leave]] = static_cast<signed char>(leave_to);

    const double piv = T(leave, q);
    T.row(leave) /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = T(i, q);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    const double cf = cost[q];
    if (cf != 0.0) cost -= cf * T.row(leave).transpose();

    value[leave] = entering_start + delta;
    basis[leave] = q;
    state[q] = 2;
  }

  SimplexResult res;
  res.z = Vec::Zero(n);
  for (int j = 0; j < n; ++j)
    if (state[j] == 1) res.z[j] = hi[j];
  for (int i = 0; i < m; ++i)
    if (basis[i] < n)
      res.z[basis[i]] = std::clamp(value[i], 0.0, hi[basis[i]]);
  res.objective = res.z.sum();
  return res;
}

namespace {

struct PatternHash {
  std::size_t operator()(const std::vector<std::uint64_t>& v) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint64_t w : v) {
      h ^= w;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// Feasibility of the weighting system given precomputed squared errors:
// cand_err over batches, one rival_err row per rival.
std::optional<Vec> feasible_core(const Eigen::RowVectorXd& cand_err,
                                 const Mat& rival_err, double alpha) {
  const int B = static_cast<int>(cand_err.size());
  const int R = static_cast<int>(rival_err.rows());
  const double theta = 0.9 * alpha * static_cast<double>(B);
  const double frac = alpha / 20.0;

  // Every witness is re-checked against the raw system before release.
  auto verified = [&](Vec w) -> std::optional<Vec> {
    for (int b = 0; b < B; ++b) w[b] = std::clamp(w[b], 0.0, 1.0);
    const double tot = w.sum();
    const double slack = 1e-7 * std::max(1.0, static_cast<double>(B));
    if (tot < theta - slack) return std::nullopt;
    for (int r = 0; r < R; ++r) {
      double rival_mass = 0.0;
      for (int b = 0; b < B; ++b)
        if (rival_err(r, b) <= cand_err[b]) rival_mass += w[b];
      if (rival_mass > frac * tot + slack) return std::nullopt;
    }
    return w;
  };

  if (R == 0) return verified(Vec::Ones(B));

  // Batches with the same rival-win bitset are interchangeable, so the
  // search runs over pattern groups instead of individual batches.
  const int words = (R + 63) / 64;
  std::unordered_map<std::vector<std::uint64_t>, int, PatternHash> index;
  std::vector<std::vector<std::uint64_t>> keys;
  std::vector<std::vector<int>> members;
  std::vector<std::uint64_t> key(static_cast<std::size_t>(words));
  for (int b = 0; b < B; ++b) {
    std::fill(key.begin(), key.end(), 0);
    for (int r = 0; r < R; ++r)
      if (rival_err(r, b) <= cand_err[b])
        key[static_cast<std::size_t>(r / 64)] |= 1ULL << (r % 64);
    auto [it, fresh] = index.try_emplace(key, static_cast<int>(keys.size()));
    if (fresh) {
      keys.push_back(key);
      members.emplace_back();
    }
    members[static_cast<std::size_t>(it->second)].push_back(b);
  }
  const int P = static_cast<int>(keys.size());

  auto wins = [&](int p, int r) {
    return (keys[static_cast<std::size_t>(p)][static_cast<std::size_t>(r / 64)] >>
            (r % 64)) &
           1ULL;
  };

  // Putting full weight on the batches no rival wins settles it outright.
  auto zero_it = index.find(std::vector<std::uint64_t>(
      static_cast<std::size_t>(words), 0));
  if (zero_it != index.end() &&
      static_cast<double>(
          members[static_cast<std::size_t>(zero_it->second)].size()) >= theta) {
    Vec w = Vec::Zero(B);
    for (int b : members[static_cast<std::size_t>(zero_it->second)]) w[b] = 1.0;
    return verified(std::move(w));
  }

  // A rival winning on all but a sliver bounds the reachable total weight:
  // tot <= clean / (1 - frac) regardless of how weights are placed.
  for (int r = 0; r < R; ++r) {
    double clean = 0.0;
    for (int p = 0; p < P; ++p)
      if (!wins(p, r))
        clean += static_cast<double>(members[static_cast<std::size_t>(p)].size());
    if (clean / (1.0 - frac) < theta * (1.0 - 1e-12)) return std::nullopt;
  }

  Mat A(R, P);
  Vec upper(P);
  for (int p = 0; p < P; ++p) {
    upper[p] =
        static_cast<double>(members[static_cast<std::size_t>(p)].size());
    for (int r = 0; r < R; ++r) A(r, p) = wins(p, r) ? 1.0 - frac : -frac;
  }
  SimplexResult sol = simplex_box_max(A, upper, theta);
  if (sol.objective < theta - 1e-7 * std::max(1.0, theta))
    return std::nullopt;

  Vec w = Vec::Zero(B);
  for (int p = 0; p < P; ++p) {
    const double share = sol.z[p] / upper[p];
    for (int b : members[static_cast<std::size_t>(p)]) w[b] = share;
  }
  return verified(std::move(w));
}

}  // namespace

std::optional<Vec> ie_feasible(const Vec& beta, const std::vector<Vec>& L,
                               const std::vector<Batch>& T, double alpha,
                               double separation) {
  require_arg(!T.empty(), "ie_feasible: empty batch set");
  require_arg(alpha > 0.0 && alpha <= 1.0, "ie_feasible: alpha out of range");
  require_arg(separation > 0.0, "ie_feasible: separation must be positive");

  std::vector<const Vec*> rivals;
  for (const Vec& cand : L)
    if ((cand - beta).norm() >= separation) rivals.push_back(&cand);

  const int B = static_cast<int>(T.size());
  Eigen::RowVectorXd cand_err(B);
  for (int b = 0; b < B; ++b) cand_err[b] = batch_sq_error(beta, T[b]);
  Mat rival_err(static_cast<int>(rivals.size()), B);
  for (std::size_t r = 0; r < rivals.size(); ++r)
    for (int b = 0; b < B; ++b)
      rival_err(static_cast<int>(r), b) = batch_sq_error(*rivals[r], T[b]);
  return feasible_core(cand_err, rival_err, alpha);
}

std::vector<int> prune_indices(const std::vector<Vec>& L,
                               const std::vector<Batch>& T,
                               const ProblemParams& p, double Q,
                               double sep_factor) {
  require_arg(!T.empty(), "prune: empty batch set");
  const double sep = candidate_separation(p, Q, sep_factor);
  const int B = static_cast<int>(T.size());

  std::vector<int> uniq;
  for (std::size_t i = 0; i < L.size(); ++i) {
    bool dup = false;
    for (int u : uniq) {
      const Vec& a = L[static_cast<std::size_t>(u)];
      if (a.size() == L[i].size() && (a.array() == L[i].array()).all()) {
        dup = true;
        break;
      }
    }
    if (!dup) uniq.push_back(static_cast<int>(i));
  }
  const int U = static_cast<int>(uniq.size());

  Mat err(U, B);
  for (int u = 0; u < U; ++u)
    for (int b = 0; b < B; ++b)
      err(u, b) = batch_sq_error(L[static_cast<std::size_t>(uniq[u])], T[b]);

  std::vector<int> survivors;
  for (int u = 0; u < U; ++u) {
    const Vec& me = L[static_cast<std::size_t>(uniq[u])];
    std::vector<int> rival_rows;
    for (int v = 0; v < U; ++v)
      if (v != u &&
          (L[static_cast<std::size_t>(uniq[v])] - me).norm() >= sep)
        rival_rows.push_back(v);
    Mat rival_err(static_cast<int>(rival_rows.size()), B);
    for (std::size_t r = 0; r < rival_rows.size(); ++r)
      rival_err.row(static_cast<int>(r)) =
          err.row(rival_rows[r]);
    if (feasible_core(err.row(u), rival_err, p.alpha)) survivors.push_back(u);
  }

  std::vector<int> kept;
  for (int u : survivors) {
    const Vec& me = L[static_cast<std::size_t>(uniq[u])];
    bool shadowed = false;
    for (int k : kept)
      if ((L[static_cast<std::size_t>(k)] - me).norm() < sep) {
        shadowed = true;
        break;
      }
    if (!shadowed) kept.push_back(uniq[u]);
  }

  const std::size_t cap =
      static_cast<std::size_t>(std::ceil(4.0 / p.alpha)) + 1;
  require_state(kept.size() <= cap, "prune: separated survivor cap exceeded");
  return kept;
}

std::vector<Vec> prune(const std::vector<Vec>& L, const std::vector<Batch>& T,
                       const ProblemParams& p, double Q, double sep_factor) {
  std::vector<Vec> out;
  for (int i : prune_indices(L, T, p, Q, sep_factor))
    out.push_back(L[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace batchlr
