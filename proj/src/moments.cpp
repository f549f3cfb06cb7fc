#include "batchlr/moments.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace batchlr {

namespace {

constexpr int kFlattenCap = 4096;

int flat_dim(int d, int t) {
  require_arg(t >= 1, "moment matrix: t must be >= 1");
  long long dim = 1;
  for (int i = 0; i < t; ++i) {
    dim *= d;
    require_arg(dim <= kFlattenCap, "moment matrix: d^t exceeds 4096");
  }
  return static_cast<int>(dim);
}

double top_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  require_state(es.info() == Eigen::Success, "moment matrix: eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

}  // namespace

BatchStatistic batch_average(const Batch& b, int source_index) {
  const int n = static_cast<int>(b.X.rows());
  const int d = static_cast<int>(b.X.cols());
  require_arg(n >= 1 && b.y.size() == n, "batch_average: malformed batch");
  BatchStatistic s;
  s.source = source_index;
  s.z.resize(d);
  for (int j = 0; j < d; ++j) {
    s.z[j] = pairwise_sum(0, static_cast<std::size_t>(n), [&](std::size_t i) {
               return b.X(static_cast<int>(i), j) * b.y[static_cast<int>(i)];
             }) /
             n;
  }
  return s;
}

std::vector<BatchStatistic> batch_averages(const std::vector<Batch>& batches) {
  std::vector<BatchStatistic> out;
  out.reserve(batches.size());
  for (std::size_t i = 0; i < batches.size(); ++i)
    out.push_back(batch_average(batches[i], static_cast<int>(i)));
  return out;
}

Vec tensor_power(const Vec& v, int t) {
  const int d = static_cast<int>(v.size());
  flat_dim(d, t);
  Vec w = v;
  for (int step = 1; step < t; ++step) {
    Vec next(w.size() * d);
    for (int a = 0; a < w.size(); ++a)
      for (int b = 0; b < d; ++b) next[a * d + b] = w[a] * v[b];
    w = std::move(next);
  }
  return w;
}

FlattenedMomentMatrix empirical_moment_matrix(const std::vector<Vec>& points,
                                              int t, const Vec& mu) {
  require_arg(!points.empty(), "moment matrix: no points");
  const int d = static_cast<int>(mu.size());
  Mat pts(points.size(), d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    require_arg(points[i].size() == d, "moment matrix: dimension mismatch");
    pts.row(static_cast<int>(i)) = points[i].transpose();
  }
  return weighted_moment_matrix(pts, Vec::Ones(static_cast<int>(points.size())), t, mu);
}

FlattenedMomentMatrix weighted_moment_matrix(const Mat& points, const Vec& w,
                                             int t, const Vec& mu) {
  const int N = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  require_arg(mu.size() == d, "moment matrix: center dimension mismatch");
  require_arg(w.size() == N, "moment matrix: weight count mismatch");
  const int dim = flat_dim(d, t);

  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    require_arg(w[i] >= 0.0, "moment matrix: negative weight");
    total += w[i];
  }
  require_arg(total > 0.0, "moment matrix: zero total weight");

  FlattenedMomentMatrix out;
  out.t = t;
  out.mu = mu;
  out.mat = Mat::Zero(dim, dim);
  Vec centered(d);
  for (int i = 0; i < N; ++i) {
    if (w[i] == 0.0) continue;
    centered = points.row(i).transpose() - mu;
    Vec power = tensor_power(centered, t);
    out.mat.selfadjointView<Eigen::Lower>().rankUpdate(power, w[i] / total);
  }
  out.mat.triangularView<Eigen::StrictlyUpper>() =
      out.mat.transpose().triangularView<Eigen::StrictlyUpper>();
  return out;
}

MomentCertificate certify_moment_bound(const std::vector<Vec>& points, int k,
                                       double M) {
  require_arg(points.size() >= 2, "certify: need at least 2 points");
  require_arg(M > 0.0, "certify: bound must be positive");
  const int d = static_cast<int>(points[0].size());
  Vec mu = Vec::Zero(d);
  for (const Vec& p : points) mu += p;
  mu /= static_cast<double>(points.size());
  FlattenedMomentMatrix fm = empirical_moment_matrix(points, k, mu);
  MomentCertificate cert;
  cert.degree = 2 * k;
  cert.bound = M;
  cert.lambda_max = std::max(top_eigenvalue(fm.mat), 0.0);
  cert.passed = cert.lambda_max <= M;
  return cert;
}

double batch_moment_bound(int n, int k, double Q, double sigma, double radius,
                          double C) {
  require_arg(n >= 1 && k >= 1 && Q > 0 && C > 0, "moment bound: bad arguments");
  double scale = ipow(2.0 * k, 2 * k) / ipow(static_cast<double>(n), k);
  return C * scale * Q * (ipow(sigma, 2 * k) + 2.0 * ipow(radius, 2 * k));
}

MzReport verify_mz_bound(const CovariateModel& cov, const Vec& beta,
                         double sigma, int n, int k, int trials, Rng& rng) {
  require_arg(k >= 2 && k % 2 == 0, "verify_mz_bound: k must be even and >= 2");
  require_arg(n >= 1, "verify_mz_bound: n must be >= 1");
  require_arg(trials >= 10, "verify_mz_bound: too few trials");
  const int d = static_cast<int>(beta.size());
  require_arg(d >= 1, "verify_mz_bound: empty beta");

  const int directions = 8;
  MzReport rep;
  rep.k = k;
  rep.n = n;
  rep.trials = trials;
  rep.ratio = 0.0;
  for (int dir = 0; dir < directions; ++dir) {
    Rng r = rng.derive("mz-direction", static_cast<uint64_t>(dir));
    Vec v = r.unit_vector(d);
    const double mean_p = v.dot(beta);  // E[<v,x> y] under identity second moment
    double lhs = 0.0;
    double per_sample = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      double group = 0.0;
      for (int i = 0; i < n; ++i) {
        Vec x = cov.sample(d, r);
        double y = x.dot(beta) + sigma * r.normal();
        double c = v.dot(x) * y - mean_p;
        group += c;
        per_sample += ipow(c, k);
      }
      lhs += ipow(group, k);
    }
    lhs /= trials;
    per_sample /= static_cast<double>(trials) * n;
    double bound = std::pow(static_cast<double>(k) * n, k / 2.0) * per_sample;
    double ratio = bound > 0 ? lhs / bound : std::numeric_limits<double>::infinity();
    if (ratio > rep.ratio) {
      rep.ratio = ratio;
      rep.lhs = lhs;
      rep.bound = bound;
    }
  }
  rep.violated = rep.ratio > 1.2;
  return rep;
}

BatchMomentReport check_batch_moment_bounds(const std::vector<BatchStatistic>& stats,
                                            const ProblemParams& p, double Q,
                                            const Vec& beta_star, double C,
                                            double cov_factor) {
  require_arg(stats.size() >= 2, "check_batch_moment_bounds: need at least 2 statistics");
  std::vector<Vec> zs;
  zs.reserve(stats.size());
  for (const BatchStatistic& s : stats) zs.push_back(s.z);

  BatchMomentReport rep;
  rep.moment_bound =
      batch_moment_bound(p.n, p.k, Q, p.sigma, beta_star.norm(), C);
  rep.cert = certify_moment_bound(zs, p.k, rep.moment_bound);

  Vec mu = Vec::Zero(p.d);
  for (const Vec& z : zs) mu += z;
  mu /= static_cast<double>(zs.size());
  Mat covm = Mat::Zero(p.d, p.d);
  for (const Vec& z : zs) {
    Vec c = z - mu;
    covm.selfadjointView<Eigen::Lower>().rankUpdate(c, 1.0 / static_cast<double>(zs.size()));
  }
  covm.triangularView<Eigen::StrictlyUpper>() =
      covm.transpose().triangularView<Eigen::StrictlyUpper>();
  rep.cov_lambda_max = top_eigenvalue(covm);
  rep.cov_bound =
      cov_factor * (beta_star.squaredNorm() + p.sigma * p.sigma) / p.n;
  rep.cov_passed = rep.cov_lambda_max <= rep.cov_bound;
  return rep;
}

}  // namespace batchlr
