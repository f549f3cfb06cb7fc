#include "batchlr/oracle.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "batchlr/moments.hpp"

namespace batchlr {

namespace {

double directional_moment(const std::vector<Vec>& points, const Vec& mu,
                          const Vec& u, int k) {
  double acc = 0.0;
  for (const Vec& p : points) acc += ipow(u.dot(p - mu), 2 * k);
  return acc / static_cast<double>(points.size());
}

// Nearest rank-one direction to the top eigenvector of the flattened matrix:
// reshape to d x d^{t-1} and run a few rounds of tensor power iteration.
Vec rank_one_direction(const Vec& w, int d, int k) {
  if (k == 1) return w.normalized();
  const int rest = static_cast<int>(w.size()) / d;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      reshaped(w.data(), d, rest);
  // start from the dominant left singular direction
  Eigen::JacobiSVD<Mat> svd(reshaped, Eigen::ComputeThinU);
  Vec v = svd.matrixU().col(0);
  for (int round = 0; round < 64; ++round) {
    // contract all but the first index with v^(x)(k-1)
    Vec vk = tensor_power(v, k - 1);
    Vec next = reshaped * vk;
    double nrm = next.norm();
    if (nrm < 1e-14) return v;
    next /= nrm;
    if ((next - v).norm() < 1e-12 || (next + v).norm() < 1e-12) return next;
    v = next;
  }
  return v;
}

}  // namespace

OracleReport make_oracle_report(const std::string& name, double brute_force,
                                double module_value, double tolerance) {
  OracleReport r;
  r.name = name;
  r.brute_force_value = brute_force;
  r.module_value = module_value;
  double denom = std::max({std::abs(brute_force), std::abs(module_value), 1e-300});
  r.relative_error = std::abs(brute_force - module_value) / denom;
  r.tolerance = tolerance;
  r.passed = r.relative_error <= tolerance;
  return r;
}

double directional_moment_sup(const std::vector<Vec>& points, int k,
                              int num_directions, Rng& rng) {
  require_arg(!points.empty(), "directional_moment_sup: no points");
  require_arg(k >= 1 && k <= 3, "directional_moment_sup: k must lie in [1, 3]");
  const int d = static_cast<int>(points[0].size());
  require_arg(d <= 6, "directional_moment_sup: meant for d <= 6");
  require_arg(num_directions >= 1, "directional_moment_sup: need directions");

  Vec mu = Vec::Zero(d);
  for (const Vec& p : points) mu += p;
  mu /= static_cast<double>(points.size());

  double best = 0.0;
  for (int i = 0; i < num_directions; ++i)
    best = std::max(best, directional_moment(points, mu, rng.unit_vector(d), k));
  for (int i = 0; i < d; ++i)
    best = std::max(best, directional_moment(points, mu, Vec::Unit(d, i), k));

  // candidate from the flattened matrix itself
  FlattenedMomentMatrix fm = empirical_moment_matrix(points, k, mu);
  Eigen::SelfAdjointEigenSolver<Mat> es(fm.mat);
  require_state(es.info() == Eigen::Success, "directional_moment_sup: eigensolver failed");
  Vec top = es.eigenvectors().col(fm.mat.rows() - 1);
  Vec v = rank_one_direction(top, d, k);
  best = std::max(best, directional_moment(points, mu, v, k));

  // local refinement around the best candidate found so far
  Vec center = v;
  double step = 0.5;
  for (int round = 0; round < 200; ++round) {
    Vec trial = (center + step * rng.gaussian_vec(d)).normalized();
    double val = directional_moment(points, mu, trial, k);
    if (val > best) {
      best = val;
      center = trial;
    }
    step *= 0.985;
  }
  return best;
}

LsqResult subset_least_squares(const std::vector<Batch>& batches,
                               const std::vector<int>& subset) {
  require_arg(!subset.empty(), "subset_least_squares: empty subset");
  int rows = 0;
  int d = 0;
  for (int idx : subset) {
    require_arg(idx >= 0 && idx < static_cast<int>(batches.size()),
                "subset_least_squares: index out of range");
    rows += static_cast<int>(batches[idx].X.rows());
    d = static_cast<int>(batches[idx].X.cols());
  }
  Mat X(rows, d);
  Vec y(rows);
  int at = 0;
  for (int idx : subset) {
    const Batch& b = batches[idx];
    X.middleRows(at, b.X.rows()) = b.X;
    y.segment(at, b.y.size()) = b.y;
    at += static_cast<int>(b.X.rows());
  }
  Mat gram = X.transpose() * X;
  Vec rhs = X.transpose() * y;
  LsqResult out;
  Eigen::FullPivLU<Mat> lu(gram);
  if (lu.isInvertible()) {
    out.beta = lu.solve(rhs);
    out.degenerate = false;
  } else {
    out.beta = gram.completeOrthogonalDecomposition().pseudoInverse() * rhs;
    out.degenerate = true;
  }
  return out;
}

MzExact mz_exact_tiny(const std::vector<double>& atoms,
                      const std::vector<double>& probs, int n, int k) {
  require_arg(!atoms.empty() && atoms.size() <= 4, "mz_exact_tiny: need 1 to 4 atoms");
  require_arg(atoms.size() == probs.size(), "mz_exact_tiny: atom/probability mismatch");
  require_arg(n >= 1 && k >= 1 && k <= 8, "mz_exact_tiny: bad n or k");
  const int A = static_cast<int>(atoms.size());
  double total_terms = std::pow(static_cast<double>(A), n);
  require_arg(total_terms <= 4096.0, "mz_exact_tiny: |support|^n exceeds 4096");

  double psum = 0.0;
  for (double p : probs) {
    require_arg(p > 0.0, "mz_exact_tiny: probabilities must be positive");
    psum += p;
  }
  double mean = 0.0;
  for (int a = 0; a < A; ++a) mean += probs[a] / psum * atoms[a];

  double per_sample = 0.0;
  for (int a = 0; a < A; ++a)
    per_sample += probs[a] / psum * ipow(atoms[a] - mean, k);

  // odometer over support^n
  std::vector<int> digit(n, 0);
  double lhs = 0.0;
  while (true) {
    double prob = 1.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      prob *= probs[digit[i]] / psum;
      sum += atoms[digit[i]] - mean;
    }
    lhs += prob * ipow(sum, k);
    int pos = 0;
    while (pos < n && ++digit[pos] == A) {
      digit[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }

  MzExact out;
  out.lhs = lhs;
  out.rhs = std::pow(static_cast<double>(k) * n, k / 2.0) * per_sample;
  return out;
}

}  // namespace batchlr
