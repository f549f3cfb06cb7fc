#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace batchlr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Malformed configuration or bad call arguments. CLI exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented runtime invariant failed. CLI exit code 3.
struct invariant_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File or serialization problem. CLI exit code 4.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_arg(bool ok, const std::string& msg) {
  if (!ok) throw config_error(msg);
}

inline void require_state(bool ok, const std::string& msg) {
  if (!ok) throw invariant_error(msg);
}

/// Cascade summation with a fixed association order. Used where the
/// accumulation order is part of the determinism contract.
template <typename F>
double pairwise_sum(std::size_t lo, std::size_t hi, F&& term) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term);
}

/// (m)!! for odd m; value 1 for m <= 0.
inline double double_factorial(int m) {
  double v = 1.0;
  for (int i = m; i >= 2; i -= 2) v *= i;
  return v;
}

inline double ipow(double base, int e) {
  double v = 1.0;
  for (int i = 0; i < e; ++i) v *= base;
  return v;
}

}  // namespace batchlr
