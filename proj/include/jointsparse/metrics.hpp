#ifndef JOINTSPARSE_METRICS_HPP
#define JOINTSPARSE_METRICS_HPP

#include <limits>

#include "core.hpp"
#include "types.hpp"

namespace jointsparse {

/// Support-detection bookkeeping (Total, Detected, Correct, False).
struct Quadruplet {
  int total = 0;    // nonzero rows of the ground truth
  int detected = 0; // |I| = correct + false_alarms
  int correct = 0;  // |I ∩ supp|
  int false_alarms = 0;

  friend bool operator==(const Quadruplet &, const Quadruplet &) = default;
};

/// Rows of `x` with a nonzero entry.
inline SupportSet exact_support(const Matrix &x) {
  std::vector<Index> idx;
  for (Index i = 0; i < x.rows(); ++i)
    if ((x.row(i).array() != 0.0).any())
      idx.push_back(i);
  return SupportSet(x.rows(), std::move(idx));
}

/// Rows whose norm exceeds `rel` times the largest row norm; solver outputs
/// are rarely exactly zero off the support.
inline SupportSet numerical_support(const Matrix &x, double rel = 1e-8) {
  const RowNorms t = row_norms(x);
  std::vector<Index> idx;
  if (t.size() == 0)
    return SupportSet(0, {});
  const double cut = rel * t.maxCoeff();
  for (Index i = 0; i < t.size(); ++i)
    if (t[i] > cut)
      idx.push_back(i);
  return SupportSet(x.rows(), std::move(idx));
}

inline Quadruplet quadruplet(const SupportSet &detected, const SupportSet &truth) {
  Quadruplet q;
  q.total = static_cast<int>(truth.size());
  q.detected = static_cast<int>(detected.size());
  for (Index i : detected.indices())
    if (truth.contains(i))
      ++q.correct;
  q.false_alarms = q.detected - q.correct;
  return q;
}

/// ||X - X_true||_F / ||X_true||_F. A zero truth gives 0 for X = 0 and +inf otherwise.
inline double relative_error(const Matrix &x, const Matrix &truth) {
  detail::require_shape(x.rows() == truth.rows() && x.cols() == truth.cols(), "relative_error: shape mismatch");
  const double denom = truth.norm();
  const double num = (x - truth).norm();
  if (denom == 0.0)
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / denom;
}

} // namespace jointsparse

#endif
