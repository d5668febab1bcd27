#ifndef JOINTSPARSE_CORE_HPP
#define JOINTSPARSE_CORE_HPP

#include <cmath>
#include <concepts>
#include <string>

#include "error.hpp"
#include "linops.hpp"
#include "types.hpp"

namespace jointsparse {

inline RowNorms row_norms(const Matrix &x) { return x.rowwise().norm(); }

inline double l21_norm(const Matrix &x) { return row_norms(x).sum(); }

/// sum_i w_i ||x^i||_2
inline double weighted_l21(const Matrix &x, const WeightVector &w) {
  detail::require_shape(w.size() == x.rows(), "weighted_l21: weight length " + std::to_string(w.size()) +
                                                  " != row count " + std::to_string(x.rows()));
  return w.values().dot(row_norms(x));
}

/// Row-wise group soft threshold, the proximal map of sum_i theta_i ||z^i||_2:
/// row i becomes max(||r^i|| - theta_i, 0) r^i / ||r^i||. Zero rows stay zero.
inline Matrix row_shrink(const Matrix &r, const Vector &thresholds) {
  detail::require_shape(thresholds.size() == r.rows(), "row_shrink: threshold length mismatch");
  Matrix out(r.rows(), r.cols());
  for (Index i = 0; i < r.rows(); ++i) {
    const double theta = thresholds[i];
    detail::require(std::isfinite(theta) && theta >= 0.0,
                    "row_shrink: threshold " + std::to_string(i) + " must be finite and >= 0");
    const double norm = r.row(i).norm();
    if (theta == 0.0) {
      out.row(i) = r.row(i);
    } else if (norm <= theta) {
      out.row(i).setZero();
    } else {
      out.row(i) = ((norm - theta) / norm) * r.row(i);
    }
  }
  return out;
}

template <class F>
concept LossEvaluator = requires(const F &f, const Matrix &x) {
  { f(x) } -> std::convertible_to<double>;
};

/// L(X) + rho * ||X||_{w,2,1}
template <LossEvaluator Loss>
double staged_objective(const Matrix &x, const WeightVector &w, double rho, const Loss &loss) {
  return static_cast<double>(loss(x)) + rho * weighted_l21(x, w);
}

/// L(X) = ||A X - B||_F^2, the least-squares loss of the shared-operator model.
class SharedOperatorLoss {
public:
  SharedOperatorLoss(const MeasurementOperator &op, const Matrix &b) : op_(&op), b_(&b) {
    detail::require_shape(b.rows() == op.rows(), "SharedOperatorLoss: B row count mismatch");
  }

  double operator()(const Matrix &x) const { return (op_->apply(x) - *b_).squaredNorm(); }

private:
  const MeasurementOperator *op_;
  const Matrix *b_;
};

} // namespace jointsparse

#endif
