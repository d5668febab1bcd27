#ifndef JOINTSPARSE_BASELINES_HPP
#define JOINTSPARSE_BASELINES_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "error.hpp"
#include "types.hpp"

// Greedy MMV baselines on an explicit matrix: simultaneous OMP and one-shot
// correlation thresholding. Column scores aggregate channels with the l2 norm.

namespace jointsparse {

struct GreedyResult {
  Matrix x;
  std::vector<Index> support;        // selection order
  std::vector<double> residual_norms; // ||B - A X||_F after each step
  bool rank_deficient = false;
};

namespace detail {

inline void check_greedy_args(const Matrix &a, const Matrix &b, Index k) {
  require_shape(a.rows() == b.rows(), "greedy: A and B row counts differ");
  require(k >= 0 && k <= a.rows(), "greedy: need 0 <= k <= m");
  require(k <= a.cols(), "greedy: k exceeds column count");
}

/// Least-squares fit of B on the columns `support`; X is zero elsewhere.
inline Matrix fit_on_support(const Matrix &a, const Matrix &b, const std::vector<Index> &support,
                             bool &rank_deficient) {
  Matrix x = Matrix::Zero(a.cols(), b.cols());
  if (support.empty())
    return x;
  Matrix sub(a.rows(), static_cast<Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j)
    sub.col(static_cast<Index>(j)) = a.col(support[j]);
  Eigen::ColPivHouseholderQR<Matrix> qr(sub);
  if (qr.rank() < sub.cols())
    rank_deficient = true;
  const Matrix coef = qr.solve(b);
  for (std::size_t j = 0; j < support.size(); ++j)
    x.row(support[j]) = coef.row(static_cast<Index>(j));
  return x;
}

inline Vector normalized_scores(const Matrix &a, const Matrix &corr) {
  Vector s(a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    const double cn = a.col(j).norm();
    s[j] = cn > 0.0 ? corr.row(j).norm() / cn : 0.0;
  }
  return s;
}

} // namespace detail

/// Simultaneous orthogonal matching pursuit with k greedy selections.
inline GreedyResult somp(const Matrix &a, const Matrix &b, Index k) {
  detail::check_greedy_args(a, b, k);
  GreedyResult res;
  res.x = Matrix::Zero(a.cols(), b.cols());
  std::vector<bool> used(static_cast<std::size_t>(a.cols()), false);
  Matrix r = b;
  for (Index step = 0; step < k; ++step) {
    const Vector score = detail::normalized_scores(a, a.transpose() * r);
    Index best = -1;
    for (Index j = 0; j < a.cols(); ++j) {
      if (used[static_cast<std::size_t>(j)])
        continue;
      if (best < 0 || score[j] > score[best])
        best = j;
    }
    used[static_cast<std::size_t>(best)] = true;
    res.support.push_back(best);
    res.x = detail::fit_on_support(a, b, res.support, res.rank_deficient);
    r = b - a * res.x;
    res.residual_norms.push_back(r.norm());
  }
  return res;
}

/// Keeps the k columns with the largest ||A_j^T B|| / ||A_j|| (ties go to the
/// lower index) and fits B on them by least squares.
inline GreedyResult p_threshold(const Matrix &a, const Matrix &b, Index k) {
  detail::check_greedy_args(a, b, k);
  GreedyResult res;
  const Vector score = detail::normalized_scores(a, a.transpose() * b);
  std::vector<Index> order(static_cast<std::size_t>(a.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return score[i] > score[j]; });
  res.support.assign(order.begin(), order.begin() + k);
  res.x = detail::fit_on_support(a, b, res.support, res.rank_deficient);
  res.residual_norms.push_back((b - a * res.x).norm());
  return res;
}

} // namespace jointsparse

#endif
