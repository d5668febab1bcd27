#ifndef JOINTSPARSE_TYPES_HPP
#define JOINTSPARSE_TYPES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <vector>

#include "error.hpp"

namespace jointsparse {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-norm vector t with t_i = ||x^i||_2.
using RowNorms = Eigen::VectorXd;

/// Set of detected nonzero rows I of an n-row matrix; the complement is the
/// truncation set T that stays in the penalty.
class SupportSet {
public:
  SupportSet() = default;

  SupportSet(Index n, std::vector<Index> indices) : n_(n), idx_(std::move(indices)) {
    std::sort(idx_.begin(), idx_.end());
    idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
    detail::require(idx_.empty() || (idx_.front() >= 0 && idx_.back() < n_),
                    "SupportSet: index out of range");
  }

  static SupportSet empty(Index n) { return SupportSet(n, {}); }

  Index dimension() const noexcept { return n_; }
  Index size() const noexcept { return static_cast<Index>(idx_.size()); }
  bool is_empty() const noexcept { return idx_.empty(); }
  const std::vector<Index> &indices() const noexcept { return idx_; }

  bool contains(Index i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

  std::vector<Index> complement() const {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(n_ - size()));
    auto it = idx_.begin();
    for (Index i = 0; i < n_; ++i) {
      if (it != idx_.end() && *it == i)
        ++it;
      else
        out.push_back(i);
    }
    return out;
  }

  friend bool operator==(const SupportSet &, const SupportSet &) = default;

private:
  Index n_ = 0;
  std::vector<Index> idx_;
};

/// Binary truncation weights: w_i = 0 for detected rows, 1 otherwise.
class WeightVector {
public:
  WeightVector() = default;

  explicit WeightVector(Vector w) : w_(std::move(w)) {
    for (Index i = 0; i < w_.size(); ++i)
      detail::require(w_[i] == 0.0 || w_[i] == 1.0, "WeightVector: entries must be 0 or 1");
  }

  static WeightVector ones(Index n) { return WeightVector(Vector::Ones(n)); }
  static WeightVector zeros(Index n) { return WeightVector(Vector::Zero(n)); }

  static WeightVector from_support(const SupportSet &support) {
    Vector w = Vector::Ones(support.dimension());
    for (Index i : support.indices())
      w[i] = 0.0;
    return WeightVector(std::move(w));
  }

  Index size() const noexcept { return w_.size(); }
  double operator[](Index i) const { return w_[i]; }
  const Vector &values() const noexcept { return w_; }

  SupportSet truncated_rows() const {
    std::vector<Index> idx;
    for (Index i = 0; i < w_.size(); ++i)
      if (w_[i] == 0.0)
        idx.push_back(i);
    return SupportSet(w_.size(), std::move(idx));
  }

private:
  Vector w_;
};

} // namespace jointsparse

#endif
