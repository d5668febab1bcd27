#ifndef JOINTSPARSE_LINOPS_HPP
#define JOINTSPARSE_LINOPS_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace jointsparse {

enum class OperatorKind { dense, partial_walsh_hadamard };

inline std::string to_string(OperatorKind k) {
  return k == OperatorKind::dense ? "dense" : "pwh";
}

constexpr bool is_power_of_two(Index n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

/// In-place unnormalized fast Walsh-Hadamard transform in natural (Sylvester)
/// ordering. Length must be a power of two.
inline void fwht(std::span<double> v) {
  const std::size_t n = v.size();
  detail::require(n == 0 || is_power_of_two(static_cast<Index>(n)), "fwht: length must be a power of two");
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

namespace detail {

struct DenseOperator {
  Matrix a;
  bool orthonormal_rows = false;
};

// A = n^{-1/2} * R * H * D * P, with P a column permutation, D random signs,
// H the Sylvester Hadamard matrix and R a selection of distinct rows.
struct PwhOperator {
  Index n = 0;
  std::uint64_t seed = 0;
  std::vector<Index> selected_rows;
  std::vector<double> signs;
  std::vector<Index> permutation; // (P x)[i] = x[permutation[i]]
  double scale = 1.0;
};

} // namespace detail

class MeasurementOperator;
inline MeasurementOperator make_dense(Matrix entries);
inline MeasurementOperator make_pwh(Index n, Index m, std::uint64_t seed);

/// Measurement operator A (m x n) with forward and adjoint actions on
/// column-stacked matrices. Immutable after construction.
class MeasurementOperator {
public:
  OperatorKind kind() const noexcept {
    return std::holds_alternative<detail::DenseOperator>(impl_) ? OperatorKind::dense
                                                                : OperatorKind::partial_walsh_hadamard;
  }

  Index rows() const noexcept { return m_; }
  Index cols() const noexcept { return n_; }

  /// True when A * A^T = I is certified (by construction for pwh, by a
  /// numerical check for dense matrices).
  bool has_orthonormal_rows() const noexcept {
    if (auto *d = std::get_if<detail::DenseOperator>(&impl_))
      return d->orthonormal_rows;
    return true;
  }

  /// Seed of a pwh operator; unspecified for dense ones.
  std::uint64_t seed() const noexcept {
    if (auto *p = std::get_if<detail::PwhOperator>(&impl_))
      return p->seed;
    return 0;
  }

  const Matrix *dense_entries() const noexcept {
    if (auto *d = std::get_if<detail::DenseOperator>(&impl_))
      return &d->a;
    return nullptr;
  }

  Matrix apply(const Matrix &x) const {
    detail::require_shape(x.rows() == n_, "apply: X must have " + std::to_string(n_) + " rows, got " +
                                              std::to_string(x.rows()));
    if (auto *d = std::get_if<detail::DenseOperator>(&impl_))
      return d->a * x;
    const auto &p = std::get<detail::PwhOperator>(impl_);
    Matrix out(m_, x.cols());
    std::vector<double> buf(static_cast<std::size_t>(n_));
    for (Index c = 0; c < x.cols(); ++c) {
      for (Index i = 0; i < n_; ++i)
        buf[static_cast<std::size_t>(i)] = p.signs[static_cast<std::size_t>(i)] *
                                           x(p.permutation[static_cast<std::size_t>(i)], c);
      fwht(buf);
      for (Index r = 0; r < m_; ++r)
        out(r, c) = p.scale * buf[static_cast<std::size_t>(p.selected_rows[static_cast<std::size_t>(r)])];
    }
    return out;
  }

  Matrix apply_adjoint(const Matrix &y) const {
    detail::require_shape(y.rows() == m_, "apply_adjoint: Y must have " + std::to_string(m_) +
                                              " rows, got " + std::to_string(y.rows()));
    if (auto *d = std::get_if<detail::DenseOperator>(&impl_))
      return d->a.transpose() * y;
    const auto &p = std::get<detail::PwhOperator>(impl_);
    Matrix out(n_, y.cols());
    std::vector<double> buf(static_cast<std::size_t>(n_));
    for (Index c = 0; c < y.cols(); ++c) {
      std::fill(buf.begin(), buf.end(), 0.0);
      for (Index r = 0; r < m_; ++r)
        buf[static_cast<std::size_t>(p.selected_rows[static_cast<std::size_t>(r)])] = y(r, c);
      fwht(buf);
      for (Index i = 0; i < n_; ++i)
        out(p.permutation[static_cast<std::size_t>(i)], c) =
            p.scale * p.signs[static_cast<std::size_t>(i)] * buf[static_cast<std::size_t>(i)];
    }
    return out;
  }

  /// Dense m x n matrix of the operator.
  Matrix materialize() const {
    if (auto *d = std::get_if<detail::DenseOperator>(&impl_))
      return d->a;
    return apply(Matrix::Identity(n_, n_));
  }

  /// A * A^T.
  Matrix gram() const {
    if (has_orthonormal_rows())
      return Matrix::Identity(m_, m_);
    const auto &a = std::get<detail::DenseOperator>(impl_).a;
    return a * a.transpose();
  }

  friend MeasurementOperator make_dense(Matrix entries);
  friend MeasurementOperator make_pwh(Index n, Index m, std::uint64_t seed);

private:
  MeasurementOperator(Index m, Index n, std::variant<detail::DenseOperator, detail::PwhOperator> impl)
      : m_(m), n_(n), impl_(std::move(impl)) {}

  Index m_ = 0;
  Index n_ = 0;
  std::variant<detail::DenseOperator, detail::PwhOperator> impl_;
};

/// Wraps an explicit matrix. Rows are flagged orthonormal when
/// max|A A^T - I| <= 1e-10, which enables the closed-form ADMM update.
inline MeasurementOperator make_dense(Matrix entries) {
  detail::require(entries.rows() > 0 && entries.cols() > 0, "make_dense: empty matrix");
  detail::require(entries.allFinite(), "make_dense: non-finite entries");
  const Index m = entries.rows();
  const Index n = entries.cols();
  detail::require(m <= n, "make_dense: operator must have m <= n (got " + std::to_string(m) + " x " +
                              std::to_string(n) + ")");
  const Matrix g = entries * entries.transpose();
  const bool ortho = (g - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-10;
  return MeasurementOperator(m, n, detail::DenseOperator{std::move(entries), ortho});
}

/// Row-list overload; rejects ragged input.
inline MeasurementOperator make_dense(const std::vector<std::vector<double>> &rows) {
  detail::require(!rows.empty() && !rows.front().empty(), "make_dense: empty row list");
  const auto cols = rows.front().size();
  Matrix a(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::require(rows[i].size() == cols, "make_dense: ragged input at row " + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j)
      a(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return make_dense(std::move(a));
}

/// Randomized partial Walsh-Hadamard operator with m distinct rows sampled
/// uniformly, random column signs and a random column permutation.
/// Deterministic given (n, m, seed).
inline MeasurementOperator make_pwh(Index n, Index m, std::uint64_t seed) {
  detail::require(is_power_of_two(n), "make_pwh: n = " + std::to_string(n) + " is not a power of two");
  detail::require(m >= 1 && m <= n, "make_pwh: need 1 <= m <= n");
  detail::PwhOperator p;
  p.n = n;
  p.seed = seed;
  Rng rows_rng(derive_seed(seed, 1));
  Rng sign_rng(derive_seed(seed, 2));
  Rng perm_rng(derive_seed(seed, 3));
  p.selected_rows = sample_without_replacement(n, m, rows_rng);
  std::bernoulli_distribution coin(0.5);
  p.signs.resize(static_cast<std::size_t>(n));
  for (auto &s : p.signs)
    s = coin(sign_rng) ? 1.0 : -1.0;
  p.permutation = sample_without_replacement(n, n, perm_rng);
  p.scale = 1.0 / std::sqrt(static_cast<double>(n));
  return MeasurementOperator(m, n, std::move(p));
}

/// Dense m x n operator whose rows are an orthonormal basis of the span of
/// i.i.d. Gaussian rows. Used where n is not a power of two.
inline MeasurementOperator make_orthonormal_gaussian(Index m, Index n, std::uint64_t seed) {
  detail::require(m >= 1 && m <= n, "make_orthonormal_gaussian: need 1 <= m <= n");
  Rng rng(seed);
  const Matrix g = gaussian_matrix(n, m, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, m);
  return make_dense(q.transpose());
}

/// Power-of-two n gets a pwh operator, anything else an orthonormalized
/// Gaussian one. Both satisfy A A^T = I.
inline MeasurementOperator make_orthonormal_operator(Index n, Index m, std::uint64_t seed) {
  return is_power_of_two(n) ? make_pwh(n, m, seed) : make_orthonormal_gaussian(m, n, seed);
}

} // namespace jointsparse

#endif
