#ifndef JOINTSPARSE_MULTITASK_HPP
#define JOINTSPARSE_MULTITASK_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "error.hpp"
#include "isd.hpp"
#include "rng.hpp"
#include "types.hpp"

// Multi-task feature learning with a shared row support:
//
//   min_X  L(X) + rho * sum_i w_i ||x^i||_2,
//   L(X) = sum_j ||A^j x_j - b_j||^2 / (l m_j),
//
// solved by proximal gradient with backtracking.

namespace jointsparse {

struct Task {
  Matrix a; // m_j x n, one sample per row
  Vector b; // m_j
};

struct TaskData {
  std::vector<Task> tasks;
  Index n = 0;
  double rho = 4.64e-2;

  Index task_count() const noexcept { return static_cast<Index>(tasks.size()); }

  /// Mean sample count, used as m in the jump threshold tau = ||t||_inf / m.
  double mean_samples() const {
    double s = 0.0;
    for (const auto &t : tasks)
      s += static_cast<double>(t.a.rows());
    return s / static_cast<double>(tasks.size());
  }

  void validate() const {
    detail::require(!tasks.empty(), "TaskData: no tasks");
    detail::require(n >= 1, "TaskData: n must be >= 1");
    detail::require(rho > 0.0, "TaskData: rho must be positive");
    for (std::size_t j = 0; j < tasks.size(); ++j) {
      const auto &t = tasks[j];
      detail::require_shape(t.a.cols() == n, "TaskData: task " + std::to_string(j) + " has " +
                                                 std::to_string(t.a.cols()) + " columns, expected " +
                                                 std::to_string(n));
      detail::require_shape(t.a.rows() >= 1 && t.a.rows() == t.b.size(),
                            "TaskData: task " + std::to_string(j) + " sample count mismatch");
    }
  }
};

struct LossAndGradient {
  double value = 0.0;
  Matrix gradient;
};

/// Loss value and gradient; column j of the gradient is
/// 2 / (l m_j) * A^j^T (A^j x_j - b_j).
inline LossAndGradient multitask_loss(const Matrix &x, const TaskData &data) {
  const Index l = data.task_count();
  detail::require_shape(x.rows() == data.n && x.cols() == l, "multitask_loss: X must be n x l");
  LossAndGradient out;
  out.gradient.resize(data.n, l);
  for (Index j = 0; j < l; ++j) {
    const auto &t = data.tasks[static_cast<std::size_t>(j)];
    const double scale = 1.0 / (static_cast<double>(l) * static_cast<double>(t.a.rows()));
    const Vector r = t.a * x.col(j) - t.b;
    out.value += scale * r.squaredNorm();
    out.gradient.col(j) = (2.0 * scale) * (t.a.transpose() * r);
  }
  return out;
}

inline double multitask_loss_value(const Matrix &x, const TaskData &data) {
  const Index l = data.task_count();
  detail::require_shape(x.rows() == data.n && x.cols() == l, "multitask_loss: X must be n x l");
  double v = 0.0;
  for (Index j = 0; j < l; ++j) {
    const auto &t = data.tasks[static_cast<std::size_t>(j)];
    v += (t.a * x.col(j) - t.b).squaredNorm() / (static_cast<double>(l) * static_cast<double>(t.a.rows()));
  }
  return v;
}

/// L(X) + rho * sum_i min(||x^i||, eps): the capped objective that the
/// staged procedure descends once the threshold is fixed.
inline double capped_objective(const Matrix &x, const TaskData &data, double eps) {
  const RowNorms t = row_norms(x);
  return multitask_loss_value(x, data) + data.rho * t.cwiseMin(eps).sum();
}

struct ProxGradConfig {
  double tol = 1e-10;   // relative objective change
  int max_iters = 20000;
  int max_backtracks = 60;
  bool record_history = false;

  void validate() const {
    detail::require(tol > 0.0, "ProxGradConfig: tol must be positive");
    detail::require(max_iters >= 1 && max_backtracks >= 1, "ProxGradConfig: iteration caps must be >= 1");
  }
};

struct ProxGradResult {
  Matrix x;
  int iters = 0;
  double objective = 0.0;
  std::vector<double> history; // objective after each accepted step
};

namespace detail {

// Upper estimate of the gradient Lipschitz constant, max_j 2 ||A^j||^2 / (l m_j),
// from a few power iterations.
inline double lipschitz_estimate(const TaskData &data) {
  double lmax = 0.0;
  const double l = static_cast<double>(data.task_count());
  for (const auto &t : data.tasks) {
    Vector v = Vector::Ones(data.n).normalized();
    double sigma2 = 0.0;
    for (int it = 0; it < 50; ++it) {
      Vector w = t.a.transpose() * (t.a * v);
      sigma2 = w.norm();
      if (sigma2 == 0.0)
        break;
      v = w / sigma2;
    }
    lmax = std::max(lmax, 2.0 * sigma2 / (l * static_cast<double>(t.a.rows())));
  }
  return lmax > 0.0 ? lmax : 1.0;
}

} // namespace detail

/// Proximal gradient for the weighted multi-task model. Accepted steps never
/// increase the objective, so the result is no worse than the start point.
inline ProxGradResult solve_multitask_weighted(const TaskData &data, const WeightVector &w,
                                               const ProxGradConfig &cfg, const Matrix *warm_start = nullptr) {
  data.validate();
  cfg.validate();
  const Index l = data.task_count();
  detail::require_shape(w.size() == data.n, "solve_multitask_weighted: weight length must equal n");
  Matrix x = warm_start ? *warm_start : Matrix::Zero(data.n, l);
  detail::require_shape(x.rows() == data.n && x.cols() == l, "solve_multitask_weighted: warm start must be n x l");

  const Vector rho_w = data.rho * w.values();
  auto penalty = [&](const Matrix &z) { return rho_w.dot(row_norms(z)); };

  LossAndGradient lg = multitask_loss(x, data);
  double f = lg.value + penalty(x);
  double step = 1.0 / detail::lipschitz_estimate(data);

  ProxGradResult res;
  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    Matrix x_new;
    LossAndGradient lg_new;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      x_new = row_shrink(x - step * lg.gradient, step * rho_w);
      lg_new = multitask_loss(x_new, data);
      const Matrix d = x_new - x;
      const double model = lg.value + (lg.gradient.array() * d.array()).sum() + d.squaredNorm() / (2.0 * step);
      // Relative slack so rounding does not reject a step at the exact Lipschitz bound.
      if (lg_new.value <= model + 1e-12 * std::abs(model)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!x_new.allFinite() || !std::isfinite(lg_new.value))
      throw DivergenceError("multitask: non-finite iterate at iteration " + std::to_string(k + 1), k + 1);
    const double f_new = lg_new.value + penalty(x_new);
    // Rounding can break the descent guarantee right at convergence; keep the
    // last accepted point in that case.
    if (!accepted || f_new > f)
      break;
    const double change = f - f_new;
    x = std::move(x_new);
    lg = std::move(lg_new);
    f = f_new;
    if (cfg.record_history)
      res.history.push_back(f);
    if (change <= cfg.tol * std::max(std::abs(f + change), std::numeric_limits<double>::min())) {
      ++k;
      break;
    }
  }
  res.x = std::move(x);
  res.iters = k;
  res.objective = f;
  return res;
}

struct MultitaskIsdConfig {
  IsdjsConfig isd = default_isd();
  ProxGradConfig inner;

  static IsdjsConfig default_isd() {
    IsdjsConfig c;
    c.intermediate_tol = 1e-4;
    c.final_tol = 1e-10;
    return c;
  }
};

/// Staged truncated l2,1 multi-task learning. The jump threshold uses the
/// mean task sample count as m.
inline IsdjsResult run_isdjs_multitask(const TaskData &data, const MultitaskIsdConfig &cfg,
                                       const Matrix *ground_truth = nullptr) {
  data.validate();
  std::optional<Matrix> warm;
  auto inner = [&](const WeightVector &w, double tol, int) {
    ProxGradConfig c = cfg.inner;
    c.tol = tol;
    ProxGradResult r = solve_multitask_weighted(data, w, c, warm ? &*warm : nullptr);
    warm = r.x;
    return InnerSolve{std::move(r.x), r.iters};
  };
  auto objective = [&](const Matrix &x, const WeightVector &w) {
    return staged_objective(x, w, data.rho, [&](const Matrix &z) { return multitask_loss_value(z, data); });
  };
  return run_staged(data.n, data.mean_samples(), cfg.isd, inner, objective, ground_truth);
}

struct SyntheticTasks {
  TaskData data;
  Matrix truth;
};

/// l tasks with Gaussian designs (m_j = samples) sharing a k-row Gaussian
/// support; responses carry i.i.d. noise with standard deviation `noise_sd`.
inline SyntheticTasks gen_multitask(Index n, Index l, Index k, Index samples, double noise_sd, std::uint64_t seed) {
  detail::require(k >= 0 && k <= n && l >= 1 && samples >= 1, "gen_multitask: invalid dimensions");
  SyntheticTasks out;
  out.data.n = n;
  Rng rng(derive_seed(seed, 11));
  out.truth = Matrix::Zero(n, l);
  const auto rows = sample_without_replacement(n, k, rng);
  const Matrix vals = gaussian_matrix(k, l, rng);
  for (Index r = 0; r < k; ++r)
    out.truth.row(rows[static_cast<std::size_t>(r)]) = vals.row(r);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index j = 0; j < l; ++j) {
    Task t;
    t.a = gaussian_matrix(samples, n, rng);
    t.b = t.a * out.truth.col(j);
    for (Index i = 0; i < samples; ++i)
      t.b[i] += noise_sd * normal(rng);
    out.data.tasks.push_back(std::move(t));
  }
  return out;
}

/// Random per-task split: the first `ratio` share of shuffled samples trains.
inline std::pair<TaskData, TaskData> train_test_split(const TaskData &data, double ratio, std::uint64_t seed) {
  data.validate();
  detail::require(ratio > 0.0 && ratio < 1.0, "train_test_split: ratio must be in (0, 1)");
  TaskData train, test;
  train.n = test.n = data.n;
  train.rho = test.rho = data.rho;
  Rng rng(seed);
  for (const auto &t : data.tasks) {
    const Index m = t.a.rows();
    const auto order = sample_without_replacement(m, m, rng);
    const Index m_train = std::clamp<Index>(static_cast<Index>(std::lround(ratio * static_cast<double>(m))), 1,
                                            std::max<Index>(m - 1, 1));
    Task tr, te;
    tr.a.resize(m_train, data.n);
    tr.b.resize(m_train);
    te.a.resize(m - m_train, data.n);
    te.b.resize(m - m_train);
    for (Index i = 0; i < m; ++i) {
      const Index src = order[static_cast<std::size_t>(i)];
      if (i < m_train) {
        tr.a.row(i) = t.a.row(src);
        tr.b[i] = t.b[src];
      } else {
        te.a.row(i - m_train) = t.a.row(src);
        te.b[i - m_train] = t.b[src];
      }
    }
    train.tasks.push_back(std::move(tr));
    test.tasks.push_back(std::move(te));
  }
  return {std::move(train), std::move(test)};
}

} // namespace jointsparse

#endif
