#ifndef JOINTSPARSE_ADMM_HPP
#define JOINTSPARSE_ADMM_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "error.hpp"
#include "linops.hpp"
#include "types.hpp"

// ADMM for  min ||X||_{w,2,1}  s.t.  A X = B,  split as Z = X.
//
//   (a) X  <- (b1 I + b2 A^T A)^{-1} (b1 Z - L1 + b2 A^T B + A^T L2)
//   (b) Z  <- row_shrink(X + L1 / b1, w / b1)
//   (c) L1 <- L1 - g1 b1 (Z - X)
//   (d) L2 <- L2 - g2 b2 (A X - B)

namespace jointsparse {

struct AdmmConfig {
  double beta1 = 0.3;
  double beta2 = 3.0;
  double gamma1 = 1.618;
  double gamma2 = 1.618;
  double tol = 1e-6;
  int max_iters = 5000;
  bool record_history = false;

  void validate() const {
    constexpr double golden = 1.6180339887498949;
    detail::require(beta1 > 0.0 && beta2 > 0.0, "AdmmConfig: beta1 and beta2 must be positive");
    detail::require(gamma1 > 0.0 && gamma1 < golden + 1e-9 && gamma2 > 0.0 && gamma2 < golden + 1e-9,
                    "AdmmConfig: step lengths must lie in (0, (1+sqrt 5)/2)");
    detail::require(tol > 0.0, "AdmmConfig: tol must be positive");
    detail::require(max_iters >= 1, "AdmmConfig: max_iters must be >= 1");
  }
};

/// Penalties scaled by the mean absolute data entry:
/// beta1 = 0.3 / mean|b_ij|, beta2 = 3 / mean|b_ij|, gamma1 = gamma2 = 1.618.
inline AdmmConfig default_config(const Matrix &b) {
  detail::require(b.size() > 0, "default_config: empty data matrix");
  const double mean_abs = b.cwiseAbs().mean();
  detail::require(mean_abs > 0.0, "default_config: B is identically zero; the solution is X = 0");
  AdmmConfig cfg;
  cfg.beta1 = 0.3 / mean_abs;
  cfg.beta2 = 3.0 / mean_abs;
  return cfg;
}

struct AdmmState {
  Matrix x;
  Matrix z;
  Matrix lambda1;
  Matrix lambda2;
  int iter = 0;

  static AdmmState zeros(Index n, Index l, Index m) {
    return {Matrix::Zero(n, l), Matrix::Zero(n, l), Matrix::Zero(n, l), Matrix::Zero(m, l), 0};
  }
};

struct AdmmResult {
  Matrix x;
  int iters = 0;
  double final_rel_change = std::numeric_limits<double>::infinity();
  double feasibility = 0.0; // ||AX - B||_F / ||B||_F
  AdmmState state;          // for warm starts
  std::vector<double> history;
};

/// Solver for step (a). With A A^T = I the inverse has the closed form
/// (1/b1)(I - b2/(b1+b2) A^T A); otherwise the m x m matrix
/// M = (b1/b2) I + A A^T is factored once (Woodbury) and reused.
///
/// Both routes go through y = M^{-1} A R with R = U + A^T V, U = b1 Z - L1,
/// V = b2 B + L2, which gives X = (U + A^T (V - y)) / b1 and A X = y / b2.
class XUpdateSolver {
public:
  XUpdateSolver(const MeasurementOperator &op, double beta1, double beta2)
      : beta1_(beta1), beta2_(beta2), closed_form_(op.has_orthonormal_rows()) {
    detail::require(beta1 > 0.0 && beta2 > 0.0, "XUpdateSolver: penalties must be positive");
    if (!closed_form_) {
      gram_ = op.gram();
      Matrix sys = gram_;
      sys.diagonal().array() += beta1 / beta2;
      llt_.compute(sys);
      // M is SPD for beta1 > 0, so a failure here means corrupted input.
      detail::require(llt_.info() == Eigen::Success, "XUpdateSolver: factorization failed");
    }
  }

  bool closed_form() const noexcept { return closed_form_; }
  bool matches(double beta1, double beta2) const noexcept { return beta1 == beta1_ && beta2 == beta2_; }

  struct Update {
    Matrix x;
    Matrix ax;
  };

  Update solve(const MeasurementOperator &op, const Matrix &u, const Matrix &v) const {
    Matrix a_r = op.apply(u);
    Matrix y;
    if (closed_form_) {
      a_r += v;
      y = (beta2_ / (beta1_ + beta2_)) * a_r;
    } else {
      a_r += gram_ * v;
      y = llt_.solve(a_r);
    }
    Update up;
    up.x = (u + op.apply_adjoint(v - y)) / beta1_;
    up.ax = y / beta2_;
    return up;
  }

private:
  double beta1_;
  double beta2_;
  bool closed_form_;
  Matrix gram_;
  Eigen::LLT<Matrix> llt_;
};

namespace detail {

inline void check_admm_shapes(const MeasurementOperator &op, const Matrix &b, const WeightVector &w,
                              const AdmmState &s) {
  require_shape(b.rows() == op.rows(), "admm: B has " + std::to_string(b.rows()) + " rows, operator has " +
                                           std::to_string(op.rows()));
  require_shape(w.size() == op.cols(), "admm: weight length must equal operator column count");
  const Index n = op.cols(), l = b.cols();
  require_shape(s.x.rows() == n && s.x.cols() == l && s.z.rows() == n && s.z.cols() == l &&
                    s.lambda1.rows() == n && s.lambda1.cols() == l && s.lambda2.rows() == op.rows() &&
                    s.lambda2.cols() == l,
                "admm: state shapes do not conform to operator and B");
}

} // namespace detail

/// One sweep of steps (a)-(d) using a prepared X-update solver.
inline AdmmState admm_step(const AdmmState &state, const XUpdateSolver &solver, const MeasurementOperator &op,
                           const Matrix &b, const WeightVector &w, const AdmmConfig &cfg) {
  AdmmState next;
  const Matrix u = cfg.beta1 * state.z - state.lambda1;
  const Matrix v = cfg.beta2 * b + state.lambda2;
  auto up = solver.solve(op, u, v);
  next.x = std::move(up.x);
  next.z = row_shrink(next.x + state.lambda1 / cfg.beta1, w.values() / cfg.beta1);
  next.lambda1 = state.lambda1 - cfg.gamma1 * cfg.beta1 * (next.z - next.x);
  next.lambda2 = state.lambda2 - cfg.gamma2 * cfg.beta2 * (up.ax - b);
  next.iter = state.iter + 1;
  return next;
}

inline AdmmState admm_step(const AdmmState &state, const MeasurementOperator &op, const Matrix &b,
                           const WeightVector &w, const AdmmConfig &cfg) {
  cfg.validate();
  detail::check_admm_shapes(op, b, w, state);
  return admm_step(state, XUpdateSolver(op, cfg.beta1, cfg.beta2), op, b, w, cfg);
}

/// Iterates admm_step until ||t_{k+1} - t_k|| / ||t_{k+1}|| <= tol, where t is
/// the row-norm vector of X, or until max_iters. All state starts at zero
/// unless a warm start is given. Pass `solver` to reuse a factorization built
/// for the same operator and penalties.
inline AdmmResult solve_weighted_l21(const MeasurementOperator &op, const Matrix &b, const WeightVector &w,
                                     const AdmmConfig &cfg, const AdmmState *warm_start = nullptr,
                                     const XUpdateSolver *solver = nullptr) {
  cfg.validate();
  AdmmState state = warm_start ? *warm_start : AdmmState::zeros(op.cols(), b.cols(), op.rows());
  detail::check_admm_shapes(op, b, w, state);

  std::optional<XUpdateSolver> own;
  if (!solver || !solver->matches(cfg.beta1, cfg.beta2)) {
    own.emplace(op, cfg.beta1, cfg.beta2);
    solver = &*own;
  }

  AdmmResult res;
  RowNorms t_prev = row_norms(state.x);
  const bool b_zero = b.isZero(0.0);
  int k = 0;
  double rel = std::numeric_limits<double>::infinity();
  while (k < cfg.max_iters) {
    // X is computed from the incoming Z, so the first sweep of a solve does
    // not see the current weights yet, and a sweep fed with Z = 0 only
    // rescales the previous iterate. Neither may end the solve.
    const bool stale = k == 0 || (!b_zero && state.z.isZero(0.0));
    state = admm_step(state, *solver, op, b, w, cfg);
    ++k;
    if (!state.x.allFinite() || !state.lambda2.allFinite())
      throw DivergenceError("admm: non-finite iterate X at inner iteration " + std::to_string(k), k);
    RowNorms t = row_norms(state.x);
    const double denom = std::max(t.norm(), std::numeric_limits<double>::epsilon());
    rel = (t - t_prev).norm() / denom;
    if (cfg.record_history)
      res.history.push_back(rel);
    t_prev = std::move(t);
    if (rel <= cfg.tol && !stale)
      break;
  }

  res.iters = k;
  res.final_rel_change = rel;
  res.x = state.x;
  const double bnorm = b.norm();
  const double resid = (op.apply(res.x) - b).norm();
  res.feasibility = bnorm > 0.0 ? resid / bnorm : resid;
  res.state = std::move(state);
  return res;
}

} // namespace jointsparse

#endif
