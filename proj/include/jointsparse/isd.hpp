#ifndef JOINTSPARSE_ISD_HPP
#define JOINTSPARSE_ISD_HPP

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "admm.hpp"
#include "core.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "types.hpp"

namespace jointsparse {

/// Threshold from the first significant jump of the ascending row norms:
/// with tau = ||t||_inf / m, returns t_(i) for the smallest i with
/// t_(i+1) - t_(i) > tau, or nothing when no such gap exists.
inline std::optional<double> first_significant_jump(const RowNorms &t, double m) {
  detail::require(m >= 1.0, "first_significant_jump: measurement count must be >= 1");
  if (t.size() == 0)
    return std::nullopt;
  std::vector<double> sorted(t.data(), t.data() + t.size());
  for (auto &v : sorted)
    v = std::abs(v);
  std::sort(sorted.begin(), sorted.end());
  const double tau = sorted.back() / m;
  if (sorted.back() == 0.0)
    return std::nullopt;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
    if (sorted[i + 1] - sorted[i] > tau)
      return sorted[i];
  return std::nullopt;
}

/// I = {i : t_i > eps}
inline SupportSet detect_support(const RowNorms &t, double eps) {
  detail::require(eps >= 0.0, "detect_support: threshold must be >= 0");
  std::vector<Index> idx;
  for (Index i = 0; i < t.size(); ++i)
    if (t[i] > eps)
      idx.push_back(i);
  return SupportSet(t.size(), std::move(idx));
}

/// Threshold detector: (row norms, measurement count, 1-based stage) -> eps.
/// Returning nothing means no rows are detected at that stage.
using Detector = std::function<std::optional<double>(const RowNorms &, double, int)>;

struct FirstSignificantJump {
  std::optional<double> operator()(const RowNorms &t, double m, int /*stage*/) const {
    return first_significant_jump(t, m);
  }
};

struct IsdjsConfig {
  int max_stages = 5;
  double intermediate_tol = 1e-2;
  double final_tol = 1e-6;
  /// Penalties and step lengths; derived from B when unset.
  std::optional<AdmmConfig> admm;
  Detector detector = FirstSignificantJump{};
  /// After this stage the threshold is frozen at the value detected there.
  std::optional<int> freeze_threshold_after;
  /// Stop once the detected support repeats (after one final-tolerance solve).
  bool stop_on_repeated_support = true;

  void validate() const {
    detail::require(max_stages >= 1, "IsdjsConfig: max_stages must be >= 1");
    detail::require(intermediate_tol > 0.0 && final_tol > 0.0, "IsdjsConfig: tolerances must be positive");
    detail::require(static_cast<bool>(detector), "IsdjsConfig: detector is empty");
  }
};

struct StageRecord {
  int stage = 0;
  double tol = 0.0;
  int inner_iters = 0;
  WeightVector weights;          // w^(s-1), used for this stage's solve
  RowNorms row_norms;            // t^(s)
  std::optional<double> threshold;
  SupportSet support;            // I^(s)
  double objective = 0.0;        // stage objective of X^(s) under w^(s-1)
  std::optional<Quadruplet> quad;
  std::optional<double> rel_err;
};

struct IsdjsResult {
  Matrix x;
  std::vector<StageRecord> stages;
  bool support_repeated = false;
};

/// Result of one inner solve inside the staged loop.
struct InnerSolve {
  Matrix x;
  int iters = 0;
};

/// The outer loop shared by the compressive-sensing and multi-task variants.
///
/// `inner(w, tol, stage)` solves the weighted problem (warm-starting is the
/// callee's business), `objective(x, w)` evaluates the stage objective.
template <class Inner, class Objective>
IsdjsResult run_staged(Index n, double measurement_count, const IsdjsConfig &cfg, Inner &&inner,
                       Objective &&objective, const Matrix *ground_truth = nullptr) {
  cfg.validate();
  std::optional<SupportSet> truth_support;
  if (ground_truth) {
    detail::require_shape(ground_truth->rows() == n, "run_isdjs: ground truth row count mismatch");
    truth_support = exact_support(*ground_truth);
  }

  IsdjsResult result;
  WeightVector w = WeightVector::ones(n);
  SupportSet previous = SupportSet::empty(n);
  std::optional<double> frozen;
  bool force_final = false;

  for (int s = 1; s <= cfg.max_stages; ++s) {
    const bool final_stage = force_final || s == cfg.max_stages;
    StageRecord rec;
    rec.stage = s;
    rec.tol = final_stage ? cfg.final_tol : cfg.intermediate_tol;
    rec.weights = w;

    InnerSolve out;
    try {
      out = inner(w, rec.tol, s);
    } catch (const DivergenceError &e) {
      throw DivergenceError(std::string(e.what()) + " (outer stage " + std::to_string(s) + ")", e.iteration(), s);
    }
    rec.inner_iters = out.iters;
    rec.row_norms = row_norms(out.x);

    rec.threshold = (cfg.freeze_threshold_after && s > *cfg.freeze_threshold_after)
                        ? frozen
                        : cfg.detector(rec.row_norms, measurement_count, s);
    if (cfg.freeze_threshold_after && s == *cfg.freeze_threshold_after)
      frozen = rec.threshold;
    rec.support = rec.threshold ? detect_support(rec.row_norms, *rec.threshold) : SupportSet::empty(n);
    rec.objective = objective(out.x, w);
    if (ground_truth) {
      rec.quad = quadruplet(rec.support, *truth_support);
      rec.rel_err = relative_error(out.x, *ground_truth);
    }

    result.x = std::move(out.x);
    const bool repeated = rec.support == previous;
    previous = rec.support;
    w = WeightVector::from_support(rec.support);
    result.stages.push_back(std::move(rec));

    if (final_stage)
      break;
    if (cfg.stop_on_repeated_support && repeated) {
      result.support_repeated = true;
      force_final = true;
    }
  }
  return result;
}

/// Multi-stage truncated l2,1 recovery for B = A X + E with the ADMM inner
/// solver, warm-started across stages.
inline IsdjsResult run_isdjs(const MeasurementOperator &op, const Matrix &b, const IsdjsConfig &cfg,
                             const Matrix *ground_truth = nullptr) {
  cfg.validate();
  detail::require_shape(b.rows() == op.rows(), "run_isdjs: B row count must equal operator row count");
  const Index n = op.cols();

  if (b.norm() == 0.0) {
    // Zero data: X = 0 is the unique minimizer for every weighting with w = 1.
    auto zero_solve = [&](const WeightVector &, double, int) { return InnerSolve{Matrix::Zero(n, b.cols()), 0}; };
    IsdjsConfig one = cfg;
    one.max_stages = 1;
    return run_staged(n, static_cast<double>(op.rows()), one, zero_solve,
                      [](const Matrix &x, const WeightVector &w) { return weighted_l21(x, w); }, ground_truth);
  }

  const AdmmConfig base = cfg.admm ? *cfg.admm : default_config(b);
  base.validate();
  const XUpdateSolver solver(op, base.beta1, base.beta2);
  std::optional<AdmmState> warm;

  auto inner = [&](const WeightVector &w, double tol, int) {
    AdmmConfig c = base;
    c.tol = tol;
    AdmmResult r = solve_weighted_l21(op, b, w, c, warm ? &*warm : nullptr, &solver);
    warm = std::move(r.state);
    return InnerSolve{std::move(r.x), r.iters};
  };
  auto objective = [](const Matrix &x, const WeightVector &w) { return weighted_l21(x, w); };
  return run_staged(n, static_cast<double>(op.rows()), cfg, inner, objective, ground_truth);
}

} // namespace jointsparse

#endif
