#include <gtest/gtest.h>

#include <jointsparse/harness.hpp>
#include <jointsparse/isd.hpp>

using namespace jointsparse;

namespace {

RowNorms vec(std::initializer_list<double> v) {
  RowNorms t(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v)
    t[i++] = x;
  return t;
}

} // namespace

TEST(FirstSignificantJump, WorkedExample) {
  const auto eps = first_significant_jump(vec({0, 0.01, 0.02, 1.0, 1.1}), 10);
  ASSERT_TRUE(eps.has_value());
  EXPECT_EQ(*eps, 0.02);
  // Order of the input does not matter.
  EXPECT_EQ(first_significant_jump(vec({1.1, 0.02, 0, 1.0, 0.01}), 10), eps);
}

TEST(FirstSignificantJump, NoneCases) {
  EXPECT_FALSE(first_significant_jump(vec({0, 0, 0}), 5).has_value());
  EXPECT_FALSE(first_significant_jump(vec({0.3, 0.3, 0.3, 0.3}), 5).has_value());
  EXPECT_FALSE(first_significant_jump(vec({1.0, 1.05, 1.1}), 2).has_value());
  EXPECT_FALSE(first_significant_jump(RowNorms(0), 5).has_value());
  EXPECT_THROW(first_significant_jump(vec({1.0}), 0.5), ConfigError);
}

TEST(FirstSignificantJump, GapEqualToTauIsNotAJump) {
  // tau = 1/4 = 0.25 exactly; the 0.25 gap is not strictly larger.
  EXPECT_FALSE(first_significant_jump(vec({0.25, 0.5, 0.75, 1.0}), 4).has_value());
  EXPECT_EQ(first_significant_jump(vec({0.0, 0.5, 0.75, 1.0}), 4), 0.0);
}

TEST(DetectSupport, Examples) {
  EXPECT_TRUE(detect_support(vec({0.5, 0.01, 0.6}), 0.6).is_empty());
  EXPECT_TRUE(detect_support(vec({0.5, 0.01, 0.6}), 1.0).is_empty());
  EXPECT_EQ(detect_support(vec({0.5, 0.01, 0.6}), 0.02).indices(), (std::vector<Index>{0, 2}));
  EXPECT_EQ(detect_support(vec({0.5, 0.01, 0.6}), 0.0).size(), 3);
  EXPECT_THROW(detect_support(vec({1.0}), -1e-3), ConfigError);
}

TEST(SupportSet, ComplementPartitionsTheIndexSet) {
  const SupportSet s(6, {4, 1, 1});
  EXPECT_EQ(s.indices(), (std::vector<Index>{1, 4}));
  EXPECT_EQ(s.complement(), (std::vector<Index>{0, 2, 3, 5}));
  EXPECT_THROW(SupportSet(3, {3}), ConfigError);
}

TEST(Isdjs, StageOneEqualsPlainSolve) {
  const auto op = make_pwh(128, 48, 3);
  const Matrix truth = gen_row_sparse(128, 2, 12, SignalKind::gaussian, 4);
  const Matrix b = op.apply(truth);
  IsdjsConfig cfg;
  cfg.max_stages = 1;
  const auto r = run_isdjs(op, b, cfg);
  AdmmConfig c = default_config(b);
  c.tol = cfg.final_tol;
  const auto plain = solve_weighted_l21(op, b, WeightVector::ones(128), c);
  ASSERT_EQ(r.stages.size(), 1u);
  EXPECT_EQ(r.x, plain.x);
}

TEST(Isdjs, NoneDetectorReducesToPlainL21) {
  const auto op = make_pwh(128, 48, 5);
  const Matrix truth = gen_row_sparse(128, 2, 12, SignalKind::gaussian, 6);
  const Matrix b = op.apply(truth);
  IsdjsConfig cfg;
  cfg.detector = [](const RowNorms &, double, int) { return std::optional<double>{}; };
  const auto r = run_isdjs(op, b, cfg);
  AdmmConfig c = default_config(b);
  c.tol = cfg.final_tol;
  const auto plain = solve_weighted_l21(op, b, WeightVector::ones(128), c);
  EXPECT_TRUE(r.support_repeated);
  for (const auto &s : r.stages)
    EXPECT_TRUE(s.support.is_empty());
  EXPECT_LE(relative_error(r.x, plain.x), 1e-4);
}

TEST(Isdjs, WeightsAreIndicatorOfPreviousSupport) {
  const auto op = make_pwh(256, 64, 7);
  const Matrix truth = gen_row_sparse(256, 4, 20, SignalKind::gaussian, 8);
  const auto r = run_isdjs(op, op.apply(truth), IsdjsConfig{}, &truth);
  ASSERT_FALSE(r.stages.empty());
  EXPECT_EQ(r.stages.front().weights.values(), Vector::Ones(256));
  for (std::size_t s = 1; s < r.stages.size(); ++s) {
    const auto &w = r.stages[s].weights;
    const auto &prev = r.stages[s - 1].support;
    for (Index i = 0; i < 256; ++i)
      EXPECT_EQ(w[i] == 0.0, prev.contains(i));
    EXPECT_EQ(w.truncated_rows(), prev);
  }
  for (const auto &s : r.stages) {
    ASSERT_TRUE(s.quad.has_value());
    EXPECT_EQ(s.quad->detected, s.quad->correct + s.quad->false_alarms);
    EXPECT_EQ(s.quad->total, 20);
  }
  EXPECT_LE(static_cast<int>(r.stages.size()), 5);
  EXPECT_EQ(r.stages.back().tol, 1e-6);
}

TEST(Isdjs, NonNestedSupportsAreAccepted) {
  // Scripted thresholds: a generous stage-2 detection is walked back at stage
  // 3, so I^(3) drops rows of I^(2).
  const auto op = make_pwh(64, 40, 9);
  const Matrix truth = gen_row_sparse(64, 2, 5, SignalKind::gaussian, 10);
  IsdjsConfig cfg;
  cfg.max_stages = 4;
  cfg.stop_on_repeated_support = false;
  cfg.detector = [](const RowNorms &t, double, int stage) -> std::optional<double> {
    std::vector<double> s(t.data(), t.data() + t.size());
    std::sort(s.begin(), s.end(), std::greater<>());
    if (stage == 2)
      return s[12]; // keeps 12 rows, some of them false
    return s[5];    // keeps the 5 largest
  };
  const auto r = run_isdjs(op, op.apply(truth), cfg, &truth);
  ASSERT_EQ(r.stages.size(), 4u);
  const auto &i2 = r.stages[1].support.indices();
  const auto &i3 = r.stages[2].support;
  EXPECT_TRUE(std::any_of(i2.begin(), i2.end(), [&](Index i) { return !i3.contains(i); }));
  EXPECT_EQ(r.stages[2].quad->false_alarms, 0);
  EXPECT_LE(r.stages.back().rel_err.value(), 1e-4);
}

TEST(Isdjs, RepeatedSupportTriggersOneFinalSolve) {
  const auto op = make_pwh(256, 96, 11);
  const Matrix truth = gen_row_sparse(256, 4, 10, SignalKind::gaussian, 12);
  const auto r = run_isdjs(op, op.apply(truth), IsdjsConfig{}, &truth);
  ASSERT_TRUE(r.support_repeated);
  const auto n = r.stages.size();
  ASSERT_GE(n, 3u);
  EXPECT_EQ(r.stages[n - 2].support, r.stages[n - 3].support);
  EXPECT_EQ(r.stages[n - 1].tol, 1e-6);
  EXPECT_LE(r.stages.back().rel_err.value(), 1e-4);
}

TEST(Isdjs, ZeroDataAndShapeErrors) {
  const auto op = make_pwh(16, 8, 13);
  const auto r = run_isdjs(op, Matrix::Zero(8, 2), IsdjsConfig{});
  EXPECT_EQ(r.x, Matrix::Zero(16, 2));
  EXPECT_THROW(run_isdjs(op, Matrix::Ones(7, 2), IsdjsConfig{}), ShapeError);
  IsdjsConfig bad;
  bad.max_stages = 0;
  EXPECT_THROW(run_isdjs(op, Matrix::Ones(8, 2), bad), ConfigError);
}

TEST(Isdjs, DivergenceCarriesStageIndex) {
  const auto op = make_pwh(16, 8, 14);
  Matrix b = Matrix::Ones(8, 1);
  b(0, 0) = std::numeric_limits<double>::quiet_NaN();
  IsdjsConfig cfg;
  cfg.admm = AdmmConfig{};
  try {
    run_isdjs(op, b, cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError &e) {
    EXPECT_EQ(e.stage(), 1);
    EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos);
  }
}

TEST(Isdjs, GaussianStageContrastSingleInstance) {
  const auto op = make_orthonormal_operator(600, 80, 101);
  const Matrix truth = gen_row_sparse(600, 4, 30, SignalKind::gaussian, 102);
  const auto r = run_isdjs(op, op.apply(truth), IsdjsConfig{}, &truth);
  EXPECT_GE(r.stages.front().rel_err.value(), 0.1);
  EXPECT_LE(r.stages.back().rel_err.value(), 1e-3);
  const auto &q = r.stages.back().quad.value();
  EXPECT_EQ(q.correct, 30);
}
