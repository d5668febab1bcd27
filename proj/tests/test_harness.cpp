#include <gtest/gtest.h>

#include <jointsparse/harness.hpp>

using namespace jointsparse;

TEST(GenRowSparse, ZeroSparsityAndErrors) {
  EXPECT_EQ(gen_row_sparse(10, 3, 0, SignalKind::gaussian, 1), Matrix::Zero(10, 3));
  EXPECT_THROW(gen_row_sparse(10, 3, 11, SignalKind::gaussian, 1), ConfigError);
}

TEST(GenRowSparse, GaussianMoments) {
  const Index n = 10000;
  const Matrix x = gen_row_sparse(n, 1, n, SignalKind::gaussian, 2);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(n - 1);
  // Standard errors: 1/sqrt(n) for the mean, sqrt(2/n) for the variance.
  EXPECT_LE(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_LE(std::abs(var - 1.0), 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST(GenRowSparse, BernoulliEntriesAreSigns) {
  const Matrix x = gen_row_sparse(50, 4, 12, SignalKind::bernoulli, 3);
  const auto supp = exact_support(x);
  EXPECT_EQ(supp.size(), 12);
  for (Index i : supp.indices()) {
    for (Index j = 0; j < 4; ++j)
      EXPECT_TRUE(x(i, j) == 1.0 || x(i, j) == -1.0);
    EXPECT_DOUBLE_EQ(x.row(i).norm(), 2.0);
  }
}

TEST(GenRowSparse, DeterministicInSeed) {
  EXPECT_EQ(gen_row_sparse(40, 2, 5, SignalKind::gaussian, 9), gen_row_sparse(40, 2, 5, SignalKind::gaussian, 9));
  EXPECT_NE(gen_row_sparse(40, 2, 5, SignalKind::gaussian, 9), gen_row_sparse(40, 2, 5, SignalKind::gaussian, 10));
}

TEST(AddNoise, RelativeScaling) {
  Rng rng(4);
  const Matrix b = gaussian_matrix(30, 3, rng);
  EXPECT_EQ(add_noise(b, 0.0, 1), b);
  const Matrix e1 = add_noise(b, 0.005, 1) - b;
  const Matrix e2 = add_noise(b, 0.005, 2) - b;
  EXPECT_NEAR(e1.norm() / b.norm(), 0.005, 1e-12);
  EXPECT_NEAR(e2.norm() / b.norm(), 0.005, 1e-12);
  EXPECT_GT((e1 - e2).norm(), 0.0);
  EXPECT_THROW(add_noise(b, -0.1, 1), ConfigError);
}

TEST(SpectrumScenario, OccupiedRowsArePositive) {
  EXPECT_EQ(gen_spectrum_scenario(25, 8, 0, 1), Matrix::Zero(25, 8));
  const Matrix x = gen_spectrum_scenario(25, 8, 5, 2);
  EXPECT_EQ(exact_support(x).size(), 5);
  for (Index i = 0; i < 25; ++i)
    for (Index j = 0; j < 8; ++j)
      if (x(i, j) != 0.0) {
        EXPECT_GE(x(i, j), 1e-2);
        EXPECT_LE(x(i, j), 1.0);
      }
  EXPECT_GE(x.minCoeff(), 0.0);
  EXPECT_THROW(gen_spectrum_scenario(5, 2, 6, 1), ConfigError);
}

TEST(Evaluate, ExactRecovery) {
  const Matrix x = gen_row_sparse(20, 2, 4, SignalKind::gaussian, 5);
  const auto m = evaluate(x, x, 1e-3);
  EXPECT_EQ(m.rel_err, 0.0);
  EXPECT_EQ(m.quad.false_alarms, 0);
  EXPECT_EQ(m.quad.correct, m.quad.total);
  EXPECT_TRUE(m.success);
}

TEST(Evaluate, HandCountedQuadruplet) {
  Matrix truth = Matrix::Zero(3, 1);
  truth(0, 0) = 1.0;
  truth(1, 0) = 1.0;
  Matrix x = Matrix::Zero(3, 1);
  x(0, 0) = 1.0;
  x(2, 0) = 0.5;
  const auto m = evaluate(x, truth, 1e-3);
  EXPECT_EQ(m.quad.total, 2);
  EXPECT_EQ(m.quad.detected, 2);
  EXPECT_EQ(m.quad.correct, 1);
  EXPECT_EQ(m.quad.false_alarms, 1);
  EXPECT_FALSE(m.success);
}

TEST(Evaluate, NumericalZeroRule) {
  Matrix truth = Matrix::Zero(3, 1);
  truth(0, 0) = 1.0;
  Matrix x = truth;
  x(1, 0) = 1e-9;
  x(2, 0) = 1e-7;
  const auto m = evaluate(x, truth, 1e-3);
  EXPECT_EQ(m.quad.detected, 2);
  EXPECT_EQ(m.quad.false_alarms, 1);
}

TEST(Evaluate, ZeroTruth) {
  const Matrix zero = Matrix::Zero(4, 2);
  EXPECT_TRUE(evaluate(zero, zero, 1e-3).success);
  Matrix x = zero;
  x(1, 1) = 0.1;
  const auto m = evaluate(x, zero, 1e-3);
  EXPECT_TRUE(std::isinf(m.rel_err));
  EXPECT_FALSE(m.success);
}

TEST(ExperimentSpec, ValidationAndJson) {
  ExperimentSpec s;
  s.algos.clear();
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(spec_from_json(json{{"algos", json::array()}}), ConfigError);
  EXPECT_THROW(spec_from_json(json{{"trials", 0}}), ConfigError);
  EXPECT_THROW(spec_from_json(json{{"success_threshold", 0.0}}), ConfigError);
  EXPECT_THROW(spec_from_json(json{{"wat", 1}}), ConfigError);
  EXPECT_THROW(spec_from_json(json{{"k", json::array()}}), ConfigError);
  EXPECT_THROW(spec_from_json(json{{"n", "many"}}), ConfigError);
  const auto p = spec_from_json(json{{"n", 64}, {"m", 16}, {"k", {{"from", 2}, {"to", 6}, {"step", 2}}},
                                     {"algos", {"somp", "l21"}}, {"signal", "bernoulli"}});
  EXPECT_EQ(p.k, (std::vector<Index>{2, 4, 6}));
  EXPECT_EQ(p.m, (std::vector<Index>{16}));
  EXPECT_EQ(p.signal, SignalKind::bernoulli);
  const auto back = spec_from_json(spec_to_json(p));
  EXPECT_EQ(spec_to_json(back), spec_to_json(p));
  EXPECT_EQ(parse_algorithm_list("isdjs, pthresh").size(), 2u);
  EXPECT_THROW(parse_algorithm_list("isdjs,foo"), ConfigError);
  EXPECT_THROW(parse_algorithm_list(""), ConfigError);
}

TEST(RunSweep, DeterministicAndThreadIndependent) {
  ExperimentSpec s;
  s.n = 64;
  s.m = {24};
  s.l = {2};
  s.k = {3, 6};
  s.noise = {0.0, 0.01};
  s.trials = 3;
  s.algos = {Algorithm::isdjs, Algorithm::l21, Algorithm::somp, Algorithm::pthresh};
  const auto a = run_sweep(s);
  const auto b = run_sweep(s);
  s.threads = 3;
  const auto c = run_sweep(s);
  EXPECT_EQ(curves_csv(a), curves_csv(b));
  EXPECT_EQ(curves_csv(a), curves_csv(c));
  EXPECT_EQ(report_to_json(a).dump(), report_to_json(c).dump());
  EXPECT_EQ(a.rows.size(), 4u * 4u);
  for (const auto &r : a.rows) {
    EXPECT_GE(r.recovery_rate, 0.0);
    EXPECT_LE(r.recovery_rate, 1.0);
    EXPECT_NEAR(r.mean_detected, r.mean_correct + r.mean_false, 1e-12);
    EXPECT_EQ(r.failures, 0);
  }
  ASSERT_NE(find_row(a, Algorithm::somp, 2, 3, 24, 0.0), nullptr);
  EXPECT_EQ(find_row(a, Algorithm::somp, 2, 3, 25, 0.0), nullptr);
}

TEST(RunSweep, CurvesCsvLayout) {
  ExperimentSpec s;
  s.n = 32;
  s.m = {16};
  s.l = {1};
  s.k = {2};
  s.trials = 2;
  s.algos = {Algorithm::l21};
  const auto rep = run_sweep(s);
  const std::string csv = curves_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "algo,l,k,m,noise,recovery_rate,mean_rel_err,mean_time_s");
  EXPECT_EQ(csv.back(), '\n');
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv[csv.size() - 2], ',');
  s.record_timing = true;
  const std::string timed = curves_csv(run_sweep(s));
  EXPECT_NE(timed[timed.size() - 2], ',');
  const json j = report_to_json(rep);
  EXPECT_TRUE(j.contains("metadata"));
  EXPECT_FALSE(j["rows"][0].contains("mean_time_s"));
}

TEST(RunSweep, FlagsIncreasingRecoveryRate) {
  // With one trial the rates are 0/1 and noisy; a rise with k must be reported
  // as a warning, never as an error.
  ExperimentSpec s;
  s.n = 64;
  s.m = {20};
  s.l = {1};
  s.k = {2, 4, 6, 8, 10, 12};
  s.trials = 1;
  s.algos = {Algorithm::pthresh};
  const auto rep = run_sweep(s);
  bool rises = false;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    rises = rises || rep.rows[i].recovery_rate > rep.rows[i - 1].recovery_rate;
  EXPECT_EQ(rises, !rep.warnings.empty());
}
