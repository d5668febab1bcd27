#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <jointsparse/io.hpp>
#include <jointsparse/harness.hpp>

using namespace jointsparse;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("jointsparse_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

} // namespace

TEST(Csv, ParsesSimpleMatrix) {
  std::istringstream in("1,2.5,-3\n4e-1, 5 ,6\n\n");
  const Matrix m = parse_csv(in);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_EQ(m(0, 1), 2.5);
  EXPECT_EQ(m(1, 0), 0.4);
  EXPECT_EQ(m(1, 1), 5.0);
}

TEST(Csv, ReportsErrorsWithLocation) {
  std::istringstream ragged("1,2\n3\n");
  try {
    parse_csv(ragged, "x.csv");
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find("x.csv:2"), std::string::npos);
  }
  std::istringstream junk("1,abc\n");
  EXPECT_THROW(parse_csv(junk), ConfigError);
  std::istringstream trailing("1,2x\n");
  EXPECT_THROW(parse_csv(trailing), ConfigError);
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty), ConfigError);
  EXPECT_THROW(read_csv("/nonexistent/file.csv"), ConfigError);
}

TEST(Csv, RoundTripIsLossless) {
  Rng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix m = gaussian_matrix(5, 3, rng);
    m(0, 0) *= 1e-300;
    m(1, 1) *= 1e200;
    std::ostringstream out;
    write_csv(out, m);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_csv(in), m);
  }
}

TEST(OperatorJson, PwhRoundTrip) {
  const auto op = make_pwh(64, 20, 123);
  const json j = operator_to_json(op);
  EXPECT_EQ(j.at("kind"), "pwh");
  EXPECT_EQ(operator_from_json(j).materialize(), op.materialize());
  EXPECT_THROW(operator_to_json(make_dense(Matrix::Identity(2, 2))), ConfigError);
  EXPECT_THROW(operator_from_json(json{{"kind", "dct"}, {"n", 8}, {"m", 2}, {"seed", 1}}), ConfigError);
  EXPECT_THROW(operator_from_json(json{{"kind", "pwh"}, {"n", 8}}), ConfigError);
}

TEST(OperatorJson, LoadFromFiles) {
  const auto dir = scratch_dir("ops");
  {
    std::ofstream out(dir / "op.json");
    out << operator_to_json(make_pwh(16, 4, 9)).dump();
  }
  EXPECT_EQ(load_operator(dir / "op.json").materialize(), make_pwh(16, 4, 9).materialize());
  Rng rng(2);
  const Matrix a = gaussian_matrix(3, 5, rng);
  write_csv(dir / "a.csv", a);
  EXPECT_EQ(*load_operator(dir / "a.csv").dense_entries(), a);
  {
    std::ofstream out(dir / "bad.json");
    out << "{not json";
  }
  EXPECT_THROW(load_operator(dir / "bad.json"), ConfigError);
}

TEST(Trace, JsonOmitsGroundTruthFieldsWhenAbsent) {
  const auto op = make_pwh(64, 32, 5);
  const Matrix truth = gen_row_sparse(64, 2, 4, SignalKind::gaussian, 6);
  const Matrix b = op.apply(truth);
  const json with = trace_to_json(run_isdjs(op, b, IsdjsConfig{}, &truth));
  const json without = trace_to_json(run_isdjs(op, b, IsdjsConfig{}));
  ASSERT_FALSE(with["stages"].empty());
  for (const char *key : {"detected", "correct", "false", "rel_err", "objective"})
    EXPECT_TRUE(with["stages"][0].contains(key)) << key;
  EXPECT_FALSE(without["stages"][0].contains("correct"));
  EXPECT_FALSE(without["stages"][0].contains("rel_err"));
  EXPECT_TRUE(without["stages"][0].contains("detected"));
}

TEST(TaskData, SaveLoadRoundTrip) {
  const auto dir = scratch_dir("tasks");
  const auto syn = gen_multitask(12, 3, 2, 7, 0.1, 5);
  save_task_data(syn.data, dir);
  const TaskData back = load_task_data(dir);
  ASSERT_EQ(back.task_count(), 3);
  EXPECT_EQ(back.n, 12);
  EXPECT_EQ(back.rho, syn.data.rho);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(back.tasks[j].a, syn.data.tasks[j].a);
    EXPECT_EQ(back.tasks[j].b, syn.data.tasks[j].b);
  }
  EXPECT_THROW(load_task_data(dir / "missing"), ConfigError);
}
