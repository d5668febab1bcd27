#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <jointsparse/jointsparse.hpp>

namespace fs = std::filesystem;
using namespace jointsparse;

namespace {

constexpr int exit_config = 2;
constexpr int exit_divergence = 3;

json read_json_file(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path &path, const json &j) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void print_summary(const RecoveryReport &rep) {
  std::printf("%-8s %4s %5s %5s %8s %8s %12s\n", "algo", "l", "k", "m", "noise", "rate", "mean_err");
  for (const auto &r : rep.rows)
    std::printf("%-8s %4lld %5lld %5lld %8.4g %8.3f %12.3e\n", to_string(r.algo).c_str(),
                static_cast<long long>(r.point.l), static_cast<long long>(r.point.k),
                static_cast<long long>(r.point.m), r.point.noise, r.recovery_rate, r.mean_rel_err);
  for (const auto &w : rep.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto &e : rep.trial_errors)
    std::fprintf(stderr, "trial error: %s\n", e.c_str());
}

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out = "out";
  std::string algos;
  bool timing = false;
  int threads = 1;
};

void add_common(CLI::App *cmd, CommonOptions &o) {
  cmd->add_option("--seed", o.seed, "base random seed");
  cmd->add_option("--trials", o.trials, "trials per sweep point")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--algos", o.algos, "comma separated subset of isdjs,l21,somp,pthresh");
  cmd->add_flag("--timing", o.timing, "fill the mean_time_s column (output is then not reproducible)");
  cmd->add_option("--threads", o.threads, "worker threads for trials")->check(CLI::PositiveNumber);
}

void apply_common(ExperimentSpec &spec, const CommonOptions &o) {
  if (o.seed)
    spec.seed = *o.seed;
  if (o.trials)
    spec.trials = *o.trials;
  if (!o.algos.empty())
    spec.algos = parse_algorithm_list(o.algos);
  if (o.timing)
    spec.record_timing = true;
  spec.threads = o.threads;
}

int run_bench_like(ExperimentSpec spec, const CommonOptions &o) {
  apply_common(spec, o);
  spec.validate();
  const RecoveryReport rep = run_sweep(spec);
  write_report(rep, o.out);
  print_summary(rep);
  std::printf("wrote %s and %s\n", (fs::path(o.out) / "report.json").string().c_str(),
              (fs::path(o.out) / "curves.csv").string().c_str());
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Joint-sparse MMV recovery: truncated l2,1 with support detection"};
  app.require_subcommand(1);

  // solve
  auto *solve = app.add_subcommand("solve", "recover X from an operator file and a data matrix");
  std::string op_path, b_path, truth_path, solve_out = "out";
  int max_stages = 5;
  double inter_tol = 1e-2, final_tol = 1e-6;
  int max_iters = 5000;
  solve->add_option("--operator,-A", op_path, "operator: .json (pwh) or .csv (dense)")->required();
  solve->add_option("--data,-B", b_path, "measurements B as CSV (m rows, l columns)")->required();
  solve->add_option("--truth", truth_path, "optional ground truth CSV for the trace");
  solve->add_option("--out", solve_out, "output directory")->capture_default_str();
  solve->add_option("--max-stages", max_stages)->capture_default_str();
  solve->add_option("--intermediate-tol", inter_tol)->capture_default_str();
  solve->add_option("--final-tol", final_tol)->capture_default_str();
  solve->add_option("--max-inner-iters", max_iters)->capture_default_str();

  // bench
  auto *bench = app.add_subcommand("bench", "run a recovery-rate sweep from a JSON config");
  std::string config_path;
  CommonOptions bench_opts;
  bench->add_option("config", config_path, "ExperimentSpec JSON file")->required()->check(CLI::ExistingFile);
  add_common(bench, bench_opts);

  // spectrum
  auto *spectrum = app.add_subcommand("spectrum", "spectrum-occupancy scenario X = H G^T");
  CommonOptions spec_opts;
  Index channels = 25, spec_m = 12;
  std::vector<Index> nodes = {1, 2, 4, 8};
  std::vector<Index> occupied = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> spec_noise = {0.0};
  double spec_threshold = 1e-3;
  spectrum->add_option("--channels", channels)->capture_default_str();
  spectrum->add_option("--m", spec_m, "measurements per node")->capture_default_str();
  spectrum->add_option("--nodes", nodes, "list of node counts l")->delimiter(',');
  spectrum->add_option("--occupied", occupied, "list of occupied channel counts k")->delimiter(',');
  spectrum->add_option("--noise", spec_noise, "noise levels")->delimiter(',');
  spectrum->add_option("--threshold", spec_threshold, "success threshold")->capture_default_str();
  add_common(spectrum, spec_opts);

  // mtl
  auto *mtl = app.add_subcommand("mtl", "multi-task feature learning");
  std::string mtl_dir, mtl_out = "out";
  Index mtl_n = 100, mtl_l = 10, mtl_k = 10, mtl_samples = 40;
  double mtl_noise = 0.1, split = 0.0;
  std::optional<double> mtl_rho;
  std::uint64_t mtl_seed = 1;
  mtl->add_option("--data", mtl_dir, "directory with manifest.json (otherwise synthetic)");
  mtl->add_option("--n", mtl_n, "synthetic: features")->capture_default_str();
  mtl->add_option("--l", mtl_l, "synthetic: tasks")->capture_default_str();
  mtl->add_option("--k", mtl_k, "synthetic: shared nonzero rows")->capture_default_str();
  mtl->add_option("--samples", mtl_samples, "synthetic: samples per task")->capture_default_str();
  mtl->add_option("--noise", mtl_noise, "synthetic: response noise sd")->capture_default_str();
  mtl->add_option("--rho", mtl_rho, "penalty weight");
  mtl->add_option("--test-ratio", split, "hold out this share of each task's samples")->capture_default_str();
  mtl->add_option("--seed", mtl_seed)->capture_default_str();
  mtl->add_option("--out", mtl_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    if (*solve) {
      const MeasurementOperator op = load_operator(op_path);
      const Matrix b = read_csv(b_path);
      std::optional<Matrix> truth;
      if (!truth_path.empty())
        truth = read_csv(truth_path);
      IsdjsConfig cfg;
      cfg.max_stages = max_stages;
      cfg.intermediate_tol = inter_tol;
      cfg.final_tol = final_tol;
      detail::require(max_iters >= 1, "--max-inner-iters must be >= 1");
      detail::require_shape(b.rows() == op.rows(), "B has " + std::to_string(b.rows()) +
                                                       " rows but the operator has " + std::to_string(op.rows()));
      if (b.norm() > 0.0) {
        AdmmConfig ac = default_config(b);
        ac.max_iters = max_iters;
        cfg.admm = ac;
      }
      const IsdjsResult r = run_isdjs(op, b, cfg, truth ? &*truth : nullptr);
      fs::create_directories(solve_out);
      write_csv(fs::path(solve_out) / "X.csv", r.x);
      write_json_file(fs::path(solve_out) / "trace.json", trace_to_json(r));
      for (const auto &s : r.stages)
        std::printf("stage %d: %d inner iterations, %zu rows detected\n", s.stage, s.inner_iters,
                    s.support.size());
      return 0;
    }
    if (*bench)
      return run_bench_like(spec_from_json(read_json_file(config_path)), bench_opts);
    if (*spectrum) {
      ExperimentSpec spec;
      spec.n = channels;
      spec.m = {spec_m};
      spec.l = nodes;
      spec.k = occupied;
      spec.noise = spec_noise;
      spec.signal = SignalKind::spectrum;
      spec.trials = 20;
      spec.success_threshold = spec_threshold;
      return run_bench_like(spec, spec_opts);
    }
    if (*mtl) {
      TaskData data;
      std::optional<Matrix> truth;
      if (!mtl_dir.empty()) {
        data = load_task_data(mtl_dir);
      } else {
        auto syn = gen_multitask(mtl_n, mtl_l, mtl_k, mtl_samples, mtl_noise, mtl_seed);
        data = std::move(syn.data);
        truth = std::move(syn.truth);
      }
      if (mtl_rho)
        data.rho = *mtl_rho;
      std::optional<TaskData> test;
      if (split > 0.0) {
        auto parts = train_test_split(data, 1.0 - split, derive_seed(mtl_seed, 7));
        data = std::move(parts.first);
        test = std::move(parts.second);
      }
      const IsdjsResult r = run_isdjs_multitask(data, MultitaskIsdConfig{}, truth ? &*truth : nullptr);
      fs::create_directories(mtl_out);
      write_csv(fs::path(mtl_out) / "X.csv", r.x);
      json trace = trace_to_json(r);
      trace["train_loss"] = multitask_loss_value(r.x, data);
      if (test)
        trace["test_loss"] = multitask_loss_value(r.x, *test);
      write_json_file(fs::path(mtl_out) / "trace.json", trace);
      for (const auto &s : r.stages)
        std::printf("stage %d: %d iterations, %zu rows detected, objective %.6e\n", s.stage, s.inner_iters,
                    s.support.size(), s.objective);
      if (test)
        std::printf("test loss %.6e\n", trace["test_loss"].get<double>());
      return 0;
    }
  } catch (const DivergenceError &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_divergence;
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_config;
  } catch (const Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
