#ifndef JOINTSPARSE_HARNESS_HPP
#define JOINTSPARSE_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "admm.hpp"
#include "baselines.hpp"
#include "error.hpp"
#include "io.hpp"
#include "isd.hpp"
#include "linops.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace jointsparse {

// ---------------------------------------------------------------------------
// Signals and noise

enum class SignalKind { gaussian, bernoulli, spectrum };

inline std::string to_string(SignalKind k) {
  switch (k) {
  case SignalKind::gaussian:
    return "gaussian";
  case SignalKind::bernoulli:
    return "bernoulli";
  case SignalKind::spectrum:
    return "spectrum";
  }
  return "?";
}

inline SignalKind parse_signal_kind(const std::string &s) {
  if (s == "gaussian")
    return SignalKind::gaussian;
  if (s == "bernoulli")
    return SignalKind::bernoulli;
  if (s == "spectrum")
    return SignalKind::spectrum;
  throw ConfigError("unknown signal kind '" + s + "' (expected gaussian, bernoulli or spectrum)");
}

/// Occupancy scenario X = H G^T: H is n x n diagonal 0/1 with k ones, the gains
/// G (l x n) are log-uniform in [1e-2, 1].
inline Matrix gen_spectrum_scenario(Index n_channels, Index l_nodes, Index k_occupied, std::uint64_t seed) {
  detail::require(n_channels >= 1 && l_nodes >= 1, "gen_spectrum_scenario: empty dimensions");
  detail::require(k_occupied >= 0 && k_occupied <= n_channels, "gen_spectrum_scenario: need 0 <= k <= n");
  Rng rng(seed);
  const auto occupied = sample_without_replacement(n_channels, k_occupied, rng);
  Vector h = Vector::Zero(n_channels);
  for (Index i : occupied)
    h[i] = 1.0;
  std::uniform_real_distribution<double> expo(-2.0, 0.0);
  Matrix g(l_nodes, n_channels);
  for (Index c = 0; c < n_channels; ++c)
    for (Index node = 0; node < l_nodes; ++node)
      g(node, c) = std::pow(10.0, expo(rng));
  return h.asDiagonal() * g.transpose();
}

/// k rows chosen uniformly; Gaussian entries are standard normal, Bernoulli
/// entries are +-1 with equal probability.
inline Matrix gen_row_sparse(Index n, Index l, Index k, SignalKind kind, std::uint64_t seed) {
  detail::require(n >= 1 && l >= 1, "gen_row_sparse: empty dimensions");
  detail::require(k >= 0 && k <= n, "gen_row_sparse: need 0 <= k <= n");
  if (kind == SignalKind::spectrum)
    return gen_spectrum_scenario(n, l, k, seed);
  Rng rng(seed);
  const auto rows = sample_without_replacement(n, k, rng);
  Matrix x = Matrix::Zero(n, l);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (Index i : rows)
    for (Index j = 0; j < l; ++j)
      x(i, j) = kind == SignalKind::gaussian ? normal(rng) : (coin(rng) ? 1.0 : -1.0);
  return x;
}

/// B + E with Gaussian E rescaled so ||E||_F = level ||B||_F.
inline Matrix add_noise(const Matrix &b, double level, std::uint64_t seed) {
  detail::require(level >= 0.0 && std::isfinite(level), "add_noise: level must be finite and >= 0");
  if (level == 0.0 || b.size() == 0)
    return b;
  Rng rng(seed);
  Matrix e = gaussian_matrix(b.rows(), b.cols(), rng);
  const double en = e.norm();
  if (en == 0.0)
    return b;
  return b + (level * b.norm() / en) * e;
}

// ---------------------------------------------------------------------------
// Per-trial evaluation

struct TrialMetrics {
  double rel_err = 0.0;
  Quadruplet quad;
  bool success = false;
};

inline TrialMetrics evaluate(const Matrix &x, const Matrix &truth, double success_threshold,
                             double zero_row_rel = 1e-8) {
  detail::require_shape(x.rows() == truth.rows() && x.cols() == truth.cols(), "evaluate: shape mismatch");
  detail::require(success_threshold > 0.0, "evaluate: success threshold must be positive");
  TrialMetrics m;
  m.rel_err = relative_error(x, truth);
  m.quad = quadruplet(numerical_support(x, zero_row_rel), exact_support(truth));
  m.success = m.rel_err <= success_threshold;
  return m;
}

// ---------------------------------------------------------------------------
// Experiment specification

enum class Algorithm { isdjs, l21, somp, pthresh };

inline std::string to_string(Algorithm a) {
  switch (a) {
  case Algorithm::isdjs:
    return "isdjs";
  case Algorithm::l21:
    return "l21";
  case Algorithm::somp:
    return "somp";
  case Algorithm::pthresh:
    return "pthresh";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string &s) {
  if (s == "isdjs")
    return Algorithm::isdjs;
  if (s == "l21")
    return Algorithm::l21;
  if (s == "somp")
    return Algorithm::somp;
  if (s == "pthresh")
    return Algorithm::pthresh;
  throw ConfigError("unknown algorithm '" + s + "' (expected isdjs, l21, somp or pthresh)");
}

inline std::vector<Algorithm> parse_algorithm_list(const std::string &csv) {
  std::vector<Algorithm> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos)
      continue;
    const auto last = item.find_last_not_of(" \t");
    out.push_back(parse_algorithm(item.substr(first, last - first + 1)));
  }
  detail::require(!out.empty(), "algorithm list is empty");
  return out;
}

struct ExperimentSpec {
  Index n = 1024;
  std::vector<Index> m = {256};
  std::vector<Index> l = {4};
  std::vector<Index> k = {80, 100, 120, 140, 160};
  SignalKind signal = SignalKind::gaussian;
  std::vector<double> noise = {0.0};
  int trials = 100;
  double success_threshold = 1e-3;
  double zero_row_rel = 1e-8;
  std::vector<Algorithm> algos = {Algorithm::isdjs, Algorithm::l21};
  std::uint64_t seed = 1;
  int max_stages = 5;
  double intermediate_tol = 1e-2;
  double final_tol = 1e-6;
  int max_inner_iters = 5000;
  int threads = 1;
  bool record_timing = false;

  void validate() const {
    detail::require(n >= 1, "spec: n must be >= 1");
    detail::require(!m.empty() && !l.empty() && !k.empty() && !noise.empty(), "spec: sweeps must be nonempty");
    detail::require(!algos.empty(), "spec: algorithm list is empty");
    detail::require(trials >= 1, "spec: trials must be >= 1");
    detail::require(success_threshold > 0.0, "spec: success threshold must be positive");
    detail::require(threads >= 1, "spec: threads must be >= 1");
    detail::require(max_stages >= 1 && intermediate_tol > 0.0 && final_tol > 0.0 && max_inner_iters >= 1,
                    "spec: invalid solver settings");
    for (Index mm : m)
      detail::require(mm >= 1 && mm <= n, "spec: every m must satisfy 1 <= m <= n");
    for (Index ll : l)
      detail::require(ll >= 1, "spec: every l must be >= 1");
    for (Index kk : k)
      detail::require(kk >= 0 && kk <= n, "spec: every k must satisfy 0 <= k <= n");
    for (double e : noise)
      detail::require(e >= 0.0 && std::isfinite(e), "spec: noise levels must be finite and >= 0");
  }

  IsdjsConfig isdjs_config() const {
    IsdjsConfig c;
    c.max_stages = max_stages;
    c.intermediate_tol = intermediate_tol;
    c.final_tol = final_tol;
    return c;
  }
};

namespace detail {

template <class T> std::vector<T> scalar_or_list(const json &j) {
  if (j.is_array())
    return j.get<std::vector<T>>();
  return {j.get<T>()};
}

// Either a scalar, a list, or {"from": a, "to": b, "step": s}.
inline std::vector<Index> index_sweep(const json &j) {
  if (j.is_object()) {
    const Index from = j.at("from").get<Index>();
    const Index to = j.at("to").get<Index>();
    const Index step = j.value("step", Index{1});
    require(step >= 1 && from <= to, "spec: invalid range");
    std::vector<Index> out;
    for (Index v = from; v <= to; v += step)
      out.push_back(v);
    return out;
  }
  return scalar_or_list<Index>(j);
}

} // namespace detail

inline ExperimentSpec spec_from_json(const json &j) {
  ExperimentSpec s;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto &key = it.key();
      const auto &v = it.value();
      if (key == "n")
        s.n = v.get<Index>();
      else if (key == "m")
        s.m = detail::index_sweep(v);
      else if (key == "l")
        s.l = detail::index_sweep(v);
      else if (key == "k")
        s.k = detail::index_sweep(v);
      else if (key == "signal")
        s.signal = parse_signal_kind(v.get<std::string>());
      else if (key == "noise")
        s.noise = detail::scalar_or_list<double>(v);
      else if (key == "trials")
        s.trials = v.get<int>();
      else if (key == "success_threshold")
        s.success_threshold = v.get<double>();
      else if (key == "zero_row_rel")
        s.zero_row_rel = v.get<double>();
      else if (key == "algos") {
        s.algos.clear();
        for (const auto &a : v)
          s.algos.push_back(parse_algorithm(a.get<std::string>()));
      } else if (key == "seed")
        s.seed = v.get<std::uint64_t>();
      else if (key == "max_stages")
        s.max_stages = v.get<int>();
      else if (key == "intermediate_tol")
        s.intermediate_tol = v.get<double>();
      else if (key == "final_tol")
        s.final_tol = v.get<double>();
      else if (key == "max_inner_iters")
        s.max_inner_iters = v.get<int>();
      else if (key == "threads")
        s.threads = v.get<int>();
      else if (key == "record_timing")
        s.record_timing = v.get<bool>();
      else
        throw ConfigError("spec: unknown key '" + key + "'");
    }
  } catch (const json::exception &e) {
    throw ConfigError(std::string("spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline json spec_to_json(const ExperimentSpec &s) {
  std::vector<std::string> algos;
  for (auto a : s.algos)
    algos.push_back(to_string(a));
  return json{{"n", s.n},
              {"m", s.m},
              {"l", s.l},
              {"k", s.k},
              {"signal", to_string(s.signal)},
              {"noise", s.noise},
              {"trials", s.trials},
              {"success_threshold", s.success_threshold},
              {"zero_row_rel", s.zero_row_rel},
              {"algos", algos},
              {"seed", s.seed},
              {"max_stages", s.max_stages},
              {"intermediate_tol", s.intermediate_tol},
              {"final_tol", s.final_tol},
              {"max_inner_iters", s.max_inner_iters}};
}

// ---------------------------------------------------------------------------
// Sweep execution

struct SweepPoint {
  Index l = 0;
  Index k = 0;
  Index m = 0;
  double noise = 0.0;
};

struct AlgoTrial {
  TrialMetrics metrics;
  bool failed = false;
  std::string error;
  double seconds = 0.0;
};

/// Seeds for one trial. The instance (operator, signal, noise) depends only on
/// (seed, l, k, m, trial), so every algorithm and noise level sees the same
/// operator and signal.
struct TrialSeeds {
  std::uint64_t op, signal, noise;
};

inline TrialSeeds trial_seeds(std::uint64_t seed, const SweepPoint &p, int trial) {
  const std::uint64_t base = derive_seed(seed, {static_cast<std::uint64_t>(p.l), static_cast<std::uint64_t>(p.k),
                                                static_cast<std::uint64_t>(p.m), static_cast<std::uint64_t>(trial)});
  return {derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3)};
}

inline std::vector<AlgoTrial> run_trial(const ExperimentSpec &spec, const SweepPoint &p, int trial) {
  const TrialSeeds seeds = trial_seeds(spec.seed, p, trial);
  const MeasurementOperator op = make_orthonormal_operator(spec.n, p.m, seeds.op);
  const Matrix truth = gen_row_sparse(spec.n, p.l, p.k, spec.signal, seeds.signal);
  const Matrix b = add_noise(op.apply(truth), p.noise, seeds.noise);
  std::optional<Matrix> dense;

  std::vector<AlgoTrial> out;
  for (Algorithm algo : spec.algos) {
    AlgoTrial t;
    const auto start = std::chrono::steady_clock::now();
    try {
      Matrix x;
      switch (algo) {
      case Algorithm::isdjs:
      case Algorithm::l21: {
        IsdjsConfig cfg = spec.isdjs_config();
        if (algo == Algorithm::l21)
          cfg.max_stages = 1;
        if (b.norm() > 0.0) {
          AdmmConfig ac = default_config(b);
          ac.max_iters = spec.max_inner_iters;
          cfg.admm = ac;
        }
        x = run_isdjs(op, b, cfg).x;
        break;
      }
      case Algorithm::somp:
      case Algorithm::pthresh: {
        if (!dense)
          dense = op.materialize();
        const Index k = std::min(p.k, p.m);
        x = (algo == Algorithm::somp ? somp(*dense, b, k) : p_threshold(*dense, b, k)).x;
        break;
      }
      }
      t.metrics = evaluate(x, truth, spec.success_threshold, spec.zero_row_rel);
    } catch (const Error &e) {
      t.failed = true;
      t.error = e.what();
    }
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(t));
  }
  return out;
}

struct PointSummary {
  Algorithm algo = Algorithm::isdjs;
  SweepPoint point;
  int trials = 0;
  int successes = 0;
  int failures = 0;
  double recovery_rate = 0.0;
  double mean_rel_err = 0.0; // over non-failed trials
  double mean_total = 0.0, mean_detected = 0.0, mean_correct = 0.0, mean_false = 0.0;
  double mean_time_s = 0.0;
};

struct RecoveryReport {
  ExperimentSpec spec;
  std::vector<PointSummary> rows;
  std::vector<std::string> warnings;
  std::vector<std::string> trial_errors;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentSpec &spec) {
  std::vector<SweepPoint> pts;
  for (Index l : spec.l)
    for (Index m : spec.m)
      for (double e : spec.noise)
        for (Index k : spec.k)
          pts.push_back({l, k, m, e});
  return pts;
}

/// Runs every (point, trial) and aggregates per algorithm. Trials may run on
/// several threads; each trial is single-threaded and aggregation follows the
/// fixed (point, trial, algorithm) order, so the thread count never changes
/// the report.
inline RecoveryReport run_sweep(const ExperimentSpec &spec) {
  spec.validate();
  const auto points = sweep_points(spec);
  const std::size_t per_point = static_cast<std::size_t>(spec.trials);
  const std::size_t total = points.size() * per_point;
  std::vector<std::vector<AlgoTrial>> results(total);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++)
      results[job] = run_trial(spec, points[job / per_point], static_cast<int>(job % per_point));
  };
  const int nthreads = std::min<int>(spec.threads, static_cast<int>(std::max<std::size_t>(total, 1)));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back(worker);
  }

  RecoveryReport rep;
  rep.spec = spec;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    for (std::size_t a = 0; a < spec.algos.size(); ++a) {
      PointSummary s;
      s.algo = spec.algos[a];
      s.point = points[pi];
      s.trials = spec.trials;
      int ok = 0;
      for (std::size_t t = 0; t < per_point; ++t) {
        const AlgoTrial &r = results[pi * per_point + t][a];
        s.mean_time_s += r.seconds;
        if (r.failed) {
          ++s.failures;
          rep.trial_errors.push_back(to_string(s.algo) + " l=" + std::to_string(s.point.l) + " k=" +
                                     std::to_string(s.point.k) + " trial " + std::to_string(t) + ": " + r.error);
          continue;
        }
        ++ok;
        if (r.metrics.success)
          ++s.successes;
        s.mean_rel_err += r.metrics.rel_err;
        s.mean_total += r.metrics.quad.total;
        s.mean_detected += r.metrics.quad.detected;
        s.mean_correct += r.metrics.quad.correct;
        s.mean_false += r.metrics.quad.false_alarms;
      }
      s.recovery_rate = static_cast<double>(s.successes) / static_cast<double>(s.trials);
      s.mean_time_s /= static_cast<double>(s.trials);
      if (ok > 0) {
        const double d = ok;
        s.mean_rel_err /= d;
        s.mean_total /= d;
        s.mean_detected /= d;
        s.mean_correct /= d;
        s.mean_false /= d;
      } else {
        s.mean_rel_err = std::numeric_limits<double>::quiet_NaN();
      }
      rep.rows.push_back(s);
    }
  }

  // Sanity: recovery should not improve with more nonzero rows.
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    for (std::size_t j = 0; j < rep.rows.size(); ++j) {
      const auto &a = rep.rows[i];
      const auto &b = rep.rows[j];
      if (a.algo == b.algo && a.point.l == b.point.l && a.point.m == b.point.m && a.point.noise == b.point.noise &&
          b.point.k > a.point.k && b.recovery_rate > a.recovery_rate &&
          std::find_if(spec.k.begin(), spec.k.end(), [&](Index kk) { return kk > a.point.k && kk < b.point.k; }) ==
              spec.k.end()) {
        rep.warnings.push_back("recovery rate of " + to_string(a.algo) + " increases from k=" +
                               std::to_string(a.point.k) + " to k=" + std::to_string(b.point.k) +
                               " (l=" + std::to_string(a.point.l) + ")");
      }
    }
  }
  return rep;
}

/// Pointer to the summary row matching (algo, l, k, m, noise), if any.
inline const PointSummary *find_row(const RecoveryReport &rep, Algorithm algo, Index l, Index k, Index m,
                                    double noise) {
  for (const auto &r : rep.rows)
    if (r.algo == algo && r.point.l == l && r.point.k == k && r.point.m == m && r.point.noise == noise)
      return &r;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Report emission

inline json report_metadata() {
  return json{
      {"success_rule", "relative error ||X - X_true||_F / ||X_true||_F <= success_threshold"},
      {"noise_model", "E i.i.d. Gaussian rescaled so that ||E||_F = noise * ||A X_true||_F"},
      {"zero_row_rule", "a row counts as detected when its norm exceeds zero_row_rel * max row norm"},
      {"operator", "partial Walsh-Hadamard when n is a power of two, otherwise orthonormalized Gaussian rows"},
      {"bernoulli", "Rademacher +-1 entries"},
      {"greedy_sparsity", "somp and pthresh are given the true k (capped at m)"},
      {"pthresh_variant", "l2 aggregation of channel correlations, columns normalized"},
      {"detector", "first significant jump, tau = ||t||_inf / m"},
      {"seed_mixing", "splitmix64 chain over (seed, l, k, m, trial)"}};
}

inline json report_to_json(const RecoveryReport &rep) {
  json rows = json::array();
  for (const auto &r : rep.rows) {
    json e{{"algo", to_string(r.algo)},
           {"l", r.point.l},
           {"k", r.point.k},
           {"m", r.point.m},
           {"noise", r.point.noise},
           {"trials", r.trials},
           {"successes", r.successes},
           {"failures", r.failures},
           {"recovery_rate", r.recovery_rate},
           {"mean_rel_err", finite_or_null(r.mean_rel_err)},
           {"mean_quadruplet",
            {{"total", r.mean_total}, {"detected", r.mean_detected}, {"correct", r.mean_correct}, {"false", r.mean_false}}}};
    if (rep.spec.record_timing)
      e["mean_time_s"] = r.mean_time_s;
    rows.push_back(std::move(e));
  }
  return json{{"spec", spec_to_json(rep.spec)},
              {"metadata", report_metadata()},
              {"rows", std::move(rows)},
              {"warnings", rep.warnings},
              {"trial_errors", rep.trial_errors}};
}

inline std::string format_fixed(double v, const char *fmt) {
  if (!std::isfinite(v))
    return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

/// curves.csv; mean_time_s is left empty unless timing was requested, since
/// wall time would make the file non-reproducible.
inline std::string curves_csv(const RecoveryReport &rep) {
  std::ostringstream out;
  out << "algo,l,k,m,noise,recovery_rate,mean_rel_err,mean_time_s\n";
  for (const auto &r : rep.rows) {
    out << to_string(r.algo) << ',' << r.point.l << ',' << r.point.k << ',' << r.point.m << ','
        << format_double(r.point.noise) << ',' << format_fixed(r.recovery_rate, "%.6f") << ','
        << format_fixed(r.mean_rel_err, "%.6e") << ',';
    if (rep.spec.record_timing)
      out << format_fixed(r.mean_time_s, "%.6f");
    out << '\n';
  }
  return out.str();
}

inline void write_report(const RecoveryReport &rep, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    if (!out)
      throw ConfigError("cannot write " + (dir / "report.json").string());
    out << report_to_json(rep).dump(2) << '\n';
  }
  std::ofstream out(dir / "curves.csv");
  if (!out)
    throw ConfigError("cannot write " + (dir / "curves.csv").string());
  out << curves_csv(rep);
}

} // namespace jointsparse

#endif
