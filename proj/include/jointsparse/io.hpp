#ifndef JOINTSPARSE_IO_HPP
#define JOINTSPARSE_IO_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "isd.hpp"
#include "linops.hpp"
#include "multitask.hpp"
#include "types.hpp"

namespace jointsparse {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV: row-major, comma separated, '.' decimal point, no header.

inline Matrix parse_csv(std::istream &in, const std::string &source = "<stream>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos)
      continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception &) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos)
        throw ConfigError(source + ":" + std::to_string(lineno) + ": trailing characters in '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError(source + ":" + std::to_string(lineno) + ": ragged row (" + std::to_string(row.size()) +
                        " columns, expected " + std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw ConfigError(source + ": empty CSV");
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return out;
}

inline Matrix read_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

/// Shortest round-trip formatting, so write/read is lossless.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v)
      break;
  }
  return buf;
}

inline void write_csv(std::ostream &out, const Matrix &m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j)
        out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_csv(const std::filesystem::path &path, const Matrix &m) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot write " + path.string());
  write_csv(out, m);
}

// ---------------------------------------------------------------------------
// Operators: pwh as {"kind": "pwh", "n", "m", "seed"}; dense via CSV.

inline json operator_to_json(const MeasurementOperator &op) {
  detail::require(op.kind() == OperatorKind::partial_walsh_hadamard,
                  "operator_to_json: only pwh operators have a JSON form; write dense ones as CSV");
  return json{{"kind", "pwh"}, {"n", op.cols()}, {"m", op.rows()}, {"seed", op.seed()}};
}

inline MeasurementOperator operator_from_json(const json &j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    detail::require(kind == "pwh", "operator JSON: unsupported kind '" + kind + "'");
    return make_pwh(j.at("n").get<Index>(), j.at("m").get<Index>(), j.at("seed").get<std::uint64_t>());
  } catch (const json::exception &e) {
    throw ConfigError(std::string("operator JSON: ") + e.what());
  }
}

/// Loads an operator from a .json (pwh) or .csv (dense) file.
inline MeasurementOperator load_operator(const std::filesystem::path &path) {
  if (path.extension() == ".json") {
    std::ifstream in(path);
    if (!in)
      throw ConfigError("cannot open " + path.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception &e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    return operator_from_json(j);
  }
  return make_dense(read_csv(path));
}

// ---------------------------------------------------------------------------
// Stage traces.

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json trace_to_json(const IsdjsResult &r) {
  json stages = json::array();
  for (const auto &s : r.stages) {
    json e{{"stage", s.stage},
           {"tol", s.tol},
           {"inner_iters", s.inner_iters},
           {"detected", s.support.size()},
           {"objective", finite_or_null(s.objective)},
           {"threshold", s.threshold ? json(*s.threshold) : json(nullptr)}};
    if (s.quad) {
      e["total"] = s.quad->total;
      e["correct"] = s.quad->correct;
      e["false"] = s.quad->false_alarms;
    }
    if (s.rel_err)
      e["rel_err"] = finite_or_null(*s.rel_err);
    stages.push_back(std::move(e));
  }
  return json{{"stages", std::move(stages)}, {"support_repeated", r.support_repeated}};
}

// ---------------------------------------------------------------------------
// Multi-task data: a directory with manifest.json
//   {"n": 100, "rho": 0.0464, "tasks": [{"A": "A_1.csv", "b": "b_1.csv"}, ...]}
// "n" and "rho" are optional; b files hold one value per line.

inline TaskData load_task_data(const std::filesystem::path &dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in)
    throw ConfigError("cannot open " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  TaskData data;
  try {
    if (j.contains("rho"))
      data.rho = j.at("rho").get<double>();
    for (const auto &t : j.at("tasks")) {
      Task task;
      task.a = read_csv(dir / t.at("A").get<std::string>());
      const Matrix b = read_csv(dir / t.at("b").get<std::string>());
      detail::require_shape(b.cols() == 1, "task response file must have a single column");
      task.b = b.col(0);
      data.tasks.push_back(std::move(task));
    }
  } catch (const json::exception &e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  detail::require(!data.tasks.empty(), manifest_path.string() + ": no tasks listed");
  data.n = j.contains("n") ? j.at("n").get<Index>() : data.tasks.front().a.cols();
  data.validate();
  return data;
}

inline void save_task_data(const TaskData &data, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  json tasks = json::array();
  for (std::size_t j = 0; j < data.tasks.size(); ++j) {
    const std::string a_name = "A_" + std::to_string(j + 1) + ".csv";
    const std::string b_name = "b_" + std::to_string(j + 1) + ".csv";
    write_csv(dir / a_name, data.tasks[j].a);
    write_csv(dir / b_name, Matrix(data.tasks[j].b));
    tasks.push_back({{"A", a_name}, {"b", b_name}});
  }
  std::ofstream out(dir / "manifest.json");
  out << json{{"n", data.n}, {"rho", data.rho}, {"tasks", tasks}}.dump(2) << '\n';
}

} // namespace jointsparse

#endif
