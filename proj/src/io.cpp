#include "surfopt/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "surfopt/errors.hpp"

namespace surfopt {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::vector<std::string>> parse_csv_cells(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::istringstream stream(text);
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw IoError("empty CSV file: " + path);
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw IoError("ragged CSV rows in " + path);
  }
  return rows;
}

double parse_double_cell(const std::string& cell, const std::string& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    if (used != cell.size()) throw IoError("trailing characters in numeric cell in " + path);
    return v;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception&) {
    throw IoError("cannot parse number '" + cell + "' in " + path);
  }
}

// Accepts numbers, null, and "inf"-style strings; used for max-gap entries.
double json_to_extended_double(const nlohmann::json& v, const std::string& what) {
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "Inf" || s == "Infinity" || s == "+inf") {
      return std::numeric_limits<double>::infinity();
    }
    throw IoError("unrecognized " + what + " entry '" + s + "'");
  }
  throw IoError(what + " entries must be numbers, null, or \"inf\"");
}

Vector json_to_vector(const nlohmann::json& arr, const std::string& what) {
  if (!arr.is_array()) throw IoError(what + " must be an array");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& e : arr) {
    if (!e.is_number()) throw IoError(what + " entries must be numbers");
    v[i++] = e.get<double>();
  }
  return v;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

void write_csv(const std::string& path, const Matrix& m) {
  std::ostringstream out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

Matrix read_csv(const std::string& path) {
  const auto cells = parse_csv_cells(path);
  Matrix m(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(cells[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = parse_double_cell(cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)],
                                  path);
    }
  }
  return m;
}

void write_csv_int(const std::string& path, const Eigen::MatrixXi& m) {
  std::ostringstream out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

Eigen::MatrixXi read_csv_int(const std::string& path) {
  const auto cells = parse_csv_cells(path);
  Eigen::MatrixXi m(static_cast<Eigen::Index>(cells.size()),
                    static_cast<Eigen::Index>(cells[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const std::string& cell = cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      try {
        std::size_t used = 0;
        m(r, c) = std::stoi(cell, &used);
        if (used != cell.size()) throw IoError("trailing characters in integer cell in " + path);
      } catch (const IoError&) {
        throw;
      } catch (const std::exception&) {
        throw IoError("cannot parse integer '" + cell + "' in " + path);
      }
    }
  }
  return m;
}

nlohmann::json problem_to_json(const ColumnProblem& problem) {
  nlohmann::json j;
  j["mu"] = vector_to_json(problem.mu);
  j["sigma_sq"] = vector_to_json(problem.sigma_sq);
  if (const auto* gaps = std::get_if<BoundedGaps>(&problem.constraints)) {
    j["delta"] = vector_to_json(gaps->min_gap);
    nlohmann::json upper = nlohmann::json::array();
    for (Eigen::Index i = 0; i < gaps->max_gap.size(); ++i) {
      if (std::isfinite(gaps->max_gap[i])) {
        upper.push_back(gaps->max_gap[i]);
      } else {
        upper.push_back(nullptr);
      }
    }
    j["Delta"] = upper;
  } else {
    j["delta"] = nullptr;
    j["Delta"] = nullptr;
  }
  return j;
}

ColumnProblem problem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IoError("problem must be a JSON object");
  if (!j.contains("mu") || !j.contains("sigma_sq")) {
    throw IoError("problem needs 'mu' and 'sigma_sq' arrays");
  }
  ColumnProblem problem;
  problem.mu = json_to_vector(j.at("mu"), "mu");
  problem.sigma_sq = json_to_vector(j.at("sigma_sq"), "sigma_sq");

  const bool has_delta = j.contains("delta") && !j.at("delta").is_null();
  const bool has_upper = j.contains("Delta") && !j.at("Delta").is_null();
  if (has_delta || has_upper) {
    const auto n = problem.mu.size();
    BoundedGaps gaps;
    gaps.min_gap = has_delta ? json_to_vector(j.at("delta"), "delta") : Vector::Zero(n - 1);
    if (has_upper) {
      const auto& arr = j.at("Delta");
      if (!arr.is_array()) throw IoError("Delta must be an array");
      gaps.max_gap.resize(static_cast<Eigen::Index>(arr.size()));
      Eigen::Index i = 0;
      for (const auto& e : arr) gaps.max_gap[i++] = json_to_extended_double(e, "Delta");
    } else {
      gaps.max_gap = Vector::Constant(n - 1, std::numeric_limits<double>::infinity());
    }
    problem.constraints = std::move(gaps);
  }
  problem.validate();
  return problem;
}

std::vector<ColumnProblem> problems_from_json(const nlohmann::json& j) {
  std::vector<ColumnProblem> out;
  if (j.is_object() && j.contains("problems")) {
    const auto& arr = j.at("problems");
    if (!arr.is_array()) throw IoError("'problems' must be an array");
    for (const auto& e : arr) out.push_back(problem_from_json(e));
  } else if (j.is_array()) {
    for (const auto& e : j) out.push_back(problem_from_json(e));
  } else {
    out.push_back(problem_from_json(j));
  }
  if (out.empty()) throw IoError("no problems found in input");
  return out;
}

nlohmann::json solution_to_json(const Solution& sol) {
  nlohmann::json j;
  j["s_star"] = vector_to_json(sol.s_star);
  j["lambda_star"] = vector_to_json(sol.lambda_star);
  j["iterations"] = sol.iterations;
  j["residual_norm"] = sol.residual_norm;
  j["t_final"] = sol.t_final;
  j["converged"] = sol.converged;
  j["used_pseudo_inverse"] = sol.used_pseudo_inverse;
  j["constraint_rows"] = sol.constraint_rows;
  return j;
}

SolverParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IoError("solver params must be a JSON object");
  SolverParams p;
  for (const auto& [key, value] : j.items()) {
    if (key == "beta1") {
      p.beta1 = value.get<double>();
    } else if (key == "beta2") {
      p.beta2 = value.get<double>();
    } else if (key == "beta3") {
      p.beta3 = value.get<double>();
    } else if (key == "epsilon") {
      p.epsilon = value.get<double>();
    } else if (key == "max_outer") {
      p.max_outer = value.get<int>();
    } else if (key == "lambda0") {
      p.lambda0 = value.get<double>();
    } else if (key == "feasibility_margin") {
      p.feasibility_margin = value.get<double>();
    } else {
      throw IoError("unknown solver parameter '" + key + "'");
    }
  }
  p.validate();
  return p;
}

nlohmann::json params_to_json(const SolverParams& params) {
  return nlohmann::json{{"beta1", params.beta1},
                        {"beta2", params.beta2},
                        {"beta3", params.beta3},
                        {"epsilon", params.epsilon},
                        {"max_outer", params.max_outer},
                        {"lambda0", params.lambda0},
                        {"feasibility_margin", params.feasibility_margin}};
}

void write_probability_field(const std::string& dir, const ProbabilityField& field) {
  field.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);
  for (int i = 0; i < field.num_surfaces(); ++i) {
    write_csv(dir + "/surface_" + std::to_string(i) + ".csv",
              field.surface_probs[static_cast<std::size_t>(i)]);
  }
  write_csv_int(dir + "/labels.csv", field.region_labels);
  nlohmann::json meta{{"num_surfaces", field.num_surfaces()},
                      {"depth", field.depth()},
                      {"width", field.width()}};
  write_text_file(dir + "/meta.json", meta.dump(2) + "\n");
}

ProbabilityField read_probability_field(const std::string& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(dir + "/meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse " + dir + "/meta.json: " + e.what());
  }
  if (!meta.contains("num_surfaces")) throw IoError("meta.json lacks 'num_surfaces'");
  const int n = meta.at("num_surfaces").get<int>();
  if (n < 1) throw IoError("meta.json: num_surfaces must be positive");
  ProbabilityField field;
  field.surface_probs.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    field.surface_probs[static_cast<std::size_t>(i)] =
        read_csv(dir + "/surface_" + std::to_string(i) + ".csv");
  }
  field.region_labels = read_csv_int(dir + "/labels.csv");
  field.validate();
  return field;
}

}  // namespace surfopt
