#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "surfopt/batch.hpp"
#include "surfopt/column_model.hpp"
#include "surfopt/ipm.hpp"
#include "surfopt/surface_head.hpp"

namespace surfopt {

/// Write a matrix as comma-separated decimal text, 17 significant digits,
/// one row per line (bit-faithful round trip for doubles).
void write_csv(const std::string& path, const Matrix& m);

/// Read a matrix written by write_csv (or any rectangular CSV of numbers).
Matrix read_csv(const std::string& path);

void write_csv_int(const std::string& path, const Eigen::MatrixXi& m);
Eigen::MatrixXi read_csv_int(const std::string& path);

/// JSON layout: {"mu":[...],"sigma_sq":[...],"delta":[...]|null,"Delta":[...]|null}.
/// Infinite max gaps serialize as null; null or "inf" parse back to infinity.
nlohmann::json problem_to_json(const ColumnProblem& problem);
ColumnProblem problem_from_json(const nlohmann::json& j);

/// Accepts a bare problem object, a bare array, or {"problems":[...]}.
std::vector<ColumnProblem> problems_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const Solution& sol);

/// Partial override of defaults: unknown keys rejected, missing keys keep defaults.
SolverParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const SolverParams& params);

/// Directory fixture: surface_<i>.csv per surface, labels.csv, meta.json.
void write_probability_field(const std::string& dir, const ProbabilityField& field);
ProbabilityField read_probability_field(const std::string& dir);

}  // namespace surfopt
