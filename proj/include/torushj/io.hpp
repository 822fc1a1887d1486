#pragma once

// Serialisation of fields, convergence tables and evolutions. Numbers are
// written with 17 significant digits so that files round-trip exactly.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "torushj/ergodic_solver.hpp"
#include "torushj/parabolic_solver.hpp"
#include "torushj/torus_grid.hpp"

namespace torushj {

/// Header "index_0[,index_1],value", one row per node in row-major order.
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);
/// Reads the CSV form; the grid is inferred from the largest indices.
ScalarField read_field_csv(const std::filesystem::path& path);

/// {"grid": {"dim": d, "counts": [...]}, "values": [...]}
nlohmann::json field_to_json(const ScalarField& field);
ScalarField field_from_json(const nlohmann::json& j);
/// Reads either form, chosen by the file extension (.json or .csv).
ScalarField read_field(const std::filesystem::path& path);

/// Header "eps,c_estimate,sup_increment".
void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<ConvergenceRow>& rows);

/// Generic numeric table with the given header.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

/// snapshot_NNN.csv per snapshot plus index.json
/// {"times", "lambda_bound", "files", "diagnostics"}.
void write_evolution(const std::filesystem::path& dir, const Evolution& ev,
                     const nlohmann::json& diagnostics = nlohmann::json::object());

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Formats with %.17g.
std::string format_double(double v);

}  // namespace torushj
