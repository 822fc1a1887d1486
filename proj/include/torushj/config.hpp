#pragma once

// Experiment configuration, written in TOML or as the equivalent JSON.
//
// Coefficients are either a number or {"fourier": [{"freq": [k0, k1],
// "cos": a, "sin": b}, ...]}; vector coefficients are arrays of coefficients
// and matrix coefficients arrays of rows.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "torushj/problem.hpp"
#include "torushj/stationary_solver.hpp"
#include "torushj/torus_grid.hpp"

namespace torushj {

/// Knobs of the individual experiments; each one reads what it needs.
struct ExperimentParams {
  std::vector<double> eps{1.0, 0.1, 0.01, 0.001};
  std::vector<double> eps_schedule{1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001};
  double eps_single = 0.1;  ///< stationary solve / degenerate ladder / certify
  double T = 20.0;
  double T_long = 40.0;     ///< second Cesaro horizon
  double dt = 0.0;          ///< 0 = CFL-limited
  double cfl_safety = 0.9;
  std::vector<double> snapshots;  ///< empty = geometric default
  ScalarCoefficient u0 = constant_coefficient(0.0);
  bool u0_smooth = true;
  std::vector<double> q{10.0, 100.0, 1000.0};
  double M = 3.0;           ///< growth exponent of H (regularisation uses M + 1)
  double n_trunc = 0.0;     ///< 0 = no truncation run
  std::vector<double> gammas{0.25, 0.5, 0.75, 1.0};
  std::optional<double> holder_gamma;       ///< uniformity check exponent
  std::optional<double> certificate_gamma;  ///< concave certificate exponent
  double large_time_threshold = 1e-2;
  double cesaro_threshold = 0.05;
  double lipschitz_spread = 0.10;
  double holder_spread = 0.15;
  double ladder_spread = 0.20;
  std::optional<std::filesystem::path> field;  ///< certify: stored field
};

struct ExperimentConfig {
  std::string experiment;
  TorusGrid grid = TorusGrid::line(8);
  DiffusionSpec diffusion = DiffusionSpec::isotropic(1, 1.0);
  HamiltonianSpec hamiltonian =
      HamiltonianSpec::power_coercive(constant_coefficient(1.0), 2.0, constant_coefficient(0.0));
  AdaptiveOptions solver;
  ExperimentParams params;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  nlohmann::json raw;  ///< the parsed document, for hashing and the manifest
};

const std::vector<std::string>& experiment_names();

ScalarCoefficient parse_scalar_coefficient(const nlohmann::json& j);
VectorCoefficient parse_vector_coefficient(const nlohmann::json& j, int dim);
MatrixCoefficient parse_matrix_coefficient(const nlohmann::json& j, int dim);
DiffusionSpec parse_diffusion(const nlohmann::json& j, const TorusGrid& grid);
HamiltonianSpec parse_hamiltonian(const nlohmann::json& j, int dim);

/// Parses a configuration document; `grid_override` replaces the grid before
/// grid-sampled quantities are built. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::optional<std::vector<int>>& grid_override = {});
/// TOML document as the equivalent JSON tree. Throws ConfigError.
nlohmann::json toml_to_json(std::string_view text, const std::string& source = "config");
/// Reads .toml or .json, chosen by the extension.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::vector<int>>& grid_override = {});

/// "256" or "64,64".
std::vector<int> parse_grid_counts(const std::string& text);

/// FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace torushj
