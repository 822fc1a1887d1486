#pragma once

// Configuration-driven experiments. Each one returns its typed results plus
// an ExperimentOutcome listing named pass/fail checks; a failed check is a
// result, not an error. When cfg.output_dir is non-empty the experiment
// writes its CSV/JSON files and manifest.json there.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "torushj/config.hpp"
#include "torushj/ergodic_solver.hpp"
#include "torushj/oracles.hpp"
#include "torushj/parabolic_solver.hpp"
#include "torushj/regularity.hpp"
#include "torushj/stationary_solver.hpp"

namespace torushj {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
  std::string note;
};

struct ExperimentOutcome {
  std::string experiment;
  std::vector<Check> checks;
  nlohmann::json constants = nlohmann::json::object();  ///< named structure constants
  nlohmann::json summary = nlohmann::json::object();

  bool all_passed() const;
  const Check* find(const std::string& name) const;
  void add(std::string name, bool passed, double value, double bound, std::string note = {});
};

/// {experiment, config_hash, version, seed, constants, checks, summary}
nlohmann::json manifest(const ExperimentConfig& cfg, const ExperimentOutcome& outcome);

/// Oracle for A = nu I, H = |p|^2 + ell(x); empty for any other problem.
std::optional<OracleResult> hopf_cole_if_applicable(const HamiltonianSpec& h,
                                                    const DiffusionSpec& a,
                                                    const TorusGrid& grid);

/// (max - min) / min; 0 for an empty or all-zero list.
double relative_spread(const std::vector<double>& values);

/// Checks M <= 0 at Psi = S s^gamma and M > 0 at 0.999999 S, S the Hoelder
/// seminorm. Constant fields pass vacuously.
struct TightnessResult {
  double seminorm = 0.0;
  double M_at = 0.0;
  double M_below = 0.0;
  bool vacuous = false;
  bool passed = false;
};
TightnessResult certificate_tightness(const ScalarField& field, double gamma,
                                      const PairScanOptions& opts = {});

// ---------------------------------------------------------------------------

struct SweepRow {
  double eps = 0.0;
  double linf = 0.0;
  double eps_linf = 0.0;
  double osc = 0.0;
  double lip = 0.0;
  std::optional<double> holder;
  std::optional<double> certified_constant;  ///< A1 * A2
  double residual = 0.0;
  int iterations = 0;
};

struct EpsilonSweepResult {
  std::vector<SweepRow> rows;
  std::vector<ScalarField> solutions;
  SchemeConfig scheme;  ///< shared by every solve of the sweep
  std::optional<double> L_ssa4;
  double H0_sup = 0.0;
  std::optional<double> holder_gamma;
  ExperimentOutcome outcome;
};

EpsilonSweepResult run_epsilon_sweep(const ExperimentConfig& cfg);

struct StationaryRun {
  StationaryReport report;
  ExperimentOutcome outcome;
};

StationaryRun run_stationary(const ExperimentConfig& cfg);

struct ErgodicRun {
  ErgodicSolution direct;
  ErgodicSolution vanishing;
  std::optional<OracleResult> oracle;
  ExperimentOutcome outcome;
};

ErgodicRun run_ergodic(const ExperimentConfig& cfg);

struct EvolveRun {
  Evolution evolution;
  SchemeConfig scheme;
  std::vector<RegularizedEvolution> ladder;  ///< when params.n_trunc > 0
  ExperimentOutcome outcome;
};

/// The gradient box covers twice the gradients of u0 and of the ergodic
/// profile; the run is repeated with a wider box if the discrete gradients
/// ever leave it.
EvolveRun run_evolve(const ExperimentConfig& cfg);

struct LargeTimeReport {
  double c = 0.0;
  ScalarField v0;
  std::vector<std::array<double, 2>> m_curve;        ///< (t, max_x(u + ct - v0))
  std::vector<std::array<double, 2>> sup_gap_curve;  ///< (t, sup_x|u + ct - v0 - m(t)|)
  double ell_limit = 0.0;
  double lambda = 0.0;
  double worst_m_increase = 0.0;
  Evolution evolution;
  ExperimentOutcome outcome;
};

LargeTimeReport run_large_time(const ExperimentConfig& cfg);

struct CesaroRow {
  double t = 0.0;
  double max_ratio = 0.0;  ///< max_x u / t
  double min_ratio = 0.0;  ///< min_x u / t
};

struct CesaroResult {
  double c = 0.0;
  std::vector<CesaroRow> rows;
  double error_T = 0.0;       ///< max_x |u(x,T)/T + c|
  double error_T_long = 0.0;  ///< same at T_long
  double worst_max_subadditivity = 0.0;  ///< max of M(t+s) - M(t) - M(s), M = max_x u
  double worst_min_superadditivity = 0.0;  ///< max of m(t) + m(s) - m(t+s), m = min_x u
  std::optional<double> L_parabolic;
  double worst_cone_defect = 0.0;  ///< after subtracting the 5 h Lip slack
  Evolution evolution;
  ExperimentOutcome outcome;
};

CesaroResult run_cesaro(const ExperimentConfig& cfg);

struct LadderRun {
  DegenerateLadder ladder;
  ExperimentOutcome outcome;
};

LadderRun run_degenerate_ladder(const ExperimentConfig& cfg);

struct CertifyRun {
  ScalarField field;
  RegularityReport report;
  std::vector<TightnessResult> tightness;  ///< one per params.gammas
  std::optional<double> brute_M;
  std::optional<double> scan_M;
  std::vector<std::pair<double, double>> minimal_A2;  ///< (gamma, A2)
  ExperimentOutcome outcome;
};

CertifyRun run_certify(const ExperimentConfig& cfg);

/// Dispatches on cfg.experiment and returns the outcome.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

}  // namespace torushj
