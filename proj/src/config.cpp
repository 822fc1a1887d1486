#include "torushj/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "torushj/errors.hpp"

namespace torushj {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) fail(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

double required_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    fail(std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

std::vector<double> numbers(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_array()) fail(std::string("'") + key + "' must be an array");
  std::vector<double> out;
  for (const json& v : j.at(key)) {
    if (!v.is_number()) fail(std::string("'") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return required_number(j, key);
}

HamiltonianMetadata parse_metadata(const json& j, HamiltonianMetadata meta) {
  if (!j.is_object()) fail("'metadata' must be an object");
  if (auto v = optional_number(j, "k")) meta.k = v;
  if (auto v = optional_number(j, "C")) meta.C = v;
  if (auto v = optional_number(j, "alpha")) meta.alpha = v;
  if (auto v = optional_number(j, "beta")) meta.beta = v;
  if (auto v = optional_number(j, "M")) meta.growth_M = v;
  return meta;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"epsilon_sweep", "stationary", "ergodic",
                                              "evolve",        "large_time", "cesaro",
                                              "degenerate_ladder", "certify"};
  return names;
}

ScalarCoefficient parse_scalar_coefficient(const json& j) {
  if (j.is_number()) return constant_coefficient(j.get<double>());
  if (!j.is_object() || !j.contains("fourier") || !j.at("fourier").is_array()) {
    fail("a coefficient is a number or {\"fourier\": [...]}");
  }
  std::vector<FourierTerm> terms;
  for (const json& t : j.at("fourier")) {
    FourierTerm term;
    if (t.contains("freq")) {
      const json& f = t.at("freq");
      if (!f.is_array() || f.empty() || f.size() > 2) fail("'freq' must have 1 or 2 entries");
      term.freq[0] = f.at(0).get<int>();
      if (f.size() == 2) term.freq[1] = f.at(1).get<int>();
    }
    term.cos_coeff = number(t, "cos", 0.0);
    term.sin_coeff = number(t, "sin", 0.0);
    terms.push_back(term);
  }
  return fourier_coefficient(FourierSeries(std::move(terms)));
}

VectorCoefficient parse_vector_coefficient(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    fail("a vector coefficient needs one entry per dimension");
  }
  std::vector<ScalarCoefficient> parts;
  for (const json& c : j) parts.push_back(parse_scalar_coefficient(c));
  return [parts](const Point& x) {
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k < parts.size(); ++k) out[static_cast<int>(k)] = parts[k](x);
    return out;
  };
}

MatrixCoefficient parse_matrix_coefficient(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    fail("a matrix coefficient needs one row per dimension");
  }
  std::vector<std::vector<ScalarCoefficient>> rows;
  for (const json& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      fail("matrix rows need one entry per dimension");
    }
    std::vector<ScalarCoefficient> r;
    for (const json& c : row) r.push_back(parse_scalar_coefficient(c));
    rows.push_back(std::move(r));
  }
  return [rows](const Point& x) {
    Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        out(static_cast<int>(r), static_cast<int>(c)) = rows[r][c](x);
      }
    }
    return out;
  };
}

DiffusionSpec parse_diffusion(const json& j, const TorusGrid& grid) {
  if (!j.is_object() || !j.contains("type")) fail("'diffusion' needs a 'type'");
  const std::string type = j.at("type").get<std::string>();
  const int dim = grid.dim();
  if (type == "isotropic") {
    const double nu = required_number(j, "nu");
    if (nu < 0.0) fail("'nu' must be nonnegative");
    return DiffusionSpec::isotropic(dim, nu);
  }
  if (type == "zero") return DiffusionSpec::zero(dim);
  if (type == "sigma") {
    if (!j.contains("sigma")) fail("diffusion type 'sigma' needs a 'sigma' matrix");
    DiffusionSpec d = DiffusionSpec::from_sigma(dim, parse_matrix_coefficient(j.at("sigma"), dim),
                                                grid);
    return d;
  }
  fail("unknown diffusion type '" + type + "'");
}

HamiltonianSpec parse_hamiltonian(const json& j, int dim) {
  if (!j.is_object() || !j.contains("family")) fail("'hamiltonian' needs a 'family'");
  const std::string family = j.at("family").get<std::string>();
  auto coef = [&](const char* key, double fallback) {
    return j.contains(key) ? parse_scalar_coefficient(j.at(key)) : constant_coefficient(fallback);
  };
  auto inner = [&]() {
    if (!j.contains("inner")) fail("family '" + family + "' needs an 'inner' Hamiltonian");
    return parse_hamiltonian(j.at("inner"), dim);
  };

  std::optional<HamiltonianSpec> spec;
  if (family == "power_coercive") {
    spec = HamiltonianSpec::power_coercive(coef("a", 1.0), required_number(j, "k"),
                                           coef("ell", 0.0));
  } else if (family == "sigma_power") {
    if (!j.contains("sigma")) fail("sigma_power needs 'sigma'");
    std::optional<HamiltonianSpec> g;
    if (j.contains("g")) g = parse_hamiltonian(j.at("g"), dim);
    spec = HamiltonianSpec::sigma_power(parse_matrix_coefficient(j.at("sigma"), dim),
                                        required_number(j, "m"), g);
  } else if (family == "sublinear") {
    if (!j.contains("b")) fail("sublinear needs 'b'");
    spec = HamiltonianSpec::sublinear(parse_vector_coefficient(j.at("b"), dim), coef("ell", 0.0));
  } else if (family == "perturbed_power") {
    spec = HamiltonianSpec::perturbed_power(inner(), required_number(j, "alpha"),
                                            required_number(j, "exponent"));
  } else if (family == "truncated") {
    spec = HamiltonianSpec::truncated(inner(), required_number(j, "n"));
  } else if (family == "regularized") {
    spec = HamiltonianSpec::regularized(inner(), required_number(j, "q"),
                                        required_number(j, "m"));
  } else if (family == "offset") {
    spec = HamiltonianSpec::offset(inner(), required_number(j, "value"));
  } else {
    fail("unknown Hamiltonian family '" + family + "'");
  }
  if (j.contains("metadata")) spec = spec->with_metadata(parse_metadata(j.at("metadata"), spec->metadata()));
  return *spec;
}

std::vector<int> parse_grid_counts(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      out.push_back(n);
    } catch (const std::exception&) {
      fail("grid '" + text + "' is not a comma-separated list of integers");
    }
  }
  if (out.empty() || out.size() > 2) fail("grid needs 1 or 2 counts");
  return out;
}

namespace {

ExperimentConfig parse_config_unchecked(const json& j,
                                        const std::optional<std::vector<int>>& grid_override) {
  if (!j.is_object()) fail("document must be an object");
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.experiment = j.value("experiment", std::string("epsilon_sweep"));
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
    fail("unknown experiment '" + cfg.experiment + "'");
  }

  std::vector<int> counts;
  if (grid_override) {
    counts = *grid_override;
  } else if (j.contains("grid") && j.at("grid").contains("counts")) {
    counts = j.at("grid").at("counts").get<std::vector<int>>();
  } else {
    fail("missing 'grid.counts'");
  }
  try {
    cfg.grid = TorusGrid(counts);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }

  try {
    cfg.diffusion = parse_diffusion(j.value("diffusion", json{{"type", "isotropic"}, {"nu", 1.0}}),
                                    cfg.grid);
    cfg.diffusion.check_admissible(cfg.grid);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!j.contains("hamiltonian")) fail("missing 'hamiltonian'");
  cfg.hamiltonian = parse_hamiltonian(j.at("hamiltonian"), cfg.grid.dim());

  const json solver = j.value("solver", json::object());
  cfg.solver.box_floor = number(solver, "box_floor", cfg.solver.box_floor);
  cfg.solver.max_rounds = static_cast<int>(number(solver, "max_rounds", cfg.solver.max_rounds));
  cfg.solver.max_newton = static_cast<int>(number(solver, "max_newton", cfg.solver.max_newton));
  cfg.solver.tol_residual = optional_number(solver, "tol_residual");

  const json p = j.value("params", json::object());
  ExperimentParams& e = cfg.params;
  e.eps = numbers(p, "eps", e.eps);
  e.eps_schedule = numbers(p, "eps_schedule", e.eps_schedule);
  e.eps_single = number(p, "eps_single", e.eps_single);
  e.T = number(p, "T", e.T);
  e.T_long = number(p, "T_long", e.T_long);
  e.dt = number(p, "dt", e.dt);
  e.cfl_safety = number(p, "cfl_safety", e.cfl_safety);
  e.snapshots = numbers(p, "snapshots", e.snapshots);
  if (p.contains("u0")) e.u0 = parse_scalar_coefficient(p.at("u0"));
  e.u0_smooth = p.value("u0_smooth", e.u0_smooth);
  e.q = numbers(p, "q", e.q);
  e.M = number(p, "M", e.M);
  e.n_trunc = number(p, "n_trunc", e.n_trunc);
  e.gammas = numbers(p, "gammas", e.gammas);
  e.holder_gamma = optional_number(p, "holder_gamma");
  e.certificate_gamma = optional_number(p, "certificate_gamma");
  e.large_time_threshold = number(p, "large_time_threshold", e.large_time_threshold);
  e.cesaro_threshold = number(p, "cesaro_threshold", e.cesaro_threshold);
  e.lipschitz_spread = number(p, "lipschitz_spread", e.lipschitz_spread);
  e.holder_spread = number(p, "holder_spread", e.holder_spread);
  e.ladder_spread = number(p, "ladder_spread", e.ladder_spread);
  if (p.contains("field")) e.field = p.at("field").get<std::string>();
  if (!(e.cfl_safety > 0.0 && e.cfl_safety < 1.0)) fail("'cfl_safety' must lie in (0, 1)");
  if (!(e.T > 0.0)) fail("'T' must be positive");

  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.seed = j.value("seed", static_cast<std::uint64_t>(0));
  return cfg;
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::optional<std::vector<int>>& grid_override) {
  try {
    return parse_config_unchecked(j, grid_override);
  } catch (const json::exception& e) {
    fail(e.what());
  }
}

json toml_to_json(std::string_view text, const std::string& source) {
  try {
    const toml::table table = toml::parse(text, source);
    std::stringstream out;
    out << toml::json_formatter{table};
    return json::parse(out.str());
  } catch (const toml::parse_error& e) {
    std::stringstream msg;
    msg << source << ": " << e.description() << " at " << e.source().begin;
    fail(msg.str());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::vector<int>>& grid_override) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  json j;
  if (path.extension() == ".toml") {
    std::stringstream text;
    text << in.rdbuf();
    j = toml_to_json(text.str(), path.string());
  } else {
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      fail(path.string() + ": " + e.what());
    }
  }
  ExperimentConfig cfg = parse_config(j, grid_override);
  // Relative field paths are resolved against the config's directory.
  if (cfg.params.field && cfg.params.field->is_relative()) {
    cfg.params.field = path.parent_path() / *cfg.params.field;
  }
  return cfg;
}

std::string config_hash(const json& j) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace torushj
