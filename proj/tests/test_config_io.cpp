#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "torushj/config.hpp"
#include "torushj/errors.hpp"
#include "torushj/io.hpp"

using namespace torushj;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "torushj_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kToml = R"(
experiment = "epsilon_sweep"
seed = 3

[grid]
counts = [64]

[diffusion]
type = "isotropic"
nu = 0.5

[hamiltonian]
family = "power_coercive"
k = 3.0
a = 1.0
ell = { fourier = [{ freq = [1], cos = 1.0 }, { freq = [2], sin = 0.25 }] }

[params]
eps = [1.0, 0.1]
holder_gamma = 0.5
)";

const char* kJson = R"({
  "experiment": "epsilon_sweep",
  "seed": 3,
  "grid": {"counts": [64]},
  "diffusion": {"type": "isotropic", "nu": 0.5},
  "hamiltonian": {
    "family": "power_coercive", "k": 3.0, "a": 1.0,
    "ell": {"fourier": [{"freq": [1], "cos": 1.0}, {"freq": [2], "sin": 0.25}]}
  },
  "params": {"eps": [1.0, 0.1], "holder_gamma": 0.5}
})";

}  // namespace

TEST_CASE("TOML and JSON spellings describe the same experiment") {
  const nlohmann::json from_toml = toml_to_json(kToml);
  const nlohmann::json from_json = nlohmann::json::parse(kJson);
  CHECK(from_toml == from_json);
  CHECK(config_hash(from_toml) == config_hash(from_json));
  CHECK(config_hash(from_toml).size() == 16);

  const fs::path dir = scratch("spellings");
  std::ofstream(dir / "a.toml") << kToml;
  std::ofstream(dir / "a.json") << kJson;
  const ExperimentConfig a = load_config(dir / "a.toml");
  const ExperimentConfig b = load_config(dir / "a.json");
  CHECK(a.experiment == "epsilon_sweep");
  CHECK(a.seed == 3);
  CHECK(a.grid == b.grid);
  CHECK(a.params.eps == std::vector<double>{1.0, 0.1});
  REQUIRE(a.params.holder_gamma);
  CHECK(*a.params.holder_gamma == 0.5);
  for (std::size_t i = 0; i < a.grid.size(); i += 5) {
    const Point x = a.grid.point(i);
    const VectorSample p(0.7, 0.0);
    CHECK(a.hamiltonian(x, p) == b.hamiltonian(x, p));
    const double expected = std::pow(0.7, 3) + std::cos(kTwoPi * x[0]) + 0.25 * std::sin(2 * kTwoPi * x[0]);
    CHECK(a.hamiltonian(x, p) == doctest::Approx(expected));
  }
}

TEST_CASE("shipped configurations load") {
  for (const char* name : {"hopf_cole.toml", "cubic.toml", "degenerate_ladder.toml", "anisotropic_2d.json"}) {
    CAPTURE(name);
    const ExperimentConfig cfg = load_config(fs::path(TORUSHJ_SOURCE_DIR) / "configs" / name);
    CHECK(!cfg.experiment.empty());
    CHECK(cfg.grid.size() >= 256);
  }
  const ExperimentConfig over =
      load_config(fs::path(TORUSHJ_SOURCE_DIR) / "configs" / "hopf_cole.toml", std::vector<int>{64});
  CHECK(over.grid.count(0) == 64);
}

TEST_CASE("invalid configurations are rejected") {
  const nlohmann::json good = nlohmann::json::parse(kJson);
  auto broken = [&](auto edit) {
    nlohmann::json j = good;
    edit(j);
    return j;
  };
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["experiment"] = "nope"; })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["grid"]["counts"] = {4}; })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["grid"]["counts"] = {8, 8, 8}; })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j.erase("grid"); })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j.erase("hamiltonian"); })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["hamiltonian"]["family"] = "quartic"; })),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["hamiltonian"].erase("k"); })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["diffusion"]["type"] = "hyper"; })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["params"]["cfl_safety"] = 1.5; })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["params"]["T"] = -1.0; })), ConfigError);
  CHECK_THROWS_AS(parse_config(broken([](auto& j) { j["params"]["eps"] = "many"; })), ConfigError);
  CHECK_THROWS_AS(toml_to_json("grid = [1,"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), ConfigError);
  CHECK_THROWS_AS(load_config(fs::path(TORUSHJ_SOURCE_DIR) / "tests" / "data" / "bad.json"), ConfigError);
}

TEST_CASE("grid count strings") {
  CHECK(parse_grid_counts("256") == std::vector<int>{256});
  CHECK(parse_grid_counts("64,32") == std::vector<int>{64, 32});
  CHECK_THROWS_AS(parse_grid_counts("64x64"), ConfigError);
  CHECK_THROWS_AS(parse_grid_counts("8,8,8"), ConfigError);
  CHECK_THROWS_AS(parse_grid_counts(""), ConfigError);
}

TEST_CASE("field files round-trip exactly") {
  const fs::path dir = scratch("fields");
  for (const TorusGrid& g : {TorusGrid::line(40), TorusGrid::square(9, 12)}) {
    const ScalarField f = random_field(g, 77);
    write_field_csv(dir / "f.csv", f);
    const ScalarField c = read_field_csv(dir / "f.csv");
    CHECK(c.grid() == g);
    CHECK(sup_diff(c, f) == 0.0);
    write_json(dir / "f.json", field_to_json(f));
    const ScalarField j = read_field(dir / "f.json");
    CHECK(j.grid() == g);
    CHECK(sup_diff(j, f) == 0.0);
    CHECK(sup_diff(read_field(dir / "f.csv"), f) == 0.0);
  }
  const std::string header = slurp(dir / "f.csv").substr(0, slurp(dir / "f.csv").find('\n'));
  CHECK(header == "index_0,index_1,value");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK_THROWS(read_field(dir / "missing.csv"));
}

TEST_CASE("tables and evolution dumps") {
  const fs::path dir = scratch("tables");
  write_convergence_csv(dir / "conv.csv", {{1.0, 0.5, 0.0}, {0.1, 0.51, 0.02}});
  const std::string conv = slurp(dir / "conv.csv");
  CHECK(conv.rfind("eps,c_estimate,sup_increment\n", 0) == 0);
  CHECK(std::count(conv.begin(), conv.end(), '\n') == 3);

  write_table_csv(dir / "t.csv", {"a", "b"}, {{1.0, 2.0}, {3.0, 4.0}});
  CHECK(slurp(dir / "t.csv") == "a,b\n1,2\n3,4\n");

  const TorusGrid g = TorusGrid::line(16);
  const SchemeConfig cfg = make_scheme_config(power_cos(2.0), g, {1.0, 0.0}, 1e-8);
  const Evolution ev = evolve(power_cos(2.0), DiffusionSpec::isotropic(1, 1.0),
                              ScalarField::constant(g, 0.0), 0.1, TimeStepConfig{}, cfg);
  write_evolution(dir / "ev", ev, {{"note", "smoke"}});
  const nlohmann::json index = nlohmann::json::parse(slurp(dir / "ev" / "index.json"));
  CHECK(index.at("times").size() == ev.snapshot_times.size());
  CHECK(index.at("files").size() == ev.snapshots.size());
  CHECK(index.at("diagnostics").at("note") == "smoke");
  const ScalarField last = read_field(dir / "ev" / index.at("files").back().get<std::string>());
  CHECK(sup_diff(last, ev.snapshots.back()) == 0.0);

  // Same inputs, byte-identical files.
  write_evolution(dir / "ev2", ev, {{"note", "smoke"}});
  CHECK(slurp(dir / "ev" / "index.json") == slurp(dir / "ev2" / "index.json"));
  CHECK(slurp(dir / "ev" / "snapshot_001.csv") == slurp(dir / "ev2" / "snapshot_001.csv"));
}
