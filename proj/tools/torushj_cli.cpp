// Command-line front end: one subcommand per experiment. Exit status 0 means
// the experiment ran; whether its checks passed is recorded in manifest.json.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "torushj/config.hpp"
#include "torushj/errors.hpp"
#include "torushj/experiments.hpp"

namespace {

const std::map<std::string, std::string> kSubcommands{
    {"solve-stationary", "stationary"}, {"solve-ergodic", "ergodic"},
    {"evolve", "evolve"},               {"sweep-eps", "epsilon_sweep"},
    {"large-time", "large_time"},       {"cesaro", "cesaro"},
    {"degenerate-ladder", "degenerate_ladder"}, {"certify", "certify"}};

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string grid;
};

int run(const std::string& experiment, const Options& opt) {
  std::optional<std::vector<int>> grid;
  if (!opt.grid.empty()) grid = torushj::parse_grid_counts(opt.grid);
  torushj::ExperimentConfig cfg = torushj::load_config(opt.config, grid);
  cfg.experiment = experiment;
  cfg.raw["experiment"] = experiment;
  if (grid) cfg.raw["grid"]["counts"] = *grid;
  if (!opt.out.empty()) {
    cfg.output_dir = opt.out;
    cfg.raw["output_dir"] = opt.out;
  }
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.raw["seed"] = *opt.seed;
  }

  const torushj::ExperimentOutcome outcome = torushj::run_experiment(cfg);
  for (const torushj::Check& c : outcome.checks) {
    std::printf("%-4s %-48s value=%-13.6g bound=%-13.6g %s\n", c.passed ? "ok" : "FAIL",
                c.name.c_str(), c.value, c.bound, c.note.c_str());
  }
  std::printf("%s: %s, manifest in %s\n", outcome.experiment.c_str(),
              outcome.all_passed() ? "all checks passed" : "some checks failed",
              (cfg.output_dir / "manifest.json").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discounted, ergodic and evolutive Hamilton-Jacobi problems on the torus"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;
  for (const auto& [name, experiment] : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name, "run the " + experiment + " experiment");
    sub->add_option("--config", opt.config, "TOML or JSON configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
    sub->add_option("--seed", opt.seed, "random seed (overrides the config)");
    sub->add_option("--grid", opt.grid, "grid counts, n or n,n (overrides the config)");
    sub->callback([&chosen, experiment = experiment] { chosen = experiment; });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    return run(chosen, opt);
  } catch (const torushj::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
