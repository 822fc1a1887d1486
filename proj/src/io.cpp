#include "torushj/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "torushj/errors.hpp"

namespace torushj {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out = open_out(path);
  const TorusGrid& g = field.grid();
  out << (g.dim() == 2 ? "index_0,index_1,value\n" : "index_0,value\n");
  for (std::size_t i = 0; i < g.size(); ++i) {
    const MultiIndex m = g.multi(i);
    out << m[0] << ',';
    if (g.dim() == 2) out << m[1] << ',';
    out << format_double(field[i]) << '\n';
  }
}

ScalarField read_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  int dim = 0;
  if (header == "index_0,value") {
    dim = 1;
  } else if (header == "index_0,index_1,value") {
    dim = 2;
  } else {
    throw std::runtime_error(path.string() + ": unexpected CSV header '" + header + "'");
  }
  std::vector<std::array<int, 2>> idx;
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::array<int, 2> m{0, 0};
    for (int k = 0; k < dim; ++k) {
      std::getline(ss, cell, ',');
      m[k] = std::stoi(cell);
    }
    std::getline(ss, cell, ',');
    idx.push_back(m);
    vals.push_back(std::stod(cell));
  }
  std::vector<int> counts(dim, 0);
  for (const auto& m : idx) {
    for (int k = 0; k < dim; ++k) counts[k] = std::max(counts[k], m[k] + 1);
  }
  const TorusGrid grid(counts);
  if (vals.size() != grid.size()) {
    throw std::runtime_error(path.string() + ": rows do not cover the grid");
  }
  std::vector<double> values(grid.size());
  for (std::size_t r = 0; r < vals.size(); ++r) values[grid.flat(idx[r])] = vals[r];
  return ScalarField(grid, std::move(values));
}

json field_to_json(const ScalarField& field) {
  const TorusGrid& g = field.grid();
  return json{{"grid", {{"dim", g.dim()}, {"counts", g.counts()}}},
              {"values", std::vector<double>(field.values().begin(), field.values().end())}};
}

ScalarField field_from_json(const json& j) {
  try {
    const TorusGrid grid(j.at("grid").at("counts").get<std::vector<int>>());
    if (j.at("grid").contains("dim") && j.at("grid").at("dim").get<int>() != grid.dim()) {
      throw ConfigError("field envelope: dim disagrees with counts");
    }
    return ScalarField(grid, j.at("values").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field envelope: ") + e.what());
  }
}

ScalarField read_field(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_field_csv(path);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return field_from_json(json::parse(in));
}

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<ConvergenceRow>& rows) {
  std::vector<std::vector<double>> table;
  for (const ConvergenceRow& r : rows) table.push_back({r.eps, r.c_estimate, r.sup_increment});
  write_table_csv(path, {"eps", "c_estimate", "sup_increment"}, table);
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ofstream out = open_out(path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
    out << '\n';
  }
}

void write_evolution(const std::filesystem::path& dir, const Evolution& ev,
                     const json& diagnostics) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (std::size_t s = 0; s < ev.snapshots.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", s);
    write_field_csv(dir / name, ev.snapshots[s]);
    files.emplace_back(name);
  }
  json index{{"times", ev.snapshot_times},
             {"lambda_bound", ev.lambda_bound},
             {"lambda_scheme", ev.lambda_scheme},
             {"dt", ev.dt},
             {"steps", ev.steps},
             {"files", files},
             {"snapshot_lipschitz", ev.snapshot_lipschitz},
             {"diagnostics", diagnostics}};
  write_json(dir / "index.json", index);
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace torushj
