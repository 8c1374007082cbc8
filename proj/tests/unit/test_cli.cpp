#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "tunnelshock/errors.hpp"
#include "tunnelshock_cli/csv.hpp"
#include "tunnelshock_cli/run.hpp"
#include "tunnelshock_cli/scenario.hpp"

using namespace tunnelshock;
using namespace tunnelshock::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(
[scenario]
name = mini

[symbol]
A = 0.5

[initial]
S0 = x^2/2
rho0 = 1

[domain]
x0_min = -2
x0_max = 2
x0_points = 201
T = 1
h_t = 0.05
)";

std::string message_of(const std::string& text) {
  try {
    parse_scenario(text, "test.ini");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tunnelshock-unit-" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal scenario") {
  const Scenario sc = parse_scenario(kMinimal, "mini.ini");
  CHECK(sc.name == "mini");
  CHECK(sc.x0_grid().size() == 201);
  CHECK(sc.fan_options().h_t == 0.05);
  CHECK(sc.initial.momentum(1.5) == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(sc.symbol.P(0.0, 2.0) == 2.0);
}

TEST_CASE("scenario errors name the key") {
  const std::string base = kMinimal;
  auto with = [&](const std::string& from, const std::string& to) {
    std::string s = base;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  const std::string bad_expr = message_of(with("S0 = x^2/2", "S0 = x^2/"));
  CHECK(bad_expr.find("S0") != std::string::npos);
  CHECK(bad_expr.find("offset 4") != std::string::npos);
  CHECK(message_of(with("h_t = 0.05", "h_t = 0.3")).find("h_t") != std::string::npos);
  CHECK(message_of(base + "\n[domain2]\nfoo = 1\n").find("domain2") != std::string::npos);
  CHECK(message_of(with("T = 1", "T = 1\nbogus = 3")).find("bogus") != std::string::npos);
  CHECK(message_of(with("x0_points = 201", "x0_points = ten")).find("x0_points") != std::string::npos);
  CHECK(message_of(base + "\n[regularization]\nepsilon = 0.001, 0.01\n").find("epsilon") != std::string::npos);
  CHECK_THROWS_AS(load_scenario("/nonexistent/file.ini"), std::ios_base::failure);
}

TEST_CASE("every preset parses") {
  const auto names = preset_names();
  CHECK(names.size() >= 10);
  for (const auto& n : names) {
    CAPTURE(n);
    const Scenario sc = preset(n);
    CHECK(sc.name == n);
    CHECK(sc.origin == "preset:" + n);
    CHECK_FALSE(preset_text(n).empty());
  }
  CHECK_THROWS_AS(preset("no-such-preset"), ValidationError);
}

TEST_CASE("CSV cells") {
  CHECK(format_cell(0.1) == "0.10000000000000001");
  CHECK(format_cell(2.0) == "2");
  CHECK(format_cell(std::int64_t{-3}) == "-3");
  CHECK(format_cell(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_cell(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_cell(std::string("a,b")) == "\"a,b\"");
  CHECK(format_cell(std::string("plain")) == "plain");
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  {
    CsvWriter w((dir / "x.csv").string(), {"a", "b"});
    w.row({1.5, std::string("z")});
    CHECK_THROWS_AS(w.row({1.0}), std::logic_error);
  }
  const auto rows = read_csv(dir / "x.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b"});
  CHECK(rows[1] == std::vector<std::string>{"1.5", "z"});
}

TEST_CASE("evolve on the rarefaction preset") {
  const fs::path dir = scratch("rare");
  RunOptions o;
  o.out_dir = dir.string();
  const auto r = run(Command::evolve, preset("rarefaction"), o);
  CHECK(fs::exists(dir / "manifest.json"));
  const auto rows = read_csv(dir / "density.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == std::vector<std::string>{"t", "x", "R"});
  std::size_t checked = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (std::stod(rows[i][0]) != 1.0) continue;
    const double x = std::stod(rows[i][1]);
    if (std::fabs(x) >= 2.0) continue;
    CHECK(std::fabs(std::stod(rows[i][2]) - 0.5) <= 1e-6);
    ++checked;
  }
  CHECK(checked > 300);
  bool jac = false;
  for (const auto& [k, v] : r.summary) jac = jac || (k == "jacobian_max_deviation" && v <= 1e-6);
  CHECK(jac);
}

TEST_CASE("singularity on the tanh preset") {
  const fs::path dir = scratch("sing");
  RunOptions o;
  o.out_dir = dir.string();
  run(Command::singularity, preset("burgers-tanh"), o);
  const auto rows = read_csv(dir / "summary.csv");
  bool found = false;
  for (const auto& row : rows) {
    if (row.size() == 2 && row[0] == "t_star") {
      CHECK(std::fabs(std::stod(row[1]) - 1.0) <= 1e-3);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("command and oracle names") {
  CHECK(parse_command("limit-study") == Command::limit_study);
  CHECK_FALSE(parse_command("frobnicate").has_value());
  CHECK(parse_oracle("kf-lattice") == OracleKind::kf_lattice);
  CHECK(std::string(to_string(OracleKind::tunnel_compare)) == "tunnel-compare");
}
