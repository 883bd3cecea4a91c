#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "czo/harness.hpp"
#include "czo/registry.hpp"

using namespace czo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("czo_harness_test_" + name);
  fs::remove_all(p);
  return p;
}

/// Data rows of a CSV report, '#' comment lines dropped.
std::string csv_body(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line, body;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') body += line + "\n";
  return body;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream body(csv_body(path));
  std::string line;
  while (std::getline(body, line)) {
    std::vector<std::string> cells;
    std::istringstream cell(line);
    std::string c;
    while (std::getline(cell, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

RunResult run(const std::string& kind, const std::string& out, std::vector<std::string> overrides) {
  overrides.push_back("out=" + out);
  return run_experiment(make_config(kind, {}, overrides));
}

int cli(const std::string& args) {
  const int status = std::system((std::string(CZO_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config text") {
  const auto m = parse_config_text("# comment\n\ncurve = diamond\nn=128\n");
  CHECK(m.at("curve") == "diamond");
  CHECK(m.at("n") == "128");
  CHECK_THROWS_AS(parse_config_text("nonsense_key=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("curve diamond\n"), ConfigError);
}

TEST_CASE("config values") {
  const ExperimentConfig c = make_config("apply", {{"n", "128"}}, {"curve=diamond", "epsilon=0.5,0.25", "epsilons=1,0.5"});
  CHECK(c.kind == "apply");
  CHECK(c.curve == "diamond");
  CHECK(c.n == 128);
  CHECK(c.epsilons == std::vector<double>{0.5, 0.25});
  CHECK(c.t0_epsilons == std::vector<double>{1.0, 0.5});
  CHECK(c.seed == 7);
  CHECK(c.values.at("curve") == "diamond");

  const ExperimentConfig d = make_config("metric", {{"n", "128"}}, {"n=64"});
  CHECK(d.n == 64);

  CHECK_THROWS_AS(make_config("nonexistent", {}, {}), ConfigError);
  CHECK_THROWS_AS(make_config("apply", {}, {"n=-3"}), ConfigError);
  CHECK_THROWS_AS(make_config("apply", {}, {"n"}), ConfigError);
  CHECK_THROWS_AS(make_config("apply", {}, {"bogus=1"}), ConfigError);
  CHECK_THROWS_AS(make_config("apply", {}, {"epsilon=abc"}), ConfigError);

  for (const std::string& kind : experiment_kinds()) CHECK_NOTHROW(make_config(kind, {}, {}));
  CHECK_FALSE(config_keys().empty());
}

TEST_CASE("function families") {
  const GridGeometry g(Box::symmetric(1, 4.0), 64);
  const GridFunction ind = make_function("indicator:-1:1", g);
  CHECK(ind.integral() == doctest::Approx(2.0));
  const GridFunction bump = make_function("bump:1:2", g);
  CHECK(bump.sup_norm() <= 1.0);
  CHECK(bump.interpolate(Vector{1.0}) == doctest::Approx(1.0).epsilon(0.01));
  const GridFunction odd = make_function("odd-bump:2:1", g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(odd[i] == -odd[g.size() - 1 - i]);
  CHECK(make_function("zero", g).sup_norm() == 0.0);

  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  const std::string path = (dir / "f.csv").string();
  bump.save_csv(path);
  CHECK(make_function("csv:" + path, g).values() == bump.values());
  CHECK_THROWS_AS(make_function("csv:" + path, GridGeometry(Box::symmetric(1, 4.0), 32)), ConfigError);
  CHECK_THROWS_AS(make_function("wave:1", g), ConfigError);
  CHECK_THROWS_AS(make_function("indicator:1", g), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("named multipliers") {
  const Vector x{0.5};
  CHECK(named_multiplier("0")(x) == 0.0);
  CHECK(named_multiplier("1")(x) == 1.0);
  CHECK(named_multiplier("sin")(x) == std::sin(0.5));
  CHECK(named_multiplier("cos")(x) == std::cos(0.5));
  CHECK(named_multiplier("x")(x) == 0.5);
  CHECK(named_multiplier("-2.5")(x) == -2.5);
  CHECK_THROWS_AS(named_multiplier("tan"), ConfigError);
}

TEST_CASE("registry") {
  const auto two = find_curve("two-lines");
  REQUIRE(two);
  CHECK(two->branch_count() == 2);
  CHECK(two->exceptional_points().size() == 1);
  CHECK(find_curve("diamond")->branch_count() == 5);
  CHECK(find_curve("nonexistent") == nullptr);
  CHECK(find_kernel("hilbert").has_value());
  CHECK_FALSE(find_kernel("nonexistent").has_value());
}

TEST_CASE("metric equivalence run") {
  const fs::path out = scratch("equivalence");
  const RunResult r = run("metric-equivalence", out.string(), {"curve=two-lines", "samples=10000", "seed=7"});
  CHECK(r.exit_code == 0);
  const auto rows = csv_rows(out / "equivalence.csv");
  REQUIRE(rows.size() >= 2);
  CHECK(std::stod(rows[1][1]) <= 4.0 + 1e-6);
  CHECK(std::stod(rows[1][2]) <= 4.0 + 1e-6);
  CHECK(fs::exists(out / "manifest.txt"));
  fs::remove_all(out);
}

TEST_CASE("recover run") {
  const fs::path out = scratch("recover");
  const RunResult r = run("recover", out.string(), {"curve=two-lines", "b=1,sin", "n=256", "max_depth=6"});
  CHECK(r.exit_code == 0);
  const auto rows = csv_rows(out / "recover_summary.csv");
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][3]) <= std::stod(rows[i][4]));
  fs::remove_all(out);
}

TEST_CASE("configuration errors exit with 2") {
  const fs::path out = scratch("errors");
  const RunResult k = run("apply", out.string(), {"kernel=nonexistent"});
  CHECK(k.exit_code == 2);
  const RunResult c = run("metric", out.string(), {"curve=nonexistent"});
  CHECK(c.exit_code == 2);
  CHECK(c.message.find("nonexistent") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("manifest") {
  const fs::path out = scratch("manifest");
  const RunResult r = run("metric", out.string(), {"samples=20"});
  CHECK(r.exit_code == 0);
  std::ifstream in(out / "manifest.txt");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (const char* key : {"kind=metric", "seed=7", "exit_code=0", "version=", "wall_time_s=", "config.curve="})
    CHECK(text.find(key) != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("results do not depend on the thread count") {
  const fs::path a = scratch("threads_a");
  const fs::path b = scratch("threads_b");
  const std::vector<std::string> common{"n=128", "box=-4..4", "epsilon=0.5,0.25"};
  auto with = [&](const char* threads) {
    auto v = common;
    v.push_back(threads);
    return v;
  };
  REQUIRE(run("apply", a.string(), with("threads=1")).exit_code == 0);
  REQUIRE(run("apply", b.string(), with("threads=3")).exit_code == 0);
  CHECK(csv_body(a / "apply.csv") == csv_body(b / "apply.csv"));
  CHECK(csv_body(a / "convergence.csv") == csv_body(b / "convergence.csv"));

  REQUIRE(run("metric", a.string(), {"samples=200", "threads=1"}).exit_code == 0);
  REQUIRE(run("metric", b.string(), {"samples=200", "threads=2"}).exit_code == 0);
  CHECK(csv_body(a / "metric.csv") == csv_body(b / "metric.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("command line") {
  const fs::path out = scratch("cli");
  CHECK(cli("--version") == 0);
  CHECK(cli("keys") == 0);
  CHECK(cli("list") == 0);
  CHECK(cli("metric samples=20 --out " + out.string()) == 0);
  CHECK(cli("apply kernel=nonexistent --out " + out.string()) == 2);
  CHECK(cli("apply bogus=1 --out " + out.string()) == 2);
  CHECK(cli("nonexistent-kind") == 2);
  fs::remove_all(out);
}
