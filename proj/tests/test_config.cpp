#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "gpc/config.hpp"
#include "gpc/output.hpp"
#include "gpc/scenarios.hpp"

using namespace gpc;
using nlohmann::json;

namespace {

json small_doc() {
  return json::parse(R"({
    "grid": {"half_width": 10, "points": 64},
    "time": {"horizon": 2, "steps": 40},
    "lambda": 3,
    "trap": {"kind": "harmonic", "strength": 30, "scale": 10},
    "control_potential": {"kind": "linear-offset", "offset": 0.3, "slope": 0.015},
    "observable": {"kind": "multiplication",
                   "profile": {"kind": "two-bump-complement", "centers": [-2.5, 2.5], "width": 2}},
    "gamma1": 1e-5,
    "gamma2": 1e-4,
    "optimizer": {"method": "newton", "max_iterations": 3}
  })");
}

bool mentions(const ConfigError& e, const std::string& needle) {
  return std::any_of(e.problems().begin(), e.problems().end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gpc_test_config_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("a complete document parses and builds") {
  const RunConfig c = parse_config(small_doc(), "/base");
  CHECK(c.points == 64);
  CHECK(c.steps == 40);
  CHECK(c.lambda == 3);
  CHECK(c.optimizer == OptimizerKind::newton);
  CHECK(c.settings.max_iterations == 3);
  CHECK(c.output.directory == std::filesystem::path("/base/out"));
  const ProblemSpec<double> s = build_problem(c);
  CHECK(s.time.dt() == doctest::Approx(0.05));
  const auto& x = s.grid->nodes();
  for (Eigen::Index i = 0; i < 64; ++i) {
    CHECK(s.control[i] == doctest::Approx(0.3 + 0.015 * x[i]));
    CHECK(s.trap[i] == doctest::Approx(30 * (x[i] / 10) * (x[i] / 10)));
  }
  CHECK(mass(*s.grid, s.psi0) == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("gradient method raises the default iteration budget") {
  json doc = small_doc();
  doc["optimizer"] = {{"method", "gradient"}};
  CHECK(parse_config(doc).settings.max_iterations == 20000);
}

TEST_CASE("to_json round trips") {
  const RunConfig c = parse_config(small_doc());
  json doc = to_json(c);
  const RunConfig again = parse_config(doc);
  CHECK(to_json(again) == doc);
}

TEST_CASE("errors name the offending path") {
  SUBCASE("unknown keys at several depths are all reported") {
    json doc = small_doc();
    doc["colour"] = 1;
    doc["grid"]["spacing"] = 0.1;
    doc["trap"]["width"] = 2;
    try {
      parse_config(doc);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.problems().size() >= 3);
      CHECK(mentions(e, "/colour"));
      CHECK(mentions(e, "/grid/spacing"));
      CHECK(mentions(e, "/trap/width"));
    }
  }
  SUBCASE("missing required sections") {
    json doc = small_doc();
    doc.erase("gamma2");
    doc.erase("observable");
    try {
      parse_config(doc);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(mentions(e, "gamma2"));
      CHECK(mentions(e, "observable"));
    }
  }
  SUBCASE("bad values") {
    json doc = small_doc();
    doc["optimizer"]["method"] = "bfgs";
    doc["optimizer"]["armijo_mu"] = 2;
    doc["time"]["steps"] = "many";
    try {
      parse_config(doc);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(mentions(e, "/optimizer/method"));
      CHECK(mentions(e, "/optimizer/armijo_mu"));
      CHECK(mentions(e, "/time/steps"));
    }
  }
  SUBCASE("invalid physics surfaces as a configuration error") {
    json doc = small_doc();
    doc["grid"]["points"] = 63;
    CHECK_THROWS_AS(build_problem(parse_config(doc)), ConfigError);
  }
}

TEST_CASE("table potentials interpolate linearly") {
  const SpatialGrid<double> grid(4, 8);  // nodes -4, -3, ..., 3
  PotentialSpec p;
  p.kind = "table";
  p.table_x = {-4, 0, 4};
  p.table_values = {2, 0, 1};
  const RealVector<double> v = sample_potential(p, grid);
  CHECK(v[0] == doctest::Approx(2));
  CHECK(v[2] == doctest::Approx(1));
  CHECK(v[4] == doctest::Approx(0));
  CHECK(v[7] == doctest::Approx(0.75));
}

TEST_CASE("control CSV") {
  const auto dir = scratch("csv");
  const TimeGrid<double> time(2, 40);
  Control<double> a(time, 0.0);
  for (Eigen::Index m = 0; m <= 40; ++m) a.values[m] = std::sin(1.7 * time.node(m)) / 3;

  SUBCASE("round trip through the writer is exact") {
    write_atomically(dir / "control.csv", control_csv(a));
    const Control<double> b = read_control_csv(dir / "control.csv", time);
    CHECK((b.values - a.values).cwiseAbs().maxCoeff() == 0);
  }
  SUBCASE("mismatched times are rejected") {
    write_atomically(dir / "control.csv", control_csv(a));
    CHECK_THROWS_AS(read_control_csv(dir / "control.csv", TimeGrid<double>(2, 20)), ConfigError);
    CHECK_THROWS_AS(read_control_csv(dir / "missing.csv", time), ConfigError);
  }
  SUBCASE("initial_control is resolved against the config directory") {
    write_atomically(dir / "start.csv", control_csv(a));
    json doc = small_doc();
    doc["initial_control"] = {{"csv", "start.csv"}};
    std::ofstream(dir / "run.json") << doc.dump(2);
    const RunConfig c = load_config(dir / "run.json");
    REQUIRE(c.initial_control_csv);
    CHECK(*c.initial_control_csv == dir / "start.csv");
    const ProblemSpec<double> s = build_problem(c);
    CHECK((initial_control(c, s).values - a.values).norm() == 0);
  }
}

TEST_CASE("built-in scenarios") {
  CHECK(builtin_names().size() == 6);
  CHECK_THROWS_AS(builtin("split-linear-g3"), UnknownScenario);
  const Scenario shift = builtin("shift-linear");
  CHECK(shift.config.optimizer == OptimizerKind::gradient);
  CHECK(shift.config.gamma2 == 1e-6);
  const ProblemSpec<double> s = build_problem(shift.config);
  CHECK(s.control[128] == doctest::Approx(0.3));  // x = 0
  const auto& A = std::get<MultiplicationObservable<double>>(s.observable).profile;
  CHECK(A.minCoeff() >= 0);
  CHECK(A.maxCoeff() < 1);
  CHECK(std::abs(A[96]) < 1e-15);  // x = -5
  const Scenario bec = builtin("split-bec-g2");
  CHECK(bec.config.lambda == 8);
  CHECK(bec.config.gamma1 == 0);
  CHECK(bec.config.gamma2 == 1.5e-6);
  CHECK(bec.warm_start == std::optional<std::string>("split-linear-g2"));
  CHECK(builtin("split-attractive").config.lambda == -1);
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const Scenario sc = builtin(name);
    CHECK_NOTHROW(build_problem(sc.config));
    CHECK(sc.config.output.directory == std::filesystem::path("out") / name);
  }
}
