#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "chaos_approx/errors.hpp"
#include "chaos_approx/plan.hpp"
#include "chaos_approx/testfunctions.hpp"

using namespace chaos;

TEST_CASE("minimal plan fills documented defaults") {
  const ExperimentPlan p =
      parse_plan_text(R"({"kernel": "donsker", "f": {"type": "named", "name": "one"}, "n": 2})");
  CHECK(p.kernel == KernelKind::Donsker);
  CHECK(p.xi == XiKind::Rademacher);
  CHECK(p.T == 1.0);
  CHECK(p.epsilons == std::vector<double>{0.5, 0.3, 0.2, 0.1});
  CHECK(p.count == 5000);
  CHECK(p.seed == 0);
  CHECK(p.grid_m == 32);
  CHECK(p.times == std::vector<double>{1.0});
  CHECK(p.diagonal_rule == "auto");
  CHECK(p.tests == std::vector<std::string>{"bounds"});
}

TEST_CASE("plan validation errors name the field") {
  CHECK_THROWS_WITH_AS(parse_plan_text(R"({"epsilons": [0.3, 0.5]})"),
                       doctest::Contains("epsilons"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_plan_text(R"({"epsilons": [1.5, 0.5]})"),
                       doctest::Contains("epsilons"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_plan_text(R"({"count": 1})"), doctest::Contains("count"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse_plan_text(R"({"times": [2.5]})"), doctest::Contains("times"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse_plan_text(R"({"tests": ["nonsense"]})"), doctest::Contains("tests"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse_plan_text(R"({"mystery_key": 1})"),
                       doctest::Contains("mystery_key"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_plan_text(R"({"n": 3, "rule": "exact_geometry_n2"})"),
                       doctest::Contains("rule"), ValidationError);
  CHECK_THROWS_AS(parse_plan_text("not json at all"), ValidationError);
  // referenced grid file must exist; the message carries the path
  CHECK_THROWS_WITH_AS(
      parse_plan_text(R"({"f": {"type": "grid", "path": "missing_grid_file.csv"}})"),
      doctest::Contains("missing_grid_file.csv"), ValidationError);
}

TEST_CASE("plan round trip is the identity on every field") {
  const std::string text = R"({
    "kernel": "kac_stroock",
    "xi": "gaussian",
    "epsilons": [0.4, 0.2, 0.05],
    "n": 2,
    "T": 2.0,
    "times": [0.5, 2.0],
    "time_pairs": [[0.0, 1.0], [1.0, 2.0]],
    "f": {"type": "step", "terms": [{"coeff": 1.5, "rect": [[0.0, 0.5], [1.0, 1.5]]}]},
    "tests": ["bounds", "tightness"],
    "count": 123,
    "grid_m": 16,
    "seed": 777,
    "cell_budget": 1000000,
    "rule": "cell_center",
    "reference_h": 0.001,
    "out": "r.json",
    "dump_samples": ""
  })";
  const ExperimentPlan p = parse_plan_text(text);
  const std::string serialized = serialize_plan(p);
  const ExperimentPlan q = parse_plan_text(serialized);
  CHECK(serialize_plan(q) == serialized);
  CHECK(q.kernel == p.kernel);
  CHECK(q.xi == p.xi);
  CHECK(q.epsilons == p.epsilons);
  CHECK(q.T == p.T);
  CHECK(q.times == p.times);
  CHECK(q.time_pairs == p.time_pairs);
  CHECK(q.tests == p.tests);
  CHECK(q.count == p.count);
  CHECK(q.grid_m == p.grid_m);
  CHECK(q.seed == p.seed);
  CHECK(q.cell_budget == p.cell_budget);
  CHECK(q.diagonal_rule == p.diagonal_rule);
  CHECK(q.reference_h == p.reference_h);
  CHECK(q.out == p.out);
  CHECK(q.f.type == p.f.type);
  REQUIRE(q.f.terms.size() == 1);
  CHECK(q.f.terms[0].coeff == 1.5);
}

TEST_CASE("grid integrand loads through the csv file") {
  const TestFunction g = TestFunction::grid(2, {1.0, 2.0, 2.0, 1.0}, 2, 1.0);
  write_grid_csv(g, "plan_grid_fixture.csv");
  const ExperimentPlan p =
      parse_plan_text(R"({"f": {"type": "grid", "path": "plan_grid_fixture.csv"}, "n": 2})");
  const TestFunction built = p.build_f();
  CHECK(std::get<UniformGrid>(built.body()).values == std::vector<double>{1.0, 2.0, 2.0, 1.0});
  std::remove("plan_grid_fixture.csv");
}

TEST_CASE("quadrature rule resolution") {
  ExperimentPlan p;
  p.diagonal_rule = "auto";
  CHECK(p.quadrature(2).diagonal_rule == DiagonalRule::ExactGeometryN2);
  CHECK(p.quadrature(3).diagonal_rule == DiagonalRule::CellCenter);
  p.diagonal_rule = "cell_center";
  CHECK(p.quadrature(2).diagonal_rule == DiagonalRule::CellCenter);
  p.diagonal_rule = "exact_geometry_n2";
  CHECK(p.quadrature(2).diagonal_rule == DiagonalRule::ExactGeometryN2);
}

TEST_CASE("empty test list yields a config-echo-only report") {
  const ExperimentPlan p = parse_plan_text(R"({"tests": [], "count": 10})");
  CHECK(p.tests.empty());
}
