#include "chaos_approx/plan.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "chaos_approx/errors.hpp"
#include "chaos_approx/json_out.hpp"

namespace chaos {

using nlohmann::json;

namespace {

const std::set<std::string> kPlanKeys = {
    "kernel", "xi",     "epsilons", "n",      "T",           "times",
    "time_pairs", "f",  "fs",       "tests",  "count",       "grid_m",
    "seed",   "rule",   "cell_budget", "reference_h", "out", "dump_samples"};

const std::set<std::string> kTestNames = {"bounds", "fdd", "vector", "tightness", "covariance"};

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ValidationError("plan field '" + field + "': " + why);
}

double as_double(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

FunctionSpec parse_function(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object with a 'type' key");
  for (const auto& [key, _] : j.items())
    if (key != "type" && key != "name" && key != "terms" && key != "path")
      fail(field, "unknown key '" + key + "'");
  FunctionSpec spec;
  const std::string type = j.value("type", "named");
  if (type == "named") {
    spec.type = FunctionSpec::Type::Named;
    const std::string name = j.value("name", "one");
    if (name == "one")
      spec.name = NamedForm::One;
    else if (name == "sum_coords")
      spec.name = NamedForm::SumCoords;
    else if (name == "product_coords")
      spec.name = NamedForm::ProductCoords;
    else if (name == "exp_neg_sum")
      spec.name = NamedForm::ExpNegSum;
    else
      fail(field, "unknown named form '" + name + "'");
  } else if (type == "step") {
    spec.type = FunctionSpec::Type::Step;
    if (!j.contains("terms") || !j["terms"].is_array()) fail(field, "step needs a 'terms' array");
    for (const auto& jt : j["terms"]) {
      StepTerm term;
      if (!jt.is_object() || !jt.contains("coeff") || !jt.contains("rect"))
        fail(field, "each step term needs 'coeff' and 'rect'");
      term.coeff = as_double(jt["coeff"], field + ".coeff");
      for (const auto& iv : jt["rect"]) {
        if (!iv.is_array() || iv.size() != 2) fail(field, "rect entries are [a, b] pairs");
        term.rect.push_back({as_double(iv[0], field), as_double(iv[1], field)});
      }
      spec.terms.push_back(std::move(term));
    }
  } else if (type == "grid") {
    spec.type = FunctionSpec::Type::GridFile;
    if (!j.contains("path") || !j["path"].is_string()) fail(field, "grid needs a 'path' string");
    spec.grid_path = j["path"].get<std::string>();
  } else {
    fail(field, "unknown integrand type '" + type + "'");
  }
  return spec;
}

}  // namespace

TestFunction FunctionSpec::build(int arity, double horizon) const {
  switch (type) {
    case Type::Named:
      return TestFunction::named(name, arity, horizon);
    case Type::Step:
      return TestFunction::steps(terms, arity, horizon);
    case Type::GridFile: {
      std::ifstream probe(grid_path);
      if (!probe)
        throw ValidationError("plan integrand grid file does not exist: " + grid_path);
      TestFunction g = read_grid_csv(grid_path);
      if (g.arity() != arity)
        throw ValidationError("grid file arity does not match plan n: " + grid_path);
      return g;
    }
  }
  throw ValidationError("unreachable integrand type");
}

QuadratureConfig ExperimentPlan::quadrature(int arity) const {
  QuadratureConfig cfg;
  cfg.grid_m = grid_m;
  cfg.cell_budget = cell_budget;
  if (diagonal_rule == "cell_center")
    cfg.diagonal_rule = DiagonalRule::CellCenter;
  else if (diagonal_rule == "exact_geometry_n2")
    cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;
  else
    cfg.diagonal_rule = arity == 2 ? DiagonalRule::ExactGeometryN2 : DiagonalRule::CellCenter;
  return cfg;
}

ExperimentPlan parse_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open plan file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_plan_text(buffer.str());
}

ExperimentPlan parse_plan_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("plan is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("plan must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (kPlanKeys.find(key) == kPlanKeys.end())
      throw ValidationError("plan contains unknown key '" + key + "'");

  ExperimentPlan plan;

  if (j.contains("kernel")) {
    const std::string k = j["kernel"].get<std::string>();
    if (k == "donsker")
      plan.kernel = KernelKind::Donsker;
    else if (k == "kac_stroock")
      plan.kernel = KernelKind::KacStroock;
    else
      fail("kernel", "expected 'donsker' or 'kac_stroock'");
  }
  if (j.contains("xi")) {
    const std::string x = j["xi"].get<std::string>();
    if (x == "rademacher")
      plan.xi = XiKind::Rademacher;
    else if (x == "gaussian")
      plan.xi = XiKind::StandardGaussian;
    else if (x == "uniform")
      plan.xi = XiKind::CenteredUniform;
    else
      fail("xi", "expected 'rademacher', 'gaussian' or 'uniform'");
  }
  if (j.contains("n")) {
    if (!j["n"].is_number_integer()) fail("n", "expected an integer");
    plan.n = j["n"].get<int>();
    if (plan.n < 1 || plan.n > kMaxArity) fail("n", "must be in 1..4");
  }
  if (j.contains("T")) {
    plan.T = as_double(j["T"], "T");
    if (!(plan.T > 0.0)) fail("T", "must be positive");
  }
  plan.times = {plan.T};
  plan.time_pairs = {{0.0, plan.T / 2}, {plan.T / 4, 3 * plan.T / 4}, {plan.T / 2, plan.T}};
  plan.reference_h = 1e-4 * plan.T;

  if (j.contains("epsilons")) {
    plan.epsilons.clear();
    for (const auto& e : j["epsilons"]) plan.epsilons.push_back(as_double(e, "epsilons"));
  }
  if (plan.epsilons.empty()) fail("epsilons", "must not be empty");
  for (double e : plan.epsilons)
    if (!(e > 0.0) || !(e < 1.0)) fail("epsilons", "every entry must lie in (0,1)");
  for (std::size_t i = 0; i + 1 < plan.epsilons.size(); ++i)
    if (!(plan.epsilons[i] > plan.epsilons[i + 1]))
      fail("epsilons", "must be strictly decreasing");

  if (j.contains("times")) {
    plan.times.clear();
    for (const auto& t : j["times"]) plan.times.push_back(as_double(t, "times"));
    if (plan.times.empty()) fail("times", "must not be empty");
  }
  for (double t : plan.times)
    if (t < 0.0 || t > plan.T) fail("times", "entries must lie in [0, T]");

  if (j.contains("time_pairs")) {
    plan.time_pairs.clear();
    for (const auto& p : j["time_pairs"]) {
      if (!p.is_array() || p.size() != 2) fail("time_pairs", "entries are [s, t] pairs");
      plan.time_pairs.emplace_back(as_double(p[0], "time_pairs"), as_double(p[1], "time_pairs"));
    }
  }
  for (const auto& [s, t] : plan.time_pairs) {
    if (s < 0.0 || t > plan.T) fail("time_pairs", "entries must lie in [0, T]");
    if (s > t) fail("time_pairs", "pairs must satisfy s <= t");
  }

  if (j.contains("f")) plan.f = parse_function(j["f"], "f");
  if (j.contains("fs")) {
    if (!j["fs"].is_array()) fail("fs", "expected an array of integrand descriptors");
    for (const auto& jf : j["fs"]) plan.fs.push_back(parse_function(jf, "fs"));
  }
  if (j.contains("tests")) {
    plan.tests.clear();
    for (const auto& t : j["tests"]) {
      const std::string name = t.get<std::string>();
      if (kTestNames.find(name) == kTestNames.end()) fail("tests", "unknown test '" + name + "'");
      plan.tests.push_back(name);
    }
  }
  if (j.contains("count")) {
    if (!j["count"].is_number_integer()) fail("count", "expected an integer");
    plan.count = j["count"].get<int>();
    if (plan.count < 2) fail("count", "must be >= 2");
  }
  if (j.contains("grid_m")) {
    if (!j["grid_m"].is_number_integer()) fail("grid_m", "expected an integer");
    plan.grid_m = j["grid_m"].get<int>();
    if (plan.grid_m < 1) fail("grid_m", "must be >= 1");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      fail("seed", "expected a nonnegative integer");
    plan.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("cell_budget")) {
    if (!j["cell_budget"].is_number_unsigned() && !j["cell_budget"].is_number_integer())
      fail("cell_budget", "expected a nonnegative integer");
    plan.cell_budget = j["cell_budget"].get<std::size_t>();
    if (plan.cell_budget < 1) fail("cell_budget", "must be >= 1");
  }
  if (j.contains("rule")) {
    plan.diagonal_rule = j["rule"].get<std::string>();
    if (plan.diagonal_rule != "auto" && plan.diagonal_rule != "cell_center" &&
        plan.diagonal_rule != "exact_geometry_n2")
      fail("rule", "expected 'auto', 'cell_center' or 'exact_geometry_n2'");
    if (plan.diagonal_rule == "exact_geometry_n2" && plan.n != 2)
      fail("rule", "exact_geometry_n2 requires n = 2");
  }
  if (j.contains("reference_h")) {
    plan.reference_h = as_double(j["reference_h"], "reference_h");
    if (!(plan.reference_h > 0.0) || plan.reference_h > plan.T)
      fail("reference_h", "must lie in (0, T]");
  }
  if (j.contains("out")) plan.out = j["out"].get<std::string>();
  if (j.contains("dump_samples")) plan.dump_samples = j["dump_samples"].get<std::string>();

  // validate integrand construction (grid files must exist and parse)
  plan.build_f();
  for (const auto& spec : plan.fs) spec.build(plan.n, plan.T);
  return plan;
}

namespace {

JsonOut function_to_json(const FunctionSpec& spec) {
  JsonOut j = JsonOut::object();
  switch (spec.type) {
    case FunctionSpec::Type::Named: {
      j.set("type", JsonOut::string("named"));
      const char* name = "one";
      if (spec.name == NamedForm::SumCoords) name = "sum_coords";
      if (spec.name == NamedForm::ProductCoords) name = "product_coords";
      if (spec.name == NamedForm::ExpNegSum) name = "exp_neg_sum";
      j.set("name", JsonOut::string(name));
      break;
    }
    case FunctionSpec::Type::Step: {
      j.set("type", JsonOut::string("step"));
      JsonOut terms = JsonOut::array();
      for (const auto& term : spec.terms) {
        JsonOut jt = JsonOut::object();
        jt.set("coeff", JsonOut::number(term.coeff));
        JsonOut rect = JsonOut::array();
        for (const auto& iv : term.rect) {
          JsonOut pair = JsonOut::array();
          pair.push(JsonOut::number(iv.a)).push(JsonOut::number(iv.b));
          rect.push(std::move(pair));
        }
        jt.set("rect", std::move(rect));
        terms.push(std::move(jt));
      }
      j.set("terms", std::move(terms));
      break;
    }
    case FunctionSpec::Type::GridFile:
      j.set("type", JsonOut::string("grid"));
      j.set("path", JsonOut::string(spec.grid_path));
      break;
  }
  return j;
}

}  // namespace

const char* kernel_name(KernelKind kind) {
  return kind == KernelKind::Donsker ? "donsker" : "kac_stroock";
}

const char* xi_name(XiKind kind) {
  switch (kind) {
    case XiKind::Rademacher:
      return "rademacher";
    case XiKind::StandardGaussian:
      return "gaussian";
    case XiKind::CenteredUniform:
      return "uniform";
  }
  return "?";
}

std::string serialize_plan(const ExperimentPlan& plan, int indent) {
  return plan_to_json(plan).dump(indent);
}

JsonOut plan_to_json(const ExperimentPlan& plan) {
  JsonOut j = JsonOut::object();
  j.set("kernel", JsonOut::string(kernel_name(plan.kernel)));
  j.set("xi", JsonOut::string(xi_name(plan.xi)));
  JsonOut eps = JsonOut::array();
  for (double e : plan.epsilons) eps.push(JsonOut::number(e));
  j.set("epsilons", std::move(eps));
  j.set("n", JsonOut::integer(plan.n));
  j.set("T", JsonOut::number(plan.T));
  JsonOut times = JsonOut::array();
  for (double t : plan.times) times.push(JsonOut::number(t));
  j.set("times", std::move(times));
  JsonOut pairs = JsonOut::array();
  for (const auto& [s, t] : plan.time_pairs) {
    JsonOut p = JsonOut::array();
    p.push(JsonOut::number(s)).push(JsonOut::number(t));
    pairs.push(std::move(p));
  }
  j.set("time_pairs", std::move(pairs));
  j.set("f", function_to_json(plan.f));
  if (!plan.fs.empty()) {
    JsonOut fs = JsonOut::array();
    for (const auto& spec : plan.fs) fs.push(function_to_json(spec));
    j.set("fs", std::move(fs));
  }
  JsonOut tests = JsonOut::array();
  for (const auto& t : plan.tests) tests.push(JsonOut::string(t));
  j.set("tests", std::move(tests));
  j.set("count", JsonOut::integer(plan.count));
  j.set("grid_m", JsonOut::integer(plan.grid_m));
  j.set("seed", JsonOut::unsigned_integer(plan.seed));
  j.set("cell_budget", JsonOut::unsigned_integer(plan.cell_budget));
  j.set("rule", JsonOut::string(plan.diagonal_rule));
  j.set("reference_h", JsonOut::number(plan.reference_h));
  j.set("out", JsonOut::string(plan.out));
  j.set("dump_samples", JsonOut::string(plan.dump_samples));
  return j;
}

}  // namespace chaos
