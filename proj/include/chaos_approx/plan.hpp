#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chaos_approx/json_out.hpp"
#include "chaos_approx/kernels.hpp"
#include "chaos_approx/offdiag.hpp"
#include "chaos_approx/testfunctions.hpp"

namespace chaos {

// Declarative integrand descriptor as written in plan files; kept verbatim
// so a parsed plan re-serializes to the same canonical text.
struct FunctionSpec {
  enum class Type { Named, Step, GridFile };
  Type type = Type::Named;
  NamedForm name = NamedForm::One;     // Named
  std::vector<StepTerm> terms;         // Step
  std::string grid_path;               // GridFile

  TestFunction build(int arity, double horizon) const;
};

// A fully-validated experiment description with all defaults filled in.
struct ExperimentPlan {
  KernelKind kernel = KernelKind::Donsker;
  XiKind xi = XiKind::Rademacher;
  std::vector<double> epsilons{0.5, 0.3, 0.2, 0.1};
  int n = 2;
  double T = 1.0;
  std::vector<double> times{1.0};
  std::vector<std::pair<double, double>> time_pairs{{0.0, 0.5}, {0.25, 0.75}, {0.5, 1.0}};
  FunctionSpec f;
  std::vector<FunctionSpec> fs;  // vector-test components; defaults to {f}
  std::vector<std::string> tests{"bounds"};
  int count = 5000;
  int grid_m = 32;
  std::uint64_t seed = 0;
  std::size_t cell_budget = kDefaultCellBudget;
  std::string diagonal_rule = "auto";  // auto | cell_center | exact_geometry_n2
  double reference_h = 1e-4;
  std::string out;           // report path; empty means stdout
  std::string dump_samples;  // CSV base path for `simulate`

  QuadratureConfig quadrature(int arity) const;
  TestFunction build_f() const { return f.build(n, T); }
};

ExperimentPlan parse_plan(const std::string& path);
ExperimentPlan parse_plan_text(const std::string& json_text);

// Canonical ordered serialization; parse(serialize(p)) == p field by field.
std::string serialize_plan(const ExperimentPlan& plan, int indent = 2);
JsonOut plan_to_json(const ExperimentPlan& plan);

const char* kernel_name(KernelKind kind);
const char* xi_name(XiKind kind);

}  // namespace chaos
