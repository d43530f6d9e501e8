#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace chaos {

inline constexpr std::size_t kDefaultCellBudget = 50'000'000;
inline constexpr int kMaxArity = 4;

enum class NamedForm { One, SumCoords, ProductCoords, ExpNegSum };

// Half-open interval (a, b].
struct Interval {
  double a = 0.0;
  double b = 0.0;
  double length() const { return b - a; }
};

// coeff * indicator of rect[0] x ... x rect[n-1].
struct StepTerm {
  double coeff = 0.0;
  std::vector<Interval> rect;
};

struct StepRectangles {
  std::vector<StepTerm> terms;
};

// One-dimensional cell-constant function on [0, T]: cell j covers
// ((j) T/m, (j+1) T/m] for j = 0..m-1 (0 maps to the first cell).
struct GridFactor {
  int m = 1;
  std::vector<double> values;
};

// Product of n one-dimensional grid factors, all on the same cell count.
struct TensorProduct {
  std::vector<GridFactor> factors;
};

// Cell-constant function on the uniform m^n grid, row-major values.
struct UniformGrid {
  int m = 1;
  std::vector<double> values;
};

struct NamedClosedForm {
  NamedForm name = NamedForm::One;
};

// Square-integrable integrand on [0, T]^n in one of four concrete
// representations. Immutable after construction.
class TestFunction {
 public:
  using Body = std::variant<StepRectangles, TensorProduct, UniformGrid, NamedClosedForm>;

  TestFunction(int arity, double horizon, Body body);

  static TestFunction named(NamedForm name, int arity, double horizon);
  static TestFunction steps(std::vector<StepTerm> terms, int arity, double horizon);
  static TestFunction grid(int m, std::vector<double> values, int arity, double horizon);
  static TestFunction tensor(std::vector<GridFactor> factors, double horizon);

  int arity() const { return arity_; }
  double horizon() const { return horizon_; }
  const Body& body() const { return body_; }

  // True for step bodies whose every term has pairwise-disjoint closed
  // intervals; such functions admit the exact product-of-increments law.
  bool is_elementary() const;

  bool is_symmetric() const;

 private:
  int arity_;
  double horizon_;
  Body body_;
};

// Pointwise value; half-open membership for rectangles and grid cells.
double evaluate(const TestFunction& f, std::span<const double> point);

// Average of f over all coordinate permutations. Exact for every body kind
// (tensor products are materialized on their grid first).
TestFunction symmetrize(const TestFunction& f);

// Integral of f^2 over [0, t]^n (t defaults to the horizon). Exact for all
// body kinds.
double l2_norm_sq(const TestFunction& f, std::optional<double> up_to = std::nullopt);

// Midpoint-rule projection onto the uniform m^n grid; exact when f is
// cell-constant on a grid that m refines. Guards m^n against the budget.
TestFunction to_uniform_grid(const TestFunction& f, int m,
                             std::size_t cell_budget = kDefaultCellBudget);

// f restricted to [0,t]^2 minus f restricted to [0,s]^2 (arity 2 only).
struct IncrementFunction {
  const TestFunction* base;
  double s;
  double t;
  double operator()(double x, double y) const;
};

// Integral over [0,T]^2 of the squared increment function; equals
// l2_norm_sq(f, t) - l2_norm_sq(f, s) because the restriction sets nest.
double increment_l2(const TestFunction& f, double s, double t);

// CSV exchange format for uniform grids: a literal "n,m,T" header line,
// one "n,m,T" value line, then the row-major cell values one per line.
void write_grid_csv(const TestFunction& f, const std::string& path);
TestFunction read_grid_csv(const std::string& path);

}  // namespace chaos
