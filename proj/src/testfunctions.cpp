#include "chaos_approx/testfunctions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "chaos_approx/errors.hpp"

namespace chaos {

namespace {

std::size_t checked_pow(std::size_t base, int exp, std::size_t limit) {
  std::size_t v = 1;
  for (int i = 0; i < exp; ++i) {
    if (v > limit / std::max<std::size_t>(base, 1)) return limit + 1;
    v *= base;
  }
  return v;
}

int grid_cell_index(double x, int m, double T) {
  // half-open cells (j T/m, (j+1) T/m]; boundary points snap to the lower cell
  const double v = x * static_cast<double>(m) / T;
  int j = static_cast<int>(std::ceil(v - 1e-9)) - 1;
  if (j < 0) j = 0;
  if (j >= m) j = m - 1;
  return j;
}

void decode_index(std::size_t flat, int n, int m, int* digits) {
  for (int axis = n - 1; axis >= 0; --axis) {
    digits[axis] = static_cast<int>(flat % static_cast<std::size_t>(m));
    flat /= static_cast<std::size_t>(m);
  }
}

std::size_t encode_index(const int* digits, int n, int m) {
  std::size_t flat = 0;
  for (int axis = 0; axis < n; ++axis)
    flat = flat * static_cast<std::size_t>(m) + static_cast<std::size_t>(digits[axis]);
  return flat;
}

std::vector<std::vector<int>> permutations_of(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

}  // namespace

TestFunction::TestFunction(int arity, double horizon, Body body)
    : arity_(arity), horizon_(horizon), body_(std::move(body)) {
  if (arity_ < 1 || arity_ > kMaxArity)
    throw ValidationError("integrand arity must be in 1.." + std::to_string(kMaxArity));
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
    throw ValidationError("integrand horizon must be positive");
  if (const auto* s = std::get_if<StepRectangles>(&body_)) {
    for (const auto& term : s->terms) {
      if (!std::isfinite(term.coeff)) throw ValidationError("step coefficient must be finite");
      if (static_cast<int>(term.rect.size()) != arity_)
        throw ValidationError("step term must have one interval per coordinate");
      for (const auto& iv : term.rect) {
        if (!(iv.a >= 0.0) || !(iv.b <= horizon_) || !(iv.a < iv.b))
          throw ValidationError("step interval must satisfy 0 <= a < b <= horizon");
      }
    }
  } else if (const auto* tp = std::get_if<TensorProduct>(&body_)) {
    if (static_cast<int>(tp->factors.size()) != arity_)
      throw ValidationError("tensor product needs one factor per coordinate");
    for (const auto& g : tp->factors) {
      if (g.m < 1 || g.m != tp->factors.front().m)
        throw ValidationError("tensor factors must share one positive cell count");
      if (static_cast<int>(g.values.size()) != g.m)
        throw ValidationError("tensor factor values must match its cell count");
      for (double v : g.values)
        if (!std::isfinite(v)) throw ValidationError("tensor factor values must be finite");
    }
  } else if (const auto* ug = std::get_if<UniformGrid>(&body_)) {
    if (ug->m < 1) throw ValidationError("grid cell count must be >= 1");
    const std::size_t want = checked_pow(static_cast<std::size_t>(ug->m), arity_, SIZE_MAX / 2);
    if (ug->values.size() != want)
      throw ValidationError("grid values must have m^n entries");
    for (double v : ug->values)
      if (!std::isfinite(v)) throw ValidationError("grid values must be finite");
  }
}

TestFunction TestFunction::named(NamedForm name, int arity, double horizon) {
  return TestFunction(arity, horizon, NamedClosedForm{name});
}

TestFunction TestFunction::steps(std::vector<StepTerm> terms, int arity, double horizon) {
  return TestFunction(arity, horizon, StepRectangles{std::move(terms)});
}

TestFunction TestFunction::grid(int m, std::vector<double> values, int arity, double horizon) {
  return TestFunction(arity, horizon, UniformGrid{m, std::move(values)});
}

TestFunction TestFunction::tensor(std::vector<GridFactor> factors, double horizon) {
  const int n = static_cast<int>(factors.size());
  return TestFunction(n, horizon, TensorProduct{std::move(factors)});
}

bool TestFunction::is_elementary() const {
  const auto* s = std::get_if<StepRectangles>(&body_);
  if (s == nullptr) return false;
  for (const auto& term : s->terms) {
    for (std::size_t h = 0; h < term.rect.size(); ++h)
      for (std::size_t l = h + 1; l < term.rect.size(); ++l) {
        const auto& A = term.rect[h];
        const auto& B = term.rect[l];
        // closed intervals must be disjoint
        if (!(A.b < B.a || B.b < A.a)) return false;
      }
  }
  return true;
}

bool TestFunction::is_symmetric() const {
  if (arity_ == 1) return true;
  if (std::holds_alternative<NamedClosedForm>(body_)) return true;
  if (const auto* ug = std::get_if<UniformGrid>(&body_)) {
    const auto perms = permutations_of(arity_);
    int digits[kMaxArity], permuted[kMaxArity];
    for (std::size_t flat = 0; flat < ug->values.size(); ++flat) {
      decode_index(flat, arity_, ug->m, digits);
      for (const auto& p : perms) {
        for (int a = 0; a < arity_; ++a) permuted[a] = digits[p[a]];
        if (std::abs(ug->values[flat] - ug->values[encode_index(permuted, arity_, ug->m)]) >
            1e-12)
          return false;
      }
    }
    return true;
  }
  // ||f||^2 == ||sym f||^2 exactly characterizes symmetry (orthogonal projection)
  const double full = l2_norm_sq(*this);
  const double sym = l2_norm_sq(symmetrize(*this));
  return std::abs(full - sym) <= 1e-10 * std::max(1.0, full);
}

double evaluate(const TestFunction& f, std::span<const double> point) {
  const int n = f.arity();
  const double T = f.horizon();
  if (static_cast<int>(point.size()) != n)
    throw ValidationError("evaluate: point dimension does not match arity");
  for (double x : point)
    if (!(x >= 0.0) || !(x <= T * (1.0 + 1e-12)))
      throw ValidationError("evaluate: point outside [0, horizon]^n");

  return std::visit(
      [&](const auto& body) -> double {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, StepRectangles>) {
          double acc = 0.0;
          for (const auto& term : body.terms) {
            bool inside = true;
            for (int i = 0; i < n && inside; ++i)
              inside = point[i] > term.rect[i].a && point[i] <= term.rect[i].b;
            if (inside) acc += term.coeff;
          }
          return acc;
        } else if constexpr (std::is_same_v<B, TensorProduct>) {
          double prod = 1.0;
          for (int i = 0; i < n; ++i)
            prod *= body.factors[i].values[grid_cell_index(point[i], body.factors[i].m, T)];
          return prod;
        } else if constexpr (std::is_same_v<B, UniformGrid>) {
          int digits[kMaxArity];
          for (int i = 0; i < n; ++i) digits[i] = grid_cell_index(point[i], body.m, T);
          return body.values[encode_index(digits, n, body.m)];
        } else {
          switch (body.name) {
            case NamedForm::One:
              return 1.0;
            case NamedForm::SumCoords: {
              double s = 0.0;
              for (double x : point) s += x;
              return s;
            }
            case NamedForm::ProductCoords: {
              double p = 1.0;
              for (double x : point) p *= x;
              return p;
            }
            case NamedForm::ExpNegSum: {
              double s = 0.0;
              for (double x : point) s += x;
              return std::exp(-s);
            }
          }
          return 0.0;
        }
      },
      f.body());
}

TestFunction symmetrize(const TestFunction& f) {
  const int n = f.arity();
  if (n == 1 || std::holds_alternative<NamedClosedForm>(f.body())) return f;

  if (const auto* s = std::get_if<StepRectangles>(&f.body())) {
    const auto perms = permutations_of(n);
    const double inv = 1.0 / static_cast<double>(perms.size());
    std::vector<StepTerm> out;
    out.reserve(s->terms.size() * perms.size());
    for (const auto& term : s->terms)
      for (const auto& p : perms) {
        StepTerm t;
        t.coeff = term.coeff * inv;
        t.rect.resize(n);
        for (int i = 0; i < n; ++i) t.rect[i] = term.rect[p[i]];
        out.push_back(std::move(t));
      }
    return TestFunction::steps(std::move(out), n, f.horizon());
  }

  const UniformGrid* ug = std::get_if<UniformGrid>(&f.body());
  TestFunction materialized = f;
  if (ug == nullptr) {
    // tensor product: factors share m, so the grid materialization is exact
    const auto& tp = std::get<TensorProduct>(f.body());
    materialized = to_uniform_grid(f, tp.factors.front().m);
    ug = &std::get<UniformGrid>(materialized.body());
  }
  const auto perms = permutations_of(n);
  const double inv = 1.0 / static_cast<double>(perms.size());
  std::vector<double> out(ug->values.size(), 0.0);
  int digits[kMaxArity], permuted[kMaxArity];
  for (std::size_t flat = 0; flat < ug->values.size(); ++flat) {
    decode_index(flat, n, ug->m, digits);
    double acc = 0.0;
    for (const auto& p : perms) {
      for (int a = 0; a < n; ++a) permuted[a] = digits[p[a]];
      acc += ug->values[encode_index(permuted, n, ug->m)];
    }
    out[flat] = acc * inv;
  }
  return TestFunction::grid(ug->m, std::move(out), n, f.horizon());
}

double l2_norm_sq(const TestFunction& f, std::optional<double> up_to) {
  const int n = f.arity();
  const double T = f.horizon();
  const double t = up_to.value_or(T);
  if (!(t >= 0.0) || t > T * (1.0 + 1e-12))
    throw ValidationError("l2_norm_sq: restriction time outside [0, horizon]");
  if (t == 0.0) return 0.0;

  return std::visit(
      [&](const auto& body) -> double {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, StepRectangles>) {
          double acc = 0.0;
          for (const auto& u : body.terms)
            for (const auto& v : body.terms) {
              double vol = u.coeff * v.coeff;
              for (int i = 0; i < n; ++i) {
                const double lo = std::max(u.rect[i].a, v.rect[i].a);
                const double hi = std::min({u.rect[i].b, v.rect[i].b, t});
                vol *= std::max(0.0, hi - lo);
              }
              acc += vol;
            }
          return acc;
        } else if constexpr (std::is_same_v<B, TensorProduct>) {
          double prod = 1.0;
          for (const auto& g : body.factors) {
            const double cell = T / g.m;
            double s = 0.0;
            for (int j = 0; j < g.m; ++j) {
              const double overlap = std::max(0.0, std::min(t, (j + 1) * cell) - j * cell);
              s += g.values[j] * g.values[j] * overlap;
            }
            prod *= s;
          }
          return prod;
        } else if constexpr (std::is_same_v<B, UniformGrid>) {
          const double cell = T / body.m;
          std::vector<double> w(body.m);
          for (int j = 0; j < body.m; ++j)
            w[j] = std::max(0.0, std::min(t, (j + 1) * cell) - j * cell);
          double acc = 0.0;
          int digits[kMaxArity];
          for (std::size_t flat = 0; flat < body.values.size(); ++flat) {
            decode_index(flat, n, body.m, digits);
            double vol = body.values[flat] * body.values[flat];
            for (int a = 0; a < n; ++a) vol *= w[digits[a]];
            acc += vol;
          }
          return acc;
        } else {
          switch (body.name) {
            case NamedForm::One:
              return std::pow(t, n);
            case NamedForm::SumCoords:
              // int (sum x_i)^2 = n t^{n+2}/3 + n(n-1) t^{n+2}/4
              return n * std::pow(t, n + 2) / 3.0 +
                     n * (n - 1.0) * std::pow(t, n + 2) / 4.0;
            case NamedForm::ProductCoords:
              return std::pow(t * t * t / 3.0, n);
            case NamedForm::ExpNegSum:
              return std::pow((1.0 - std::exp(-2.0 * t)) / 2.0, n);
          }
          return 0.0;
        }
      },
      f.body());
}

TestFunction to_uniform_grid(const TestFunction& f, int m, std::size_t cell_budget) {
  const int n = f.arity();
  if (m < 1) throw ValidationError("to_uniform_grid: m must be >= 1");
  const std::size_t cells = checked_pow(static_cast<std::size_t>(m), n, cell_budget);
  if (cells > cell_budget)
    throw ResourceError("to_uniform_grid: m^n exceeds the cell budget (" +
                        std::to_string(cell_budget) + ")");
  const double T = f.horizon();
  const double cell = T / m;
  std::vector<double> values(cells);
  std::vector<double> point(n);
  int digits[kMaxArity];
  for (std::size_t flat = 0; flat < cells; ++flat) {
    decode_index(flat, n, m, digits);
    for (int a = 0; a < n; ++a) point[a] = (digits[a] + 0.5) * cell;
    values[flat] = evaluate(f, point);
  }
  return TestFunction::grid(m, std::move(values), n, T);
}

double IncrementFunction::operator()(double x, double y) const {
  const bool in_t = x <= t && y <= t;
  const bool in_s = x <= s && y <= s;
  if (in_t == in_s) return 0.0;
  double pt[2] = {x, y};
  return evaluate(*base, pt);
}

double increment_l2(const TestFunction& f, double s, double t) {
  if (f.arity() != 2) throw ValidationError("increment_l2: arity must be 2");
  if (!(s >= 0.0) || s > t || t > f.horizon() * (1.0 + 1e-12))
    throw ValidationError("increment_l2: need 0 <= s <= t <= horizon");
  const double d = l2_norm_sq(f, t) - l2_norm_sq(f, s);
  return std::max(0.0, d);
}

void write_grid_csv(const TestFunction& f, const std::string& path) {
  const auto* ug = std::get_if<UniformGrid>(&f.body());
  if (ug == nullptr) throw ValidationError("write_grid_csv: integrand is not a uniform grid");
  std::ofstream out(path);
  if (!out) throw ValidationError("write_grid_csv: cannot open " + path);
  char buf[64];
  out << "n,m,T\n";
  std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", f.arity(), ug->m, f.horizon());
  out << buf;
  for (double v : ug->values) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
  if (!out) throw ValidationError("write_grid_csv: write failed for " + path);
}

TestFunction read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_grid_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "n,m,T")
    throw ValidationError("read_grid_csv: missing n,m,T header in " + path);
  if (!std::getline(in, line)) throw ValidationError("read_grid_csv: missing size line");
  int n = 0, m = 0;
  double T = 0.0;
  if (std::sscanf(line.c_str(), "%d,%d,%lf", &n, &m, &T) != 3)
    throw ValidationError("read_grid_csv: malformed size line '" + line + "'");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    values.push_back(std::stod(line));
  }
  return TestFunction::grid(m, std::move(values), n, T);
}

}  // namespace chaos
