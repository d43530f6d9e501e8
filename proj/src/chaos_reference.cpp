#include "chaos_approx/chaos_reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "chaos_approx/errors.hpp"
#include "chaos_approx/simd.hpp"
#include "chaos_approx/threads.hpp"

namespace chaos {

namespace {

struct Kahan {
  double sum = 0.0, carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::size_t snap_index(double x, const BrownianGrid& W) {
  const double idx = x / W.step;
  const auto j = static_cast<std::size_t>(std::llround(std::max(0.0, idx)));
  return std::min(j, W.steps());
}

// smallest gap between the closed intervals of any term (elementary bodies)
double min_interval_gap(const StepRectangles& body) {
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& term : body.terms)
    for (std::size_t h = 0; h < term.rect.size(); ++h)
      for (std::size_t l = h + 1; l < term.rect.size(); ++l) {
        const auto& A = term.rect[h];
        const auto& B = term.rect[l];
        gap = std::min(gap, std::max(B.a - A.b, A.a - B.b));
      }
  return gap;
}

int natural_grid_m(const TestFunction& f) {
  if (const auto* ug = std::get_if<UniformGrid>(&f.body())) return ug->m;
  if (const auto* tp = std::get_if<TensorProduct>(&f.body())) return tp->factors.front().m;
  if (const auto* s = std::get_if<StepRectangles>(&f.body())) {
    const double T = f.horizon();
    for (int m = 1; m <= 1024; ++m) {
      bool aligned = true;
      for (const auto& term : s->terms)
        for (const auto& iv : term.rect) {
          for (double e : {iv.a, iv.b}) {
            const double v = e * m / T;
            if (std::abs(v - std::llround(v)) > 1e-9) aligned = false;
          }
        }
      if (aligned) return m;
    }
    return 256;
  }
  return 64;  // named forms evaluated exactly elsewhere; gridded fallback
}

// W sampled exactly at an arbitrary sorted point set (used by the law
// sampler for elementary integrands, where only finitely many W values
// enter the product formula).
std::vector<double> brownian_at(std::span<const double> points, RandomStream& rng) {
  std::vector<double> w(points.size());
  double prev_t = 0.0, prev_w = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double dt = points[i] - prev_t;
    prev_w = dt > 0.0 ? prev_w + std::sqrt(dt) * rng.gaussian() : prev_w;
    prev_t = points[i];
    w[i] = prev_w;
  }
  return w;
}

}  // namespace

double BrownianGrid::point(std::size_t i) const { return std::min(i * step, horizon); }

BrownianGrid sample_brownian(double h, double T, RandomStream& rng) {
  if (!(h > 0.0) || !(h <= T)) throw ValidationError("sample_brownian: need 0 < h <= T");
  BrownianGrid grid;
  grid.step = h;
  grid.horizon = T;
  const auto steps = static_cast<std::size_t>(std::ceil(T / h - 1e-9));
  grid.increments.resize(steps);
  grid.cumulative.resize(steps + 1);
  grid.cumulative[0] = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double len = std::min(h, T - static_cast<double>(i) * h);
    grid.cumulative[i + 1] = grid.cumulative[i] + std::sqrt(len) * rng.gaussian();
    // store the representable difference so the pair stays exactly consistent
    grid.increments[i] = grid.cumulative[i + 1] - grid.cumulative[i];
  }
  return grid;
}

const char* reference_law_name(ReferenceLaw law) {
  switch (law) {
    case ReferenceLaw::ExactStep:
      return "exact_step";
    case ReferenceLaw::IteratedIto:
      return "iterated_ito";
    case ReferenceLaw::HermiteClosedForm:
      return "hermite_closed_form";
  }
  return "?";
}

ReferenceSample exact_integral_step(const TestFunction& f, const BrownianGrid& W,
                                    std::span<const double> times) {
  const auto* body = std::get_if<StepRectangles>(&f.body());
  if (body == nullptr || !f.is_elementary())
    throw ValidationError("exact_integral_step: integrand must be an elementary step function");
  const double gap = min_interval_gap(*body);
  if (f.arity() >= 2 && !(W.step <= gap / 8.0))
    throw ValidationError("exact_integral_step: grid step must be <= min interval gap / 8");

  ReferenceSample out;
  out.law_tag = ReferenceLaw::ExactStep;
  out.values.reserve(times.size());
  for (double t : times) {
    Kahan acc;
    for (const auto& term : body->terms) {
      double prod = term.coeff;
      for (const auto& iv : term.rect) {
        const double a = std::min(iv.a, t);
        const double b = std::min(iv.b, t);
        prod *= W.cumulative[snap_index(b, W)] - W.cumulative[snap_index(a, W)];
      }
      acc.add(prod);
    }
    out.values.push_back(acc.sum);
  }
  return out;
}

ReferenceSample iterated_ito_n2(const TestFunction& f, const BrownianGrid& W,
                                std::span<const double> times) {
  if (f.arity() != 2) throw ValidationError("iterated_ito_n2: arity must be 2");
  if (!f.is_symmetric())
    throw ValidationError("iterated_ito_n2: integrand must be symmetric (symmetrize first)");

  const double T = f.horizon();
  const std::size_t G = W.steps();
  const auto* named = std::get_if<NamedClosedForm>(&f.body());

  // gridded representation for non-named bodies
  int m = 0;
  std::vector<double> Ft;  // transposed grid: Ft[col][row]
  std::size_t per_cell = 0;
  if (named == nullptr) {
    m = natural_grid_m(f);
    const double ratio = (T / m) / W.step;
    per_cell = static_cast<std::size_t>(std::llround(ratio));
    if (per_cell == 0 || std::abs(ratio - static_cast<double>(per_cell)) > 1e-6)
      throw ValidationError("iterated_ito_n2: integrand grid must divide the Brownian grid");
    const TestFunction gridded = to_uniform_grid(f, m);
    const auto& F = std::get<UniformGrid>(gridded.body()).values;
    Ft.resize(F.size());
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) Ft[static_cast<std::size_t>(c) * m + r] = F[static_cast<std::size_t>(r) * m + c];
  }

  std::vector<double> sorted_times(times.begin(), times.end());
  for (double t : sorted_times)
    if (t < 0.0 || t > T * (1.0 + 1e-12))
      throw ValidationError("iterated_ito_n2: time outside [0, horizon]");

  // running inner sums: S[c] = sum of dW_i with midpoint x_i in grid cell c
  std::vector<double> S(named ? 0 : m, 0.0);
  double running_w = 0.0;       // W at the left point
  double sum_g = 0.0;           // named: sum g(x_i) dW_i
  Kahan acc;

  ReferenceSample out;
  out.law_tag = ReferenceLaw::IteratedIto;
  out.values.resize(times.size());
  // record column values once the grid time passes each requested time
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::size_t next_time = 0;
  const auto flush_times = [&](double reached) {
    while (next_time < order.size() && times[order[next_time]] <= reached + 1e-12) {
      out.values[order[next_time]] = 2.0 * acc.sum;
      ++next_time;
    }
  };

  flush_times(0.0);
  for (std::size_t j = 0; j < G; ++j) {
    const double xj = (static_cast<double>(j) + 0.5) * W.step;
    const double dwj = W.increments[j];
    double inner;
    if (named != nullptr) {
      switch (named->name) {
        case NamedForm::One:
          inner = running_w;
          break;
        case NamedForm::SumCoords:
          inner = sum_g + xj * running_w;  // sum (x_i + x_j) dW_i
          break;
        case NamedForm::ProductCoords:
          inner = xj * sum_g;
          break;
        case NamedForm::ExpNegSum:
          inner = std::exp(-xj) * sum_g;
          break;
        default:
          inner = 0.0;
      }
    } else {
      const std::size_t col = std::min<std::size_t>(j / per_cell, static_cast<std::size_t>(m) - 1);
      inner = simd::dot(S.data(), Ft.data() + col * m, static_cast<std::size_t>(m));
    }
    acc.add(inner * dwj);

    // fold this step into the running sums for future j
    running_w += dwj;
    if (named != nullptr) {
      switch (named->name) {
        case NamedForm::SumCoords:
        case NamedForm::ProductCoords:
          sum_g += xj * dwj;
          break;
        case NamedForm::ExpNegSum:
          sum_g += std::exp(-xj) * dwj;
          break;
        default:
          break;
      }
    } else {
      S[std::min<std::size_t>(j / per_cell, static_cast<std::size_t>(m) - 1)] += dwj;
    }
    flush_times(W.point(j + 1));
  }
  flush_times(T);
  return out;
}

double hermite_closed_form(int n, double t, double w_t) {
  if (n < 1 || n > 3) throw ValidationError("hermite_closed_form: n must be 1, 2 or 3");
  if (!(t > 0.0)) throw ValidationError("hermite_closed_form: t must be positive");
  switch (n) {
    case 1:
      return w_t;
    case 2:
      return w_t * w_t - t;
    default:
      return w_t * w_t * w_t - 3.0 * t * w_t;
  }
}

namespace {

enum class Method { ExactStepSparse, Hermite, Iterated };

Method pick_method(const TestFunction& f) {
  if (std::holds_alternative<StepRectangles>(f.body()) && f.is_elementary())
    return Method::ExactStepSparse;
  if (const auto* named = std::get_if<NamedClosedForm>(&f.body());
      named != nullptr && named->name == NamedForm::One && f.arity() <= 3)
    return Method::Hermite;
  if (f.arity() == 2) return Method::Iterated;
  throw CapabilityError(
      "no reference law available: need an elementary step function (n <= 4), the constant "
      "integrand (n <= 3), or arity 2");
}

ReferenceSample one_exact_step_sparse(const TestFunction& f, std::span<const double> times,
                                      RandomStream& rng) {
  const auto& body = std::get<StepRectangles>(f.body());
  std::vector<double> pts;
  for (const auto& term : body.terms)
    for (const auto& iv : term.rect) {
      pts.push_back(iv.a);
      pts.push_back(iv.b);
    }
  for (double t : times) pts.push_back(t);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::vector<double> w = brownian_at(pts, rng);
  const auto w_at = [&](double x) {
    const auto it = std::lower_bound(pts.begin(), pts.end(), x);
    return w[static_cast<std::size_t>(it - pts.begin())];
  };
  ReferenceSample out;
  out.law_tag = ReferenceLaw::ExactStep;
  for (double t : times) {
    Kahan acc;
    for (const auto& term : body.terms) {
      double prod = term.coeff;
      for (const auto& iv : term.rect)
        prod *= w_at(std::min(iv.b, t)) - w_at(std::min(iv.a, t));
      acc.add(prod);
    }
    out.values.push_back(acc.sum);
  }
  return out;
}

ReferenceSample one_hermite(const TestFunction& f, std::span<const double> times,
                            RandomStream& rng) {
  std::vector<double> pts(times.begin(), times.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::vector<double> w = brownian_at(pts, rng);
  ReferenceSample out;
  out.law_tag = ReferenceLaw::HermiteClosedForm;
  for (double t : times) {
    const auto it = std::lower_bound(pts.begin(), pts.end(), t);
    const double wt = w[static_cast<std::size_t>(it - pts.begin())];
    out.values.push_back(t > 0.0 ? hermite_closed_form(f.arity(), t, wt) : 0.0);
  }
  return out;
}

}  // namespace

std::vector<ReferenceSample> sample_reference_law(const TestFunction& f,
                                                  std::span<const double> times, int count,
                                                  double h, RandomStream& rng) {
  if (count < 0) throw ValidationError("sample_reference_law: count must be >= 0");
  const Method method = pick_method(f);
  const TestFunction sym = method == Method::Iterated ? symmetrize(f) : f;
  const std::uint64_t sub_master = rng.next_u64();
  std::vector<ReferenceSample> out(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream stream = RandomStream::derived(sub_master, i);
      switch (method) {
        case Method::ExactStepSparse:
          out[i] = one_exact_step_sparse(f, times, stream);
          break;
        case Method::Hermite:
          out[i] = one_hermite(f, times, stream);
          break;
        case Method::Iterated: {
          const BrownianGrid W = sample_brownian(h, f.horizon(), stream);
          out[i] = iterated_ito_n2(sym, W, times);
          break;
        }
      }
    }
  });
  return out;
}

SampleMatrix sample_reference_vector(std::span<const TestFunction> fs,
                                     std::span<const double> times, int count, double h,
                                     RandomStream& rng) {
  if (fs.empty()) throw ValidationError("sample_reference_vector: need at least one integrand");
  std::vector<Method> methods;
  std::vector<TestFunction> prepared;
  bool needs_grid = false;
  for (const auto& f : fs) {
    const Method m = pick_method(f);
    methods.push_back(m);
    prepared.push_back(m == Method::Iterated ? symmetrize(f) : f);
    needs_grid = needs_grid || m != Method::Hermite;
  }
  const double T = fs.front().horizon();
  const std::uint64_t sub_master = rng.next_u64();
  SampleMatrix out(static_cast<std::size_t>(count), fs.size() * times.size());
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream stream = RandomStream::derived(sub_master, i);
      const BrownianGrid W = sample_brownian(h, T, stream);
      for (std::size_t k = 0; k < prepared.size(); ++k) {
        ReferenceSample s;
        switch (methods[k]) {
          case Method::ExactStepSparse:
            s = exact_integral_step(prepared[k], W, times);
            break;
          case Method::Hermite: {
            s.law_tag = ReferenceLaw::HermiteClosedForm;
            for (double t : times) {
              const double wt = W.cumulative[snap_index(t, W)];
              s.values.push_back(t > 0.0 ? hermite_closed_form(prepared[k].arity(), t, wt) : 0.0);
            }
            break;
          }
          case Method::Iterated:
            s = iterated_ito_n2(prepared[k], W, times);
            break;
        }
        for (std::size_t c = 0; c < times.size(); ++c)
          out.at(i, k * times.size() + c) = s.values[c];
      }
    }
  });
  return out;
}

void write_samples_csv(const SampleMatrix& samples, std::span<const double> times,
                       const std::string& path) {
  std::ofstream outfile(path);
  if (!outfile) throw ValidationError("write_samples_csv: cannot open " + path);
  char buf[64];
  outfile << "sample";
  for (double t : times) {
    std::snprintf(buf, sizeof(buf), ",t=%.17g", t);
    outfile << buf;
  }
  outfile << "\n";
  for (std::size_t r = 0; r < samples.rows; ++r) {
    outfile << r;
    for (std::size_t c = 0; c < samples.cols; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", samples.at(r, c));
      outfile << buf;
    }
    outfile << "\n";
  }
  if (!outfile) throw ValidationError("write_samples_csv: write failed for " + path);
}

}  // namespace chaos
