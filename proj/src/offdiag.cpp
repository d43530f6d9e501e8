#include "chaos_approx/offdiag.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "chaos_approx/errors.hpp"
#include "chaos_approx/simd.hpp"
#include "chaos_approx/threads.hpp"

namespace chaos {

namespace {

constexpr double kCoalesce = 1e-14;

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

// Partition-cell geometry that depends only on the breakpoint set, the time
// and the config; shared across paths with identical breakpoints.
struct CellGeometry {
  std::vector<double> lo, hi, center, len;
  std::vector<int> fcell;             // integrand grid cell per partition cell
  std::vector<int> band_lo, band_hi;  // js with |center_j - center_i| <= eps
  std::vector<int> near_lo, near_hi;  // js whose cell gap to cell i is < eps
  std::vector<double> fexp;           // m rows x cells: F[r][fcell[j]] (arity 2)
  std::size_t cells = 0;
};

std::vector<double> merged_points(const KernelPath& path, double t, int grid_m) {
  std::vector<double> pts;
  pts.push_back(0.0);
  for (double b : path.breakpoints)
    if (b > 0.0 && b < t) pts.push_back(b);
  const double cell = path.horizon / grid_m;
  for (int j = 1; j <= grid_m; ++j) {
    const double g = j * cell;
    if (g < t) pts.push_back(g);
  }
  pts.push_back(t);
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  out.reserve(pts.size());
  for (double p : pts)
    if (out.empty() || p - out.back() > kCoalesce) out.push_back(p);
  if (out.size() >= 2 && std::abs(out.back() - t) > kCoalesce) out.push_back(t);
  out.back() = t;
  return out;
}

int grid_cell_of(double x, int m, double T) {
  int j = static_cast<int>(std::ceil(x * static_cast<double>(m) / T - 1e-9)) - 1;
  return std::clamp(j, 0, m - 1);
}

CellGeometry make_geometry(const KernelPath& path, double t, const QuadratureConfig& cfg,
                           int fm, bool subdivide) {
  CellGeometry g;
  const std::vector<double> pts = merged_points(path, t, cfg.grid_m);
  const double eps = path.epsilon;
  const double cap = eps * eps;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    int parts = 1;
    if (subdivide && b - a > cap) parts = static_cast<int>(std::ceil((b - a) / cap - 1e-12));
    const double step = (b - a) / parts;
    for (int p = 0; p < parts; ++p) {
      g.lo.push_back(a + p * step);
      g.hi.push_back(p + 1 == parts ? b : a + (p + 1) * step);
    }
  }
  g.cells = g.lo.size();
  g.center.resize(g.cells);
  g.len.resize(g.cells);
  g.fcell.resize(g.cells);
  for (std::size_t i = 0; i < g.cells; ++i) {
    g.center[i] = 0.5 * (g.lo[i] + g.hi[i]);
    g.len[i] = g.hi[i] - g.lo[i];
    g.fcell[i] = grid_cell_of(g.center[i], fm, path.horizon);
  }

  g.band_lo.resize(g.cells);
  g.band_hi.resize(g.cells);
  // center spacings equal to eps up to rounding are common (decimal eps on
  // decimal grids); the guarded comparison keeps the tie resolution stable
  // against ulp-level differences in how the centers were computed
  const double eps_guard = eps * (1.0 + 1e-12);
  for (std::size_t i = 0, lo = 0, hi = 0; i < g.cells; ++i) {
    while (lo < g.cells && g.center[i] - g.center[lo] > eps_guard) ++lo;
    if (hi < lo) hi = lo;
    while (hi < g.cells && g.center[hi] - g.center[i] <= eps_guard) ++hi;
    g.band_lo[i] = static_cast<int>(lo);
    g.band_hi[i] = static_cast<int>(hi);
  }

  g.near_lo.resize(g.cells);
  g.near_hi.resize(g.cells);
  for (std::size_t i = 0, lo = 0, hi = 0; i < g.cells; ++i) {
    while (lo < g.cells && g.hi[lo] <= g.lo[i] - eps) ++lo;
    if (hi < lo) hi = lo;
    while (hi < g.cells && g.lo[hi] < g.hi[i] + eps) ++hi;
    g.near_lo[i] = static_cast<int>(lo);
    g.near_hi[i] = static_cast<int>(hi);
  }
  return g;
}

void expand_rows(CellGeometry& g, const std::vector<double>& F, int fm,
                 std::size_t cell_budget) {
  if (static_cast<std::size_t>(fm) * g.cells > cell_budget)
    throw ResourceError("evaluate_Y: expanded row table exceeds the cell budget");
  g.fexp.assign(static_cast<std::size_t>(fm) * g.cells, 0.0);
  for (int r = 0; r < fm; ++r) {
    const double* frow = F.data() + static_cast<std::size_t>(r) * fm;
    double* row = g.fexp.data() + static_cast<std::size_t>(r) * g.cells;
    for (std::size_t j = 0; j < g.cells; ++j) row[j] = frow[g.fcell[j]];
  }
}

// theta level and integrated weight per partition cell; cells never straddle
// a breakpoint, so the level is the path value at the cell center.
void fill_weights(const CellGeometry& g, const KernelPath& path, std::vector<double>& theta,
                  std::vector<double>& w) {
  theta.resize(g.cells);
  w.resize(g.cells);
  std::size_t cursor = 0;
  const auto& bp = path.breakpoints;
  for (std::size_t i = 0; i < g.cells; ++i) {
    const double c = g.center[i];
    while (cursor + 2 < bp.size() && bp[cursor + 1] <= c) ++cursor;
    theta[i] = path.values[cursor];
    w[i] = theta[i] * g.len[i];
  }
}

double eval_n1(const CellGeometry& g, const std::vector<double>& F,
               const std::vector<double>& w) {
  Kahan acc;
  for (std::size_t j = 0; j < g.cells; ++j) acc.add(F[g.fcell[j]] * w[j]);
  return acc.value();
}

double eval_n2(const CellGeometry& g, const std::vector<double>& F, int fm,
               const std::vector<double>& theta, const std::vector<double>& w,
               DiagonalRule rule, double eps) {
  // full double sum through per-grid-cell aggregated weights
  std::vector<double> wagg(fm, 0.0);
  for (std::size_t j = 0; j < g.cells; ++j) wagg[g.fcell[j]] += w[j];
  std::vector<double> rowdot(fm);
  for (int r = 0; r < fm; ++r)
    rowdot[r] = simd::dot(F.data() + static_cast<std::size_t>(r) * fm, wagg.data(), fm);
  const double full = simd::dot(wagg.data(), rowdot.data(), fm);

  // subtract the diagonal-band mass
  Kahan corr;
  if (rule == DiagonalRule::CellCenter) {
    for (std::size_t i = 0; i < g.cells; ++i) {
      const int lo = g.band_lo[i], hi = g.band_hi[i];
      if (lo >= hi) continue;
      const double* row = g.fexp.data() + static_cast<std::size_t>(g.fcell[i]) * g.cells;
      corr.add(w[i] * simd::dot(row + lo, w.data() + lo, static_cast<std::size_t>(hi - lo)));
    }
  } else {
    for (std::size_t i = 0; i < g.cells; ++i) {
      const double* frow = F.data() + static_cast<std::size_t>(g.fcell[i]) * fm;
      for (int j = g.near_lo[i]; j < g.near_hi[i]; ++j) {
        const double area = band_overlap_area(g.lo[i], g.hi[i], g.lo[j], g.hi[j], eps);
        if (area != 0.0)
          corr.add(frow[g.fcell[j]] * theta[i] * theta[j] * area);
      }
    }
  }
  return full - corr.value();
}

// arity >= 3: dense tuple sum with CellCenter band pruning. The admissible
// index set for each new coordinate is [0, cells) minus the bands of the
// already-chosen cells, kept as up to kMaxArity sorted segments.
double eval_dense(const CellGeometry& g, const std::vector<double>& F, int fm, int n,
                  const std::vector<double>& w) {
  struct Seg {
    int lo, hi;
  };
  std::vector<int> chosen(n, 0);
  Kahan total;

  // subtract band [b_lo, b_hi) from each segment in segs
  const auto subtract_band = [](const std::vector<Seg>& segs, int blo, int bhi) {
    std::vector<Seg> out;
    for (const Seg& s : segs) {
      if (bhi <= s.lo || blo >= s.hi) {
        out.push_back(s);
        continue;
      }
      if (blo > s.lo) out.push_back({s.lo, blo});
      if (bhi < s.hi) out.push_back({bhi, s.hi});
    }
    return out;
  };

  const std::size_t cells = g.cells;
  const auto flat_prefix = [&](int depth) {
    std::size_t flat = 0;
    for (int a = 0; a < depth; ++a)
      flat = flat * static_cast<std::size_t>(fm) + static_cast<std::size_t>(g.fcell[chosen[a]]);
    return flat;
  };

  std::function<void(int, double, std::vector<Seg>)> descend = [&](int depth, double weight,
                                                                   std::vector<Seg> segs) {
    if (depth == n - 1) {
      const double* frow = F.data() + flat_prefix(depth) * static_cast<std::size_t>(fm);
      Kahan inner;
      for (const Seg& s : segs)
        for (int j = s.lo; j < s.hi; ++j) inner.add(frow[g.fcell[j]] * w[j]);
      total.add(weight * inner.value());
      return;
    }
    for (const Seg& s : segs)
      for (int i = s.lo; i < s.hi; ++i) {
        chosen[depth] = i;
        descend(depth + 1, weight * w[i],
                subtract_band(segs, g.band_lo[i], g.band_hi[i]));
      }
  };

  std::vector<Seg> all{{0, static_cast<int>(cells)}};
  descend(0, 1.0, all);
  return total.value();
}

void validate_eval_args(const TestFunction& f, const KernelPath& path, double t,
                        const QuadratureConfig& cfg) {
  if (cfg.grid_m < 1) throw ValidationError("evaluate_Y: grid_m must be >= 1");
  if (f.horizon() != path.horizon)
    throw ValidationError("evaluate_Y: integrand and path horizons differ");
  if (t < 0.0 || t > path.horizon * (1.0 + 1e-12))
    throw ValidationError("evaluate_Y: t outside [0, horizon]");
  if (f.arity() > kMaxArity) throw ValidationError("evaluate_Y: arity above cap");
  if (cfg.diagonal_rule == DiagonalRule::ExactGeometryN2 && f.arity() != 2)
    throw ValidationError("evaluate_Y: ExactGeometryN2 requires arity 2");
}

double evaluate_with_geometry(const TestFunction& f, const std::vector<double>& F,
                              const CellGeometry& g, const KernelPath& path,
                              const QuadratureConfig& cfg, std::vector<double>& theta,
                              std::vector<double>& w) {
  if (g.cells == 0) return 0.0;
  fill_weights(g, path, theta, w);
  const int n = f.arity();
  if (n == 1) return eval_n1(g, F, w);
  if (n == 2) return eval_n2(g, F, cfg.grid_m, theta, w, cfg.diagonal_rule, path.epsilon);
  return eval_dense(g, F, cfg.grid_m, n, w);
}

const std::vector<double>& gridded_values(const TestFunction& gridded) {
  return std::get<UniformGrid>(gridded.body()).values;
}

void check_dense_budget(int n, std::size_t cells, const QuadratureConfig& cfg) {
  if (n < 3) return;
  double cost = 1.0;
  for (int i = 0; i < n; ++i) cost *= static_cast<double>(cells);
  if (cost > static_cast<double>(cfg.cell_budget))
    throw ResourceError("evaluate_Y: dense tuple sum of " + std::to_string(cells) + "^" +
                        std::to_string(n) + " cells exceeds the cell budget");
}

}  // namespace

MergedPartition build_partition(const KernelPath& path, double t, int grid_m) {
  if (grid_m < 1) throw ValidationError("build_partition: grid_m must be >= 1");
  if (t < 0.0 || t > path.horizon * (1.0 + 1e-12))
    throw ValidationError("build_partition: t outside [0, horizon]");
  MergedPartition mp;
  if (t <= kCoalesce) {
    mp.points = {0.0};
    return mp;
  }
  mp.points = merged_points(path, t, grid_m);
  for (std::size_t i = 0; i + 1 < mp.points.size(); ++i)
    mp.cell_len_max = std::max(mp.cell_len_max, mp.points[i + 1] - mp.points[i]);
  return mp;
}

double band_overlap_area(double a0, double a1, double b0, double b1, double eps) {
  const auto profile = [&](double x) {
    const double lo = std::max(b0, x - eps);
    const double hi = std::min(b1, x + eps);
    return std::max(0.0, hi - lo);
  };
  double knots[6] = {a0, a1, b0 - eps, b0 + eps, b1 - eps, b1 + eps};
  std::sort(knots, knots + 6);
  double area = 0.0;
  for (int i = 0; i + 1 < 6; ++i) {
    const double x0 = std::clamp(knots[i], a0, a1);
    const double x1 = std::clamp(knots[i + 1], a0, a1);
    if (x1 <= x0) continue;
    area += 0.5 * (profile(x0) + profile(x1)) * (x1 - x0);
  }
  return area;
}

double evaluate_Y(const TestFunction& f, const KernelPath& path, double t,
                  const QuadratureConfig& cfg) {
  validate_eval_args(f, path, t, cfg);
  if (t <= kCoalesce) return 0.0;
  const TestFunction gridded = to_uniform_grid(f, cfg.grid_m, cfg.cell_budget);
  const std::vector<double>& F = gridded_values(gridded);
  const bool subdivide = cfg.diagonal_rule == DiagonalRule::CellCenter && f.arity() >= 2;
  CellGeometry g = make_geometry(path, t, cfg, cfg.grid_m, subdivide);
  check_dense_budget(f.arity(), g.cells, cfg);
  if (f.arity() == 2 && cfg.diagonal_rule == DiagonalRule::CellCenter) expand_rows(g, F, cfg.grid_m, cfg.cell_budget);
  std::vector<double> theta, w;
  return evaluate_with_geometry(f, F, g, path, cfg, theta, w);
}

SampleMatrix evaluate_Y_batch(const TestFunction& f, std::span<const KernelPath> paths,
                              std::span<const double> times, const QuadratureConfig& cfg) {
  SampleMatrix out(paths.size(), times.size());
  if (paths.empty() || times.empty()) return out;
  for (const KernelPath& p : paths) {
    if (p.kind != paths.front().kind || p.epsilon != paths.front().epsilon ||
        p.horizon != paths.front().horizon)
      throw ValidationError("evaluate_Y_batch: paths must share kind, epsilon and horizon");
  }
  validate_eval_args(f, paths.front(), 0.0, cfg);
  for (double t : times)
    if (t < 0.0 || t > paths.front().horizon * (1.0 + 1e-12))
      throw ValidationError("evaluate_Y_batch: time outside [0, horizon]");

  const TestFunction gridded = to_uniform_grid(f, cfg.grid_m, cfg.cell_budget);
  const std::vector<double>& F = gridded_values(gridded);
  const bool subdivide = cfg.diagonal_rule == DiagonalRule::CellCenter && f.arity() >= 2;
  // geometry can be shared only when every path has the same breakpoints
  // (always true for sampled Donsker paths, but hand-built ones may differ)
  bool shared_breaks = paths.front().kind == KernelKind::Donsker;
  for (std::size_t i = 1; shared_breaks && i < paths.size(); ++i)
    shared_breaks = paths[i].breakpoints == paths.front().breakpoints;

  for (std::size_t col = 0; col < times.size(); ++col) {
    const double t = times[col];
    if (t <= kCoalesce) continue;  // column stays zero
    if (shared_breaks) {
      CellGeometry g = make_geometry(paths.front(), t, cfg, cfg.grid_m, subdivide);
      check_dense_budget(f.arity(), g.cells, cfg);
      if (f.arity() == 2 && cfg.diagonal_rule == DiagonalRule::CellCenter)
        expand_rows(g, F, cfg.grid_m, cfg.cell_budget);
      parallel_for(paths.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> theta, w;
        for (std::size_t r = begin; r < end; ++r)
          out.at(r, col) = evaluate_with_geometry(f, F, g, paths[r], cfg, theta, w);
      });
    } else {
      parallel_for(paths.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> theta, w;
        for (std::size_t r = begin; r < end; ++r) {
          CellGeometry g = make_geometry(paths[r], t, cfg, cfg.grid_m, subdivide);
          check_dense_budget(f.arity(), g.cells, cfg);
          if (f.arity() == 2 && cfg.diagonal_rule == DiagonalRule::CellCenter)
            expand_rows(g, F, cfg.grid_m, cfg.cell_budget);
          out.at(r, col) = evaluate_with_geometry(f, F, g, paths[r], cfg, theta, w);
        }
      });
    }
  }
  return out;
}

}  // namespace chaos
