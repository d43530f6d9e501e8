#pragma once

#include <span>

#include "chaos_approx/kernels.hpp"
#include "chaos_approx/sample_matrix.hpp"
#include "chaos_approx/testfunctions.hpp"

namespace chaos {

// How cell tuples that straddle the diagonal band |x_i - x_j| = eps are
// resolved. CellCenter decides by the tuple of cell centers (cells are
// internally subdivided to at most eps^2 so the straddle mass is small);
// ExactGeometryN2 integrates the band geometry exactly against the
// cell-constant integrand and kernel levels (arity 2 only).
enum class DiagonalRule { CellCenter, ExactGeometryN2 };

struct QuadratureConfig {
  int grid_m = 32;                                     // cells per axis for the integrand
  DiagonalRule diagonal_rule = DiagonalRule::CellCenter;
  std::size_t cell_budget = kDefaultCellBudget;        // guards the O(cells^n) sums
};

struct MergedPartition {
  std::vector<double> points;  // 0 = p0 < ... < pm = t
  double cell_len_max = 0.0;
};

// Sorted union of {path breakpoints in (0,t)}, {j T/grid_m <= t}, {0, t};
// points within 1e-14 of each other are coalesced.
MergedPartition build_partition(const KernelPath& path, double t, int grid_m);

// Area of {(x,y) in [a0,a1] x [b0,b1] : |x - y| <= eps}. Exact (the overlap
// profile is piecewise linear in x).
double band_overlap_area(double a0, double a1, double b0, double b1, double eps);

// The off-diagonal multiple integral of f against the kernel path up to
// time t: the n-fold integral of f(x) prod_i theta(x_i) restricted to
// {|x_i - x_j| > eps for all i != j}, computed as a dense sum over merged
// partition cells with f projected on the uniform grid_m grid.
double evaluate_Y(const TestFunction& f, const KernelPath& path, double t,
                  const QuadratureConfig& cfg);

// Row (path) x column (time) evaluation. All paths must share kind and
// epsilon; integrand gridding and per-time geometry are reused, and rows are
// distributed over workers (results independent of worker count).
SampleMatrix evaluate_Y_batch(const TestFunction& f, std::span<const KernelPath> paths,
                              std::span<const double> times, const QuadratureConfig& cfg);

}  // namespace chaos
