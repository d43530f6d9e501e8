#pragma once

#include <span>
#include <vector>

#include "chaos_approx/rng.hpp"

namespace chaos {

enum class KernelKind { Donsker, KacStroock };

// Law of the i.i.d. driving variables: mean 0, variance 1, finite fourth
// moment for every entry in the menu.
enum class XiKind { Rademacher, StandardGaussian, CenteredUniform };

double draw_xi(XiKind kind, RandomStream& rng);

// Piecewise-constant kernel realization theta on [0, horizon] together with
// everything needed to integrate it exactly downstream. values[i] is the
// level of theta on [breakpoints[i], breakpoints[i+1]).
struct KernelPath {
  KernelKind kind = KernelKind::Donsker;
  double epsilon = 0.0;
  double horizon = 0.0;
  std::vector<double> breakpoints;  // 0 = b0 < b1 < ... < bM = horizon
  std::vector<double> values;       // size M

  std::size_t interval_count() const { return values.size(); }
};

// theta = xi_k / eps on the k-th cell of width eps^2 (last cell may be
// partial). eps must be in (0,1), T > 0.
KernelPath sample_donsker(double epsilon, double T, XiKind xi, RandomStream& rng);

// theta = (1/eps) * (-1)^{N(x/eps^2)} for a unit-rate Poisson process N;
// breakpoints carry the jump times scaled by eps^2. Starts at +1/eps.
KernelPath sample_kac_stroock(double epsilon, double T, RandomStream& rng);

// Level of theta at x in [0, horizon] (right-continuous lookup).
double value_at(const KernelPath& path, double x);

// Integral of theta over [0, t], exact for the piecewise-constant path.
double eta_at(const KernelPath& path, double t);

// Integral of theta over each cell of `partition` (0 = p0 < ... < pm = t).
// The partition must refine the path breakpoints inside (0, t), so theta is
// constant per cell; the weights then sum to eta_at(path, t).
std::vector<double> cell_weights(const KernelPath& path, std::span<const double> partition);

}  // namespace chaos
