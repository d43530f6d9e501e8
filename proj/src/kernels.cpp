#include "chaos_approx/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chaos_approx/errors.hpp"

namespace chaos {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935274463415059;

void check_kernel_params(double epsilon, double T) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw ValidationError("kernel epsilon must be in (0,1), got " + std::to_string(epsilon));
  if (!(T > 0.0) || !std::isfinite(T))
    throw ValidationError("kernel horizon must be positive, got " + std::to_string(T));
}

}  // namespace

double draw_xi(XiKind kind, RandomStream& rng) {
  switch (kind) {
    case XiKind::Rademacher:
      return rng.rademacher();
    case XiKind::StandardGaussian:
      return rng.gaussian();
    case XiKind::CenteredUniform:
      return (2.0 * rng.uniform01() - 1.0) * kSqrt3;
  }
  return 0.0;
}

KernelPath sample_donsker(double epsilon, double T, XiKind xi, RandomStream& rng) {
  check_kernel_params(epsilon, T);
  const double cell = epsilon * epsilon;
  KernelPath path;
  path.kind = KernelKind::Donsker;
  path.epsilon = epsilon;
  path.horizon = T;
  path.breakpoints.push_back(0.0);
  for (std::size_t k = 1;; ++k) {
    const double b = static_cast<double>(k) * cell;
    if (b >= T - 1e-12 * T) break;
    path.breakpoints.push_back(b);
  }
  path.breakpoints.push_back(T);
  path.values.resize(path.breakpoints.size() - 1);
  for (auto& v : path.values) v = draw_xi(xi, rng) / epsilon;
  return path;
}

KernelPath sample_kac_stroock(double epsilon, double T, RandomStream& rng) {
  check_kernel_params(epsilon, T);
  const double cell = epsilon * epsilon;
  KernelPath path;
  path.kind = KernelKind::KacStroock;
  path.epsilon = epsilon;
  path.horizon = T;
  path.breakpoints.push_back(0.0);
  // jump times of N accumulate Exp(1) spacings; in x-time they sit at eps^2 * tau
  double tau = 0.0;
  for (;;) {
    tau += rng.exponential();
    const double x = cell * tau;
    if (x >= T) break;
    path.breakpoints.push_back(x);
  }
  path.breakpoints.push_back(T);
  path.values.resize(path.breakpoints.size() - 1);
  double level = 1.0 / epsilon;  // N(0) = 0
  for (auto& v : path.values) {
    v = level;
    level = -level;
  }
  return path;
}

double value_at(const KernelPath& path, double x) {
  if (x < 0.0 || x > path.horizon) throw ValidationError("value_at: x outside [0, horizon]");
  // index of the interval [b_i, b_{i+1}) containing x; x == horizon maps to the last one
  auto it = std::upper_bound(path.breakpoints.begin(), path.breakpoints.end(), x);
  std::size_t idx = static_cast<std::size_t>(it - path.breakpoints.begin());
  if (idx == 0) idx = 1;
  std::size_t cell = idx - 1;
  if (cell >= path.values.size()) cell = path.values.size() - 1;
  return path.values[cell];
}

double eta_at(const KernelPath& path, double t) {
  if (t < 0.0 || t > path.horizon * (1.0 + 1e-12))
    throw ValidationError("eta_at: t outside [0, horizon]");
  t = std::min(t, path.horizon);
  double acc = 0.0;
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    const double lo = path.breakpoints[i];
    const double hi = path.breakpoints[i + 1];
    if (t <= lo) break;
    acc += path.values[i] * (std::min(hi, t) - lo);
  }
  return acc;
}

std::vector<double> cell_weights(const KernelPath& path, std::span<const double> partition) {
  if (partition.size() < 2) throw ValidationError("cell_weights: partition needs >= 2 points");
  const double t = partition.back();
  if (partition.front() != 0.0 || t > path.horizon * (1.0 + 1e-12))
    throw ValidationError("cell_weights: partition must run from 0 to t <= horizon");
  for (std::size_t i = 0; i + 1 < partition.size(); ++i)
    if (!(partition[i] < partition[i + 1]))
      throw ValidationError("cell_weights: partition must be strictly increasing");
  // refinement: every path breakpoint inside (0, t) must appear in the partition
  for (double b : path.breakpoints) {
    if (b <= 0.0 || b >= t) continue;
    auto it = std::lower_bound(partition.begin(), partition.end(), b - 1e-12);
    if (it == partition.end() || std::abs(*it - b) > 1e-12)
      throw ValidationError("cell_weights: partition does not refine path breakpoints");
  }
  std::vector<double> weights(partition.size() - 1);
  for (std::size_t j = 0; j + 1 < partition.size(); ++j) {
    const double mid = 0.5 * (partition[j] + partition[j + 1]);
    weights[j] = value_at(path, std::min(mid, path.horizon)) * (partition[j + 1] - partition[j]);
  }
  return weights;
}

}  // namespace chaos
