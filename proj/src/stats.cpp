#include "chaos_approx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "chaos_approx/chaos_reference.hpp"
#include "chaos_approx/errors.hpp"
#include "chaos_approx/threads.hpp"

namespace chaos {

namespace {

constexpr double kKsAllowance = 0.02;  // gridding-bias allowance in KS units
constexpr std::size_t kEnergyCap = 1000;
constexpr int kEnergyPermutations = 200;

double sd_of(std::span<const double> xs, double mean) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return xs.size() > 1 ? std::sqrt(acc / static_cast<double>(xs.size() - 1)) : 0.0;
}

std::vector<std::size_t> stride_indices(std::size_t rows, std::size_t cap) {
  const std::size_t take = std::min(rows, cap);
  std::vector<std::size_t> idx(take);
  for (std::size_t i = 0; i < take; ++i) idx[i] = i * rows / take;
  return idx;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

MomentReport estimate_moments(std::span<const double> samples, double epsilon, double time) {
  if (samples.size() < 2) throw ValidationError("estimate_moments: need at least 2 samples");
  const auto n = static_cast<double>(samples.size());
  MomentReport r;
  r.count = static_cast<long>(samples.size());
  r.epsilon = epsilon;
  r.time = time;

  std::vector<double> sq(samples.size()), q4(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i];
    sq[i] = x * x;
    q4[i] = sq[i] * sq[i];
    m2 += sq[i];
    m4 += q4[i];
  }
  m2 /= n;
  m4 /= n;
  r.mean = mean;
  r.m2 = m2;
  r.m4 = m4;
  r.mean_se = sd_of(samples, mean) / std::sqrt(n);
  r.m2_se = sd_of(sq, m2) / std::sqrt(n);
  r.m4_se = sd_of(q4, m4) / std::sqrt(n);
  return r;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("ks_statistic: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= v) ++i;
    while (j < sb.size() && sb[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_1pct(std::size_t n, std::size_t m) {
  // c(0.01) = sqrt(-ln(0.005)/2)
  return 1.6276236115189503 *
         std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

double ks_standard_error(std::size_t n, std::size_t m) {
  return 0.26 *
         std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

EnergyResult energy_test(const SampleMatrix& a, const SampleMatrix& b, std::size_t cap,
                         int permutations, std::uint64_t seed) {
  if (a.cols != b.cols) throw ValidationError("energy_test: column counts differ");
  if (a.rows < 2 || b.rows < 2) throw ValidationError("energy_test: need >= 2 rows per side");
  const auto ia = stride_indices(a.rows, cap);
  const auto ib = stride_indices(b.rows, cap);
  const std::size_t na = ia.size(), nb = ib.size(), N = na + nb;
  const std::size_t d = a.cols;

  // pooled rows, then one pairwise distance matrix reused by every permutation
  std::vector<double> pool(N * d);
  for (std::size_t r = 0; r < na; ++r)
    for (std::size_t c = 0; c < d; ++c) pool[r * d + c] = a.at(ia[r], c);
  for (std::size_t r = 0; r < nb; ++r)
    for (std::size_t c = 0; c < d; ++c) pool[(na + r) * d + c] = b.at(ib[r], c);

  std::vector<double> dist(N * N, 0.0);
  parallel_for(N, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r)
      for (std::size_t s = 0; s < N; ++s) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = pool[r * d + c] - pool[s * d + c];
          acc += diff * diff;
        }
        dist[r * N + s] = std::sqrt(acc);
      }
  });

  const auto statistic_for = [&](const std::vector<std::uint8_t>& is_a) {
    double s_ab = 0.0, s_aa = 0.0, s_bb = 0.0;
    for (std::size_t r = 0; r < N; ++r)
      for (std::size_t s = r + 1; s < N; ++s) {
        const double v = dist[r * N + s];
        if (is_a[r] != is_a[s])
          s_ab += v;
        else if (is_a[r])
          s_aa += v;
        else
          s_bb += v;
      }
    const double fa = static_cast<double>(na), fb = static_cast<double>(nb);
    const double e2 = 2.0 * s_ab / (fa * fb) - 2.0 * s_aa / (fa * fa) - 2.0 * s_bb / (fb * fb);
    return fa * fb / (fa + fb) * e2;
  };

  std::vector<std::uint8_t> labels(N, 0);
  for (std::size_t r = 0; r < na; ++r) labels[r] = 1;

  EnergyResult out;
  out.used_a = na;
  out.used_b = nb;
  out.permutations = permutations;
  out.statistic = statistic_for(labels);

  RandomStream shuffler(mix_seed(seed, 0xE1ULL));
  std::vector<double> null_stats(static_cast<std::size_t>(permutations));
  std::vector<std::uint8_t> perm = labels;
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t k = N - 1; k > 0; --k) {
      const std::size_t j = static_cast<std::size_t>(shuffler.next_u64() % (k + 1));
      std::swap(perm[k], perm[j]);
    }
    null_stats[static_cast<std::size_t>(p)] = statistic_for(perm);
  }
  std::sort(null_stats.begin(), null_stats.end());
  const std::size_t q = std::min(null_stats.size() - 1,
                                 static_cast<std::size_t>(std::ceil(0.99 * permutations)) - 1);
  out.threshold = null_stats[q];
  return out;
}

SampleMatrix sample_Y(const TestFunction& f, KernelKind kind, XiKind xi, double epsilon,
                      std::span<const double> times, int count, const QuadratureConfig& cfg,
                      std::uint64_t seed) {
  if (count < 1) throw ValidationError("sample_Y: count must be >= 1");
  SampleMatrix out(static_cast<std::size_t>(count), times.size());
  const double T = f.horizon();
  constexpr std::size_t kChunk = 1024;
  std::vector<KernelPath> paths;
  for (std::size_t base = 0; base < out.rows; base += kChunk) {
    const std::size_t chunk = std::min(kChunk, out.rows - base);
    paths.clear();
    paths.reserve(chunk);
    for (std::size_t i = 0; i < chunk; ++i) {
      RandomStream stream = RandomStream::derived(seed, base + i);
      paths.push_back(kind == KernelKind::Donsker ? sample_donsker(epsilon, T, xi, stream)
                                                  : sample_kac_stroock(epsilon, T, stream));
    }
    const SampleMatrix block = evaluate_Y_batch(f, paths, times, cfg);
    std::copy(block.data.begin(), block.data.end(), out.data.begin() + base * out.cols);
  }
  return out;
}

namespace {

QuadratureConfig rule_for(const QuadratureConfig& cfg, const TestFunction& f) {
  QuadratureConfig c = cfg;
  if (c.diagonal_rule == DiagonalRule::ExactGeometryN2 && f.arity() != 2)
    c.diagonal_rule = DiagonalRule::CellCenter;
  return c;
}

// shared-path evaluation of several integrands; columns are (f, time) pairs
SampleMatrix sample_Y_joint(std::span<const TestFunction> fs, KernelKind kind, XiKind xi,
                            double epsilon, std::span<const double> times, int count,
                            const QuadratureConfig& cfg, std::uint64_t seed) {
  SampleMatrix out(static_cast<std::size_t>(count), fs.size() * times.size());
  const double T = fs.front().horizon();
  constexpr std::size_t kChunk = 1024;
  std::vector<KernelPath> paths;
  for (std::size_t base = 0; base < out.rows; base += kChunk) {
    const std::size_t chunk = std::min(kChunk, out.rows - base);
    paths.clear();
    for (std::size_t i = 0; i < chunk; ++i) {
      RandomStream stream = RandomStream::derived(seed, base + i);
      paths.push_back(kind == KernelKind::Donsker ? sample_donsker(epsilon, T, xi, stream)
                                                  : sample_kac_stroock(epsilon, T, stream));
    }
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const SampleMatrix block = evaluate_Y_batch(fs[k], paths, times, rule_for(cfg, fs[k]));
      for (std::size_t r = 0; r < chunk; ++r)
        for (std::size_t c = 0; c < times.size(); ++c)
          out.at(base + r, k * times.size() + c) = block.at(r, c);
    }
  }
  return out;
}

}  // namespace

BoundCheckResult check_second_moment_bound(const TestFunction& f, KernelKind kind, XiKind xi,
                                           std::span<const double> epsilons,
                                           std::span<const double> times, int count,
                                           const QuadratureConfig& cfg, std::uint64_t seed) {
  if (f.arity() > 3)
    throw CapabilityError("check_second_moment_bound: arity must be <= 3");
  if (epsilons.empty() || times.empty())
    throw ValidationError("check_second_moment_bound: need epsilons and times");
  BoundCheckResult out;
  out.norm_sq = l2_norm_sq(f);

  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const SampleMatrix ys =
        sample_Y(f, kind, xi, epsilons[e], times, count, cfg, mix_seed(seed, e));
    for (std::size_t c = 0; c < times.size(); ++c) {
      std::vector<double> col = ys.column(c);
      out.cells.push_back(estimate_moments(col, epsilons[e], times[c]));
      for (double& v : col) v = std::abs(v);
      const MomentReport abs = estimate_moments(col, epsilons[e], times[c]);
      out.abs_mean.push_back(abs.mean);
      out.abs_mean_se.push_back(abs.mean_se);
    }
  }

  double factorial = 1.0;
  for (int i = 2; i <= f.arity(); ++i) factorial *= i;
  if (kind == KernelKind::Donsker) {
    out.bound_constant = factorial;
    out.calibrated = false;
  } else {
    // the constant exists but is not named; calibrate at the largest epsilon
    // with the x5 non-blow-up headroom, floored at n! (the second moment
    // converges into the n! ||f||^2 ceiling of the limit law, so a smaller
    // anchor only reflects large-epsilon suppression)
    double worst = 0.0;
    for (const auto& cell : out.cells)
      if (cell.epsilon == epsilons.front()) worst = std::max(worst, cell.m2);
    const double anchor = out.norm_sq > 0.0 ? 5.0 * worst / out.norm_sq : factorial;
    out.bound_constant = std::max(factorial, anchor);
    out.calibrated = true;
  }

  const double bound = out.bound_constant * out.norm_sq;
  double statistic = 0.0;
  bool pass = true;
  for (const auto& cell : out.cells) {
    const double allowed = bound + 3.0 * cell.m2_se;
    if (cell.m2 > allowed) pass = false;
    if (allowed > 0.0) statistic = std::max(statistic, cell.m2 / allowed);
  }
  out.verdict.name = "second_moment_bound";
  out.verdict.passed = pass;
  out.verdict.statistic = statistic;
  out.verdict.threshold = 1.0;
  out.verdict.details = std::string(kind == KernelKind::Donsker ? "C = n! = " : "C calibrated = ") +
                        format_double(out.bound_constant) +
                        ", ||f||^2 = " + format_double(out.norm_sq) +
                        "; pass iff m2 <= C ||f||^2 + 3 se at every (eps, t)";

  // derived first-moment shadow: E|Y| <= sqrt(E Y^2) <= sqrt(C) ||f||
  const double abs_bound = std::sqrt(std::max(0.0, bound));
  bool abs_pass = true;
  double abs_statistic = 0.0;
  for (std::size_t i = 0; i < out.abs_mean.size(); ++i) {
    const double allowed = abs_bound + 3.0 * out.abs_mean_se[i];
    if (out.abs_mean[i] > allowed) abs_pass = false;
    if (allowed > 0.0) abs_statistic = std::max(abs_statistic, out.abs_mean[i] / allowed);
  }
  out.first_moment_verdict.name = "first_moment_bound";
  out.first_moment_verdict.passed = abs_pass;
  out.first_moment_verdict.statistic = abs_statistic;
  out.first_moment_verdict.threshold = 1.0;
  out.first_moment_verdict.details =
      "pass iff E|Y| <= sqrt(C) ||f|| + 3 se at every (eps, t); sqrt(C) ||f|| = " +
      format_double(abs_bound);
  return out;
}

FddResult fdd_convergence_test(const TestFunction& f, KernelKind kind, XiKind xi,
                               std::span<const double> epsilons, std::span<const double> times,
                               int count, const QuadratureConfig& cfg, double reference_h,
                               std::uint64_t seed) {
  if (epsilons.empty() || times.empty())
    throw ValidationError("fdd_convergence_test: need epsilons and times");

  RandomStream ref_stream(mix_seed(seed, 0x5EFULL));
  const std::vector<ReferenceSample> refs =
      sample_reference_law(f, times, count, reference_h, ref_stream);
  SampleMatrix ref(refs.size(), times.size());
  for (std::size_t r = 0; r < refs.size(); ++r)
    for (std::size_t c = 0; c < times.size(); ++c) ref.at(r, c) = refs[r].values[c];

  FddResult out;
  const QuadratureConfig used = rule_for(cfg, f);
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const SampleMatrix ys =
        sample_Y(f, kind, xi, epsilons[e], times, count, used, mix_seed(seed, e));
    DistanceReport d;
    d.epsilon = epsilons[e];
    d.count_a = static_cast<long>(ys.rows);
    d.count_b = static_cast<long>(ref.rows);
    for (std::size_t c = 0; c < times.size(); ++c)
      d.ks.push_back(ks_statistic(ys.column(c), ref.column(c)));
    const EnergyResult er =
        energy_test(ys, ref, kEnergyCap, kEnergyPermutations, mix_seed(seed, 100 + e));
    d.energy = er.statistic;
    d.energy_threshold = er.threshold;
    out.distances.push_back(std::move(d));
  }

  const double ks_crit = ks_critical_1pct(static_cast<std::size_t>(count),
                                          static_cast<std::size_t>(count)) +
                         kKsAllowance;
  const double ks_se =
      ks_standard_error(static_cast<std::size_t>(count), static_cast<std::size_t>(count));

  const DistanceReport& last = out.distances.back();
  double worst_last = 0.0;
  for (double v : last.ks) worst_last = std::max(worst_last, v);
  bool pass = worst_last <= ks_crit && last.energy <= last.energy_threshold;
  bool monotone = true;
  for (std::size_t c = 0; c < times.size(); ++c)
    for (std::size_t e = 0; e + 1 < out.distances.size(); ++e)
      if (out.distances[e + 1].ks[c] > out.distances[e].ks[c] + 2.0 * ks_se) monotone = false;
  pass = pass && monotone;

  out.verdict.name = "fdd_convergence";
  out.verdict.passed = pass;
  out.verdict.statistic = worst_last;
  out.verdict.threshold = ks_crit;
  out.verdict.details = "max KS at smallest eps vs 1% critical + " + format_double(kKsAllowance) +
                        "; energy " + format_double(last.energy) + " vs " +
                        format_double(last.energy_threshold) + "; KS sequence non-increasing (2 se slack): " +
                        (monotone ? "yes" : "no");
  return out;
}

FddResult vector_fdd_test(std::span<const TestFunction> fs, KernelKind kind, XiKind xi,
                          std::span<const double> epsilons, std::span<const double> times,
                          int count, const QuadratureConfig& cfg, double reference_h,
                          std::uint64_t seed) {
  if (fs.empty()) throw ValidationError("vector_fdd_test: need at least one integrand");
  if (epsilons.empty() || times.empty())
    throw ValidationError("vector_fdd_test: need epsilons and times");
  for (const auto& f : fs)
    if (f.horizon() != fs.front().horizon())
      throw ValidationError("vector_fdd_test: integrands must share the horizon");

  RandomStream ref_stream(mix_seed(seed, 0xF00ULL));
  const SampleMatrix ref = sample_reference_vector(fs, times, count, reference_h, ref_stream);

  FddResult out;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const SampleMatrix ys =
        sample_Y_joint(fs, kind, xi, epsilons[e], times, count, cfg, mix_seed(seed, e));
    DistanceReport d;
    d.epsilon = epsilons[e];
    d.count_a = static_cast<long>(ys.rows);
    d.count_b = static_cast<long>(ref.rows);
    const EnergyResult er =
        energy_test(ys, ref, kEnergyCap, kEnergyPermutations, mix_seed(seed, 100 + e));
    d.energy = er.statistic;
    d.energy_threshold = er.threshold;
    out.distances.push_back(std::move(d));
  }

  const DistanceReport& last = out.distances.back();
  out.verdict.name = "vector_fdd";
  out.verdict.passed = last.energy <= last.energy_threshold;
  out.verdict.statistic = last.energy;
  out.verdict.threshold = last.energy_threshold;
  out.verdict.details = "joint energy statistic at smallest eps vs permutation 99% threshold (d = " +
                        std::to_string(fs.size()) + ")";
  return out;
}

TightnessResult tightness_fourth_moment_test(const TestFunction& f, KernelKind kind, XiKind xi,
                                             std::span<const double> epsilons,
                                             std::span<const std::pair<double, double>> pairs,
                                             int count, const QuadratureConfig& cfg,
                                             std::uint64_t seed) {
  if (f.arity() != 2) throw CapabilityError("tightness_fourth_moment_test: arity must be 2");
  if (epsilons.empty() || pairs.empty())
    throw ValidationError("tightness_fourth_moment_test: need epsilons and pairs");
  for (const auto& [s, t] : pairs)
    if (s > t) throw ValidationError("tightness_fourth_moment_test: pair with s > t");

  std::vector<double> times;
  for (const auto& [s, t] : pairs) {
    times.push_back(s);
    times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const auto col_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), v) -
                                    times.begin());
  };

  TightnessResult out;
  const QuadratureConfig used = rule_for(cfg, f);
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const SampleMatrix ys =
        sample_Y(f, kind, xi, epsilons[e], times, count, used, mix_seed(seed, e));
    for (const auto& [s, t] : pairs) {
      TightnessCell cell;
      cell.epsilon = epsilons[e];
      cell.s = s;
      cell.t = t;
      const double inc = increment_l2(f, s, t);
      cell.denom = inc * inc;
      if (s == t || cell.denom == 0.0) {
        cell.skipped = true;
        out.cells.push_back(cell);
        continue;
      }
      std::vector<double> diff(ys.rows);
      const std::size_t cs = col_of(s), ct = col_of(t);
      for (std::size_t r = 0; r < ys.rows; ++r) diff[r] = ys.at(r, ct) - ys.at(r, cs);
      const MomentReport m = estimate_moments(diff, epsilons[e], t);
      cell.m4 = m.m4;
      cell.m4_se = m.m4_se;
      cell.ratio = m.m4 / cell.denom;
      cell.ratio_se = m.m4_se / cell.denom;
      out.cells.push_back(cell);
    }
  }

  const auto max_ratio_at = [&](double eps, double& se_at_max) {
    double best = -1.0;
    se_at_max = 0.0;
    for (const auto& c : out.cells)
      if (!c.skipped && c.epsilon == eps && c.ratio > best) {
        best = c.ratio;
        se_at_max = c.ratio_se;
      }
    return best;
  };

  double se_small = 0.0, se_large = 0.0;
  const double rho_small = max_ratio_at(epsilons.back(), se_small);
  const double rho_large = max_ratio_at(epsilons.front(), se_large);

  out.verdict.name = "tightness_fourth_moment";
  if (rho_small < 0.0 || rho_large < 0.0) {
    out.verdict.passed = false;
    out.verdict.details = "no usable (s,t) pair at an anchor epsilon; all cells skipped";
    return out;
  }
  const double propagated = std::sqrt(se_small * se_small + 25.0 * se_large * se_large);
  out.verdict.statistic = rho_small;
  out.verdict.threshold = 5.0 * rho_large + 3.0 * propagated;
  out.verdict.passed = rho_small <= out.verdict.threshold;
  out.verdict.details = "max ratio at eps=" + format_double(epsilons.back()) + " is " +
                        format_double(rho_small) + "; 5 x max at eps=" +
                        format_double(epsilons.front()) + " (" + format_double(rho_large) +
                        ") + 3 se = " + format_double(out.verdict.threshold);
  return out;
}

CovarianceResult kac_stroock_covariance_check(double T, std::span<const double> epsilons,
                                              std::span<const std::pair<double, double>> pairs,
                                              int count, std::uint64_t seed) {
  if (count < 2) throw ValidationError("kac_stroock_covariance_check: count must be >= 2");
  for (const auto& [x, y] : pairs)
    if (x < 0.0 || x > T || y < 0.0 || y > T)
      throw ValidationError("kac_stroock_covariance_check: pair outside [0, T]");

  CovarianceResult out;
  double worst = 0.0;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const double eps = epsilons[e];
    std::vector<std::vector<double>> products(pairs.size(),
                                              std::vector<double>(static_cast<std::size_t>(count)));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        RandomStream stream = RandomStream::derived(mix_seed(seed, e), i);
        const KernelPath path = sample_kac_stroock(eps, T, stream);
        for (std::size_t p = 0; p < pairs.size(); ++p)
          products[p][i] = value_at(path, pairs[p].first) * value_at(path, pairs[p].second);
      }
    });
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const MomentReport m = estimate_moments(products[p], eps, 0.0);
      CovarianceCell cell;
      cell.epsilon = eps;
      cell.x = pairs[p].first;
      cell.y = pairs[p].second;
      cell.empirical = m.mean;
      cell.se = m.mean_se;
      cell.expected =
          std::exp(-2.0 * std::abs(cell.x - cell.y) / (eps * eps)) / (eps * eps);
      out.cells.push_back(cell);
      if (cell.se > 0.0)
        worst = std::max(worst, std::abs(cell.empirical - cell.expected) / cell.se);
    }
  }
  out.verdict.name = "kac_stroock_covariance";
  out.verdict.statistic = worst;
  out.verdict.threshold = 4.0;
  out.verdict.passed = worst <= 4.0;
  out.verdict.details = "max |empirical - exp(-2|x-y|/eps^2)/eps^2| in standard errors";
  return out;
}

}  // namespace chaos
