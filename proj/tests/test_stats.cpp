#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "chaos_approx/chaos_reference.hpp"
#include "chaos_approx/errors.hpp"
#include "chaos_approx/experiment.hpp"
#include "chaos_approx/stats.hpp"

using namespace chaos;

namespace {

TestFunction one2() { return TestFunction::named(NamedForm::One, 2, 1.0); }

TestFunction aligned_step() {
  // gap 0.375 between the interval blocks; endpoints on eighths
  return TestFunction::steps({{1.0, {{0.0, 0.25}, {0.625, 0.875}}}}, 2, 1.0);
}

SampleMatrix matrix_from(const std::vector<ReferenceSample>& samples) {
  SampleMatrix m(samples.size(), samples.front().values.size());
  for (std::size_t r = 0; r < samples.size(); ++r)
    for (std::size_t c = 0; c < m.cols; ++c) m.at(r, c) = samples[r].values[c];
  return m;
}

}  // namespace

TEST_CASE("estimate_moments basics") {
  const std::vector<double> flat = {1.0, 1.0, 1.0, 1.0};
  const MomentReport a = estimate_moments(flat);
  CHECK(a.mean == 1.0);
  CHECK(a.m2 == 1.0);
  CHECK(a.m4 == 1.0);
  CHECK(a.mean_se == 0.0);
  CHECK(a.m2_se == 0.0);
  CHECK(a.m4_se == 0.0);

  const std::vector<double> pm = {-1.0, 1.0};
  const MomentReport b = estimate_moments(pm);
  CHECK(b.mean == 0.0);
  CHECK(b.m2 == 1.0);

  const std::vector<double> single = {1.0};
  CHECK_THROWS_AS(estimate_moments(single), ValidationError);

  RandomStream rng(9);
  std::vector<double> g(100000);
  for (auto& x : g) x = rng.gaussian();
  const MomentReport c = estimate_moments(g);
  CHECK(std::abs(c.m2 - 1.0) <= 4.0 * c.m2_se);
  CHECK(std::abs(c.m4 - 3.0) <= 4.0 * c.m4_se);
}

TEST_CASE("ks_statistic on hand samples") {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  CHECK(ks_statistic(a, a) == 0.0);
  const std::vector<double> b = {5.0, 6.0, 7.0, 8.0};
  CHECK(ks_statistic(a, b) == doctest::Approx(1.0));
  const std::vector<double> c = {1.5, 2.5, 3.5, 4.5};
  CHECK(ks_statistic(a, c) == doctest::Approx(0.25));
  CHECK(ks_critical_1pct(10000, 10000) ==
        doctest::Approx(1.6276 * std::sqrt(2.0 / 10000)).epsilon(1e-3));
}

TEST_CASE("two-sample ks null calibration on independent reference batches") {
  // two same-law batches: the 1% critical value must reject rarely
  const TestFunction f = one2();
  const std::vector<double> times = {1.0};
  const int count = 2000;
  int rejections = 0;
  for (int rep = 0; rep < 100; ++rep) {
    RandomStream ra(mix_seed(90210, 2 * rep));
    RandomStream rb(mix_seed(90210, 2 * rep + 1));
    auto a = sample_reference_law(f, times, count, 1e-3, ra);
    auto b = sample_reference_law(f, times, count, 1e-3, rb);
    std::vector<double> va(a.size()), vb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) va[i] = a[i].values[0];
    for (std::size_t i = 0; i < b.size(); ++i) vb[i] = b[i].values[0];
    if (ks_statistic(va, vb) > ks_critical_1pct(count, count)) ++rejections;
  }
  CHECK(rejections <= 2);
}

TEST_CASE("energy test: same law accepts, shifted law rejects") {
  const TestFunction f = one2();
  const std::vector<double> times = {0.5, 1.0};
  RandomStream ra(101), rb(102);
  const SampleMatrix a = matrix_from(sample_reference_law(f, times, 2000, 1e-3, ra));
  SampleMatrix b = matrix_from(sample_reference_law(f, times, 2000, 1e-3, rb));
  const EnergyResult same = energy_test(a, b, 800, 200, 7);
  CHECK(same.statistic <= same.threshold);

  for (auto& v : b.data) v += 0.5;
  const EnergyResult shifted = energy_test(a, b, 800, 200, 7);
  CHECK(shifted.statistic > shifted.threshold);

  SampleMatrix cols(10, 1);
  CHECK_THROWS_AS(energy_test(a, cols, 100, 50, 1), ValidationError);
}

TEST_CASE("sample_Y is deterministic across worker counts") {
  const TestFunction f = one2();
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 4;
  cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;
  setenv("CHAOS_APPROX_THREADS", "1", 1);
  const SampleMatrix a =
      sample_Y(f, KernelKind::Donsker, XiKind::Rademacher, 0.3, times, 600, cfg, 99);
  setenv("CHAOS_APPROX_THREADS", "6", 1);
  const SampleMatrix b =
      sample_Y(f, KernelKind::Donsker, XiKind::Rademacher, 0.3, times, 600, cfg, 99);
  unsetenv("CHAOS_APPROX_THREADS");
  CHECK(a.data == b.data);
}

TEST_CASE("mean centering across kernels and integrands") {
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 8;
  cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;
  int combo = 0;
  for (const TestFunction& f : {one2(), aligned_step()}) {
    for (KernelKind kind : {KernelKind::Donsker, KernelKind::KacStroock}) {
      for (double eps : {0.3, 0.15}) {
        const SampleMatrix ys =
            sample_Y(f, kind, XiKind::Rademacher, eps, times, 5000, cfg, 1234 + combo);
        const MomentReport m = estimate_moments(ys.column(0), eps, 1.0);
        CHECK(std::abs(m.mean) <= 4.0 * m.mean_se);
        ++combo;
      }
    }
  }
}

TEST_CASE("donsker second-moment bound over the integrand menu") {
  // m2 <= n! ||f||^2 + 3 se for every (eps, t) cell
  RandomStream rng(55);
  std::vector<double> grid_vals(16 * 16);
  for (auto& v : grid_vals) v = 2.0 * rng.uniform01() - 1.0;
  const TestFunction grid_f = symmetrize(TestFunction::grid(16, grid_vals, 2, 1.0));

  const std::vector<double> epsilons = {0.5, 0.3, 0.2, 0.1};
  const std::vector<double> times = {0.5, 1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 16;
  cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;
  int idx = 0;
  for (const TestFunction& f :
       {one2(), TestFunction::named(NamedForm::SumCoords, 2, 1.0), aligned_step(), grid_f}) {
    const BoundCheckResult r = check_second_moment_bound(
        f, KernelKind::Donsker, XiKind::Rademacher, epsilons, times, 2000, cfg, 777 + idx);
    CHECK(r.verdict.passed);
    CHECK(r.first_moment_verdict.passed);  // E|Y| <= sqrt(n!) ||f|| + 3 se
    CHECK(r.bound_constant == 2.0);        // n! for n = 2
    CHECK_FALSE(r.calibrated);
    REQUIRE(r.cells.size() == epsilons.size() * times.size());
    REQUIRE(r.abs_mean.size() == r.cells.size());
    ++idx;
  }

  // the zero integrand passes trivially
  const TestFunction zero = TestFunction::grid(2, std::vector<double>(4, 0.0), 2, 1.0);
  const BoundCheckResult z = check_second_moment_bound(
      zero, KernelKind::Donsker, XiKind::Rademacher, epsilons, times, 100, cfg, 5);
  CHECK(z.verdict.passed);
  CHECK(z.norm_sq == 0.0);
}

TEST_CASE("donsker bound holds for arity 3 through the dense tuple sum") {
  const std::vector<double> epsilons = {0.35, 0.3};
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 8;
  cfg.diagonal_rule = DiagonalRule::CellCenter;
  const TestFunction one3 = TestFunction::named(NamedForm::One, 3, 1.0);
  const BoundCheckResult r = check_second_moment_bound(
      one3, KernelKind::Donsker, XiKind::Rademacher, epsilons, times, 500, cfg, 44);
  CHECK(r.bound_constant == 6.0);  // 3!
  CHECK(r.verdict.passed);

  const TestFunction one4 = TestFunction::named(NamedForm::One, 4, 1.0);
  CHECK_THROWS_AS(check_second_moment_bound(one4, KernelKind::Donsker, XiKind::Rademacher,
                                            epsilons, times, 10, cfg, 1),
                  CapabilityError);
}

TEST_CASE("kac-stroock bound check calibrates and passes") {
  const std::vector<double> epsilons = {0.5, 0.3, 0.2};
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 4;
  cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;
  const BoundCheckResult r = check_second_moment_bound(
      one2(), KernelKind::KacStroock, XiKind::Rademacher, epsilons, times, 3000, cfg, 31);
  CHECK(r.calibrated);
  CHECK(r.verdict.passed);
  CHECK(r.bound_constant > 0.0);
}

TEST_CASE("second moment approaches the chaos variance as eps shrinks") {
  // m2 -> 2 ||f restricted||^2 = 2 for f = 1 at t = 1
  const std::vector<double> epsilons = {0.1, 0.05, 0.02};
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 1;
  cfg.diagonal_rule = DiagonalRule::CellCenter;
  std::vector<double> m2s;
  double last_se = 0.0;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const SampleMatrix ys = sample_Y(one2(), KernelKind::Donsker, XiKind::Rademacher,
                                     epsilons[e], times, 3000, cfg, 8000 + e);
    const MomentReport m = estimate_moments(ys.column(0), epsilons[e], 1.0);
    m2s.push_back(m.m2);
    last_se = m.m2_se;
  }
  CHECK(m2s[0] < m2s[1]);
  CHECK(m2s[1] < m2s[2]);
  CHECK(std::abs(m2s.back() - 2.0) <= 3.0 * last_se + 0.1);
}

TEST_CASE("fdd: exact product regime converges and passes") {
  // elementary step, gaussian xi, eps^2 grid-aligned with the endpoints:
  // the approximant law equals the reference law exactly at every eps
  const TestFunction f = aligned_step();
  const std::vector<double> epsilons = {0.25, 0.125};
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 8;
  cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;
  const FddResult r = fdd_convergence_test(f, KernelKind::Donsker, XiKind::StandardGaussian,
                                           epsilons, times, 4000, cfg, 1e-3, 2024);
  CHECK(r.verdict.passed);
  REQUIRE(r.distances.size() == 2);
  for (const auto& d : r.distances)
    for (double ks : d.ks) CHECK(ks < ks_critical_1pct(4000, 4000) + 0.02);
}

TEST_CASE("fdd: far-from-limit regime is reported as failing") {
  const std::vector<double> epsilons = {0.5, 0.4};
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 4;
  cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;
  const FddResult r = fdd_convergence_test(one2(), KernelKind::Donsker, XiKind::Rademacher,
                                           epsilons, times, 3000, cfg, 1e-3, 99);
  CHECK_FALSE(r.verdict.passed);
  CHECK(r.verdict.statistic > r.verdict.threshold);
}

TEST_CASE("fdd: capability error without a reference law") {
  const TestFunction f3 = TestFunction::named(NamedForm::SumCoords, 3, 1.0);
  const std::vector<double> epsilons = {0.3};
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  CHECK_THROWS_AS(fdd_convergence_test(f3, KernelKind::Donsker, XiKind::Rademacher, epsilons,
                                       times, 100, cfg, 1e-3, 1),
                  CapabilityError);
}

TEST_CASE("vector fdd: disjoint steps and duplicated components") {
  const std::vector<double> epsilons = {0.25, 0.125};
  const std::vector<double> times = {1.0};
  QuadratureConfig cfg;
  cfg.grid_m = 8;
  cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;

  // two elementary steps with disjoint supports: the limit components are
  // independent products of increments
  const TestFunction fa = TestFunction::steps({{1.0, {{0.0, 0.125}, {0.5, 0.625}}}}, 2, 1.0);
  const TestFunction fb = TestFunction::steps({{1.0, {{0.25, 0.375}, {0.75, 0.875}}}}, 2, 1.0);
  const std::vector<TestFunction> fs = {fa, fb};
  const FddResult r = vector_fdd_test(fs, KernelKind::Donsker, XiKind::StandardGaussian,
                                      epsilons, times, 3000, cfg, 1e-3, 77);
  CHECK(r.verdict.passed);

  // the same component twice degenerates cleanly
  const std::vector<TestFunction> dup = {fa, fa};
  const FddResult r2 = vector_fdd_test(dup, KernelKind::Donsker, XiKind::StandardGaussian,
                                       epsilons, times, 3000, cfg, 1e-3, 78);
  CHECK(r2.verdict.passed);
}

TEST_CASE("tightness: skips, denominators, and a stable-ratio pass") {
  const std::vector<double> epsilons = {0.3, 0.25};
  const std::vector<std::pair<double, double>> pairs = {{0.5, 0.5}, {0.0, 1.0}, {0.5, 1.0}};
  QuadratureConfig cfg;
  cfg.grid_m = 4;
  cfg.diagonal_rule = DiagonalRule::ExactGeometryN2;
  const TightnessResult r = tightness_fourth_moment_test(
      one2(), KernelKind::Donsker, XiKind::Rademacher, epsilons, pairs, 4000, cfg, 11);
  REQUIRE(r.cells.size() == 6);
  CHECK(r.cells[0].skipped);                        // s == t
  CHECK(r.cells[1].denom == doctest::Approx(1.0));  // increment_l2(1,0,1)^2
  CHECK(r.verdict.passed);

  CHECK_THROWS_AS(
      tightness_fourth_moment_test(TestFunction::named(NamedForm::One, 3, 1.0),
                                   KernelKind::Donsker, XiKind::Rademacher, epsilons, pairs, 100,
                                   cfg, 1),
      CapabilityError);
  const std::vector<std::pair<double, double>> bad = {{0.8, 0.2}};
  CHECK_THROWS_AS(tightness_fourth_moment_test(one2(), KernelKind::Donsker, XiKind::Rademacher,
                                               epsilons, bad, 100, cfg, 1),
                  ValidationError);
}

TEST_CASE("kac-stroock covariance verdict") {
  const std::vector<double> epsilons = {0.5, 0.2};
  const std::vector<std::pair<double, double>> pairs = {
      {0.1, 0.2}, {0.3, 0.3}, {0.05, 0.6}, {0.9, 1.0}};
  const CovarianceResult r = kac_stroock_covariance_check(1.0, epsilons, pairs, 20000, 2718);
  CHECK(r.verdict.passed);
  REQUIRE(r.cells.size() == 8);
  for (const auto& c : r.cells) {
    CHECK(c.expected == doctest::Approx(std::exp(-2.0 * std::abs(c.x - c.y) /
                                                 (c.epsilon * c.epsilon)) /
                                        (c.epsilon * c.epsilon)));
  }
}

TEST_CASE("run_experiment: determinism across runs and worker counts") {
  ExperimentPlan plan;
  plan.kernel = KernelKind::Donsker;
  plan.xi = XiKind::Rademacher;
  plan.epsilons = {0.4, 0.3};
  plan.times = {1.0};
  plan.count = 300;
  plan.grid_m = 4;
  plan.seed = 42;
  plan.tests = {"bounds"};

  setenv("CHAOS_APPROX_THREADS", "1", 1);
  const ExperimentReport a = run_experiment(plan);
  const std::string ja = report_to_json(a);
  setenv("CHAOS_APPROX_THREADS", "8", 1);
  const ExperimentReport b = run_experiment(plan);
  const std::string jb = report_to_json(b);
  unsetenv("CHAOS_APPROX_THREADS");

  // byte-identical except the labeled wall-clock line
  const auto strip = [](const std::string& s) {
    std::string out;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t end = s.find('\n', pos);
      if (end == std::string::npos) end = s.size();
      const std::string line = s.substr(pos, end - pos);
      if (line.find("wall_clock_seconds") == std::string::npos) out += line + "\n";
      pos = end + 1;
    }
    return out;
  };
  CHECK(strip(ja) == strip(jb));
  CHECK(ja.find("\"all_passed\": true") != std::string::npos);
}

TEST_CASE("empty test list produces a config-echo-only report") {
  ExperimentPlan plan;
  plan.tests.clear();
  plan.count = 10;
  const ExperimentReport r = run_experiment(plan);
  CHECK(r.all_passed);
  const std::string j = report_to_json(r);
  CHECK(j.find("\"results\": {}") != std::string::npos);
  CHECK(j.find("\"plan\"") != std::string::npos);
}

TEST_CASE("experiment validation comes before sampling") {
  ExperimentPlan plan;
  plan.tests = {"covariance"};
  plan.kernel = KernelKind::Donsker;  // covariance needs kac_stroock
  CHECK_THROWS_AS(run_experiment(plan), CapabilityError);
}
