#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "chaos_approx/chaos_reference.hpp"
#include "chaos_approx/errors.hpp"
#include "chaos_approx/rng.hpp"
#include "support/oracle.hpp"

using namespace chaos;


TEST_CASE("brownian grid basics") {
  RandomStream rng(1);
  const BrownianGrid W = sample_brownian(1e-3, 1.0, rng);
  CHECK(W.cumulative[0] == 0.0);
  REQUIRE(W.cumulative.size() == W.increments.size() + 1);
  for (std::size_t i = 0; i < W.steps(); ++i)
    CHECK(W.cumulative[i + 1] - W.cumulative[i] == W.increments[i]);
  CHECK_THROWS_AS(sample_brownian(0.0, 1.0, rng), ValidationError);
  CHECK_THROWS_AS(sample_brownian(2.0, 1.0, rng), ValidationError);
}

TEST_CASE("brownian endpoint variance and increment mean") {
  const int n = 10000;
  double m2 = 0.0, mean_inc = 0.0;
  long inc_count = 0;
  for (int i = 0; i < n; ++i) {
    RandomStream rng = RandomStream::derived(77, i);
    const BrownianGrid W = sample_brownian(0.01, 1.0, rng);
    m2 += W.cumulative.back() * W.cumulative.back();
    mean_inc += W.cumulative.back();
    inc_count += static_cast<long>(W.steps());
  }
  m2 /= n;
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  const double per_inc_mean = mean_inc / static_cast<double>(inc_count);
  CHECK(std::abs(per_inc_mean) < 4.0 * 0.1 / std::sqrt(static_cast<double>(inc_count)));
}

TEST_CASE("exact_integral_step: product formula on a hand grid") {
  BrownianGrid W;
  W.step = 0.125;  // min interval gap is 1, so h <= 1/8 is required
  W.horizon = 4.0;
  W.cumulative.resize(33);
  W.cumulative[0] = 0.0;
  for (int i = 0; i < 32; ++i)
    W.cumulative[i + 1] = W.cumulative[i] + 0.1 * static_cast<double>(i % 5 - 2);
  W.increments.resize(32);
  for (int i = 0; i < 32; ++i) W.increments[i] = W.cumulative[i + 1] - W.cumulative[i];
  const TestFunction f = TestFunction::steps({{1.0, {{0.0, 1.0}, {2.0, 3.0}}}}, 2, 4.0);
  const std::vector<double> times = {3.0};
  const ReferenceSample s = exact_integral_step(f, W, times);
  const double w1 = W.cumulative[8], w2 = W.cumulative[16], w3 = W.cumulative[24];
  CHECK(s.values[0] == doctest::Approx(w1 * (w3 - w2)));
  CHECK(s.law_tag == ReferenceLaw::ExactStep);

  const std::vector<double> early = {1.5};
  CHECK(exact_integral_step(f, W, early).values[0] == 0.0);

  const TestFunction two = TestFunction::steps(
      {{1.0, {{0.0, 1.0}, {2.0, 3.0}}}, {2.0, {{1.0, 2.0}, {3.0, 4.0}}}}, 2, 4.0);
  const std::vector<double> t4 = {4.0};
  const double expect = w1 * (w3 - w2) + 2.0 * (w2 - w1) * (W.cumulative[32] - w3);
  CHECK(exact_integral_step(two, W, t4).values[0] == doctest::Approx(expect));

  const TestFunction bad = TestFunction::steps({{1.0, {{0.0, 2.0}, {1.0, 3.0}}}}, 2, 4.0);
  CHECK_THROWS_AS(exact_integral_step(bad, W, t4), ValidationError);
}

TEST_CASE("iterated_ito_n2: f = 1 reduces to W^2 - quadratic variation") {
  const TestFunction one = TestFunction::named(NamedForm::One, 2, 1.0);
  const double h = 1e-4;
  for (int i = 0; i < 20; ++i) {
    RandomStream rng = RandomStream::derived(404, i);
    const BrownianGrid W = sample_brownian(h, 1.0, rng);
    const std::vector<double> times = {1.0};
    const ReferenceSample s = iterated_ito_n2(one, W, times);
    const double w1 = W.cumulative.back();
    // 2 sum W dW = W^2 - sum dW^2; the gap to W^2 - 1 has sd sqrt(2h)
    CHECK(std::abs(s.values[0] - (w1 * w1 - 1.0)) <= 5.0 * std::sqrt(2.0 * h));
  }
  const TestFunction zero = TestFunction::grid(2, std::vector<double>(4, 0.0), 2, 1.0);
  RandomStream rng(11);
  const BrownianGrid W = sample_brownian(1e-3, 1.0, rng);
  const std::vector<double> times = {1.0};
  CHECK(iterated_ito_n2(zero, W, times).values[0] == 0.0);

  const TestFunction asym = TestFunction::grid(2, {0.0, 1.0, 0.0, 0.0}, 2, 1.0);
  CHECK_THROWS_AS(iterated_ito_n2(asym, W, times), ValidationError);
}

TEST_CASE("iterated vs exact step on a shared grid") {
  const TestFunction step = TestFunction::steps(
      {{1.0, {{0.0, 0.25}, {0.5, 0.75}}}, {1.0, {{0.5, 0.75}, {0.0, 0.25}}}}, 2, 1.0);
  REQUIRE(step.is_symmetric());
  const double h = 1.0 / 4096.0;
  const double norm = std::sqrt(l2_norm_sq(step));
  for (int i = 0; i < 10; ++i) {
    RandomStream rng = RandomStream::derived(2020, i);
    const BrownianGrid W = sample_brownian(h, 1.0, rng);
    const std::vector<double> times = {1.0};
    const double a = exact_integral_step(step, W, times).values[0];
    const double b = iterated_ito_n2(step, W, times).values[0];
    CHECK(std::abs(a - b) <= 5.0 * std::sqrt(2.0 * h) * norm);
  }
}

TEST_CASE("hermite closed forms") {
  CHECK(hermite_closed_form(1, 0.5, 0.7) == doctest::Approx(0.7));
  CHECK(hermite_closed_form(2, 1.0, 0.0) == doctest::Approx(-1.0));
  CHECK(hermite_closed_form(3, 1.0, 1.0) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(hermite_closed_form(0, 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(hermite_closed_form(4, 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(hermite_closed_form(2, 0.0, 0.0), ValidationError);

  const TestFunction one = TestFunction::named(NamedForm::One, 2, 1.0);
  const double h = 1e-4;
  for (int i = 0; i < 5; ++i) {
    RandomStream rng = RandomStream::derived(808, i);
    const BrownianGrid W = sample_brownian(h, 1.0, rng);
    const std::vector<double> times = {1.0};
    const double iter = iterated_ito_n2(one, W, times).values[0];
    const double herm = hermite_closed_form(2, 1.0, W.cumulative.back());
    CHECK(std::abs(iter - herm) <= 5.0 * std::sqrt(2.0 * h));
  }

  for (int i = 0; i < 20; ++i) {
    RandomStream rng = RandomStream::derived(909, i);
    const BrownianGrid W = sample_brownian(h, 1.0, rng);
    const double w = W.cumulative.back();
    const double tol = 10.0 * std::sqrt(h) * (1.0 + std::abs(w) * std::abs(w) * std::abs(w));
    CHECK(std::abs(oracle::iterated_ito_n3_one(W, 1.0) - hermite_closed_form(3, 1.0, w)) <= tol);
  }
}

TEST_CASE("sample_reference_law dispatch and laws") {
  const std::vector<double> times = {1.0};
  RandomStream rng(31);

  const TestFunction step = TestFunction::steps({{1.0, {{0.0, 0.25}, {0.5, 0.75}}}}, 2, 1.0);
  auto samples = sample_reference_law(step, times, 50, 1e-3, rng);
  REQUIRE(samples.size() == 50);
  for (const auto& s : samples) CHECK(s.law_tag == ReferenceLaw::ExactStep);

  const TestFunction one = TestFunction::named(NamedForm::One, 2, 1.0);
  auto h2 = sample_reference_law(one, times, 10000, 1e-3, rng);
  CHECK(h2.front().law_tag == ReferenceLaw::HermiteClosedForm);
  double mean = 0.0, m2 = 0.0, m4 = 0.0;
  for (const auto& s : h2) {
    mean += s.values[0];
    m2 += s.values[0] * s.values[0];
    m4 += std::pow(s.values[0], 4);
  }
  mean /= static_cast<double>(h2.size());
  m2 /= static_cast<double>(h2.size());
  m4 /= static_cast<double>(h2.size());
  const double se_m2 = std::sqrt((m4 - m2 * m2) / static_cast<double>(h2.size()));
  CHECK(std::abs(mean) < 4.0 * std::sqrt(2.0 / static_cast<double>(h2.size())));
  CHECK(std::abs(m2 - 2.0) < 4.0 * se_m2);

  const TestFunction sum = TestFunction::named(NamedForm::SumCoords, 2, 1.0);
  auto it = sample_reference_law(sum, times, 3, 1e-3, rng);
  CHECK(it.front().law_tag == ReferenceLaw::IteratedIto);

  const TestFunction sum3 = TestFunction::named(NamedForm::SumCoords, 3, 1.0);
  CHECK_THROWS_AS(sample_reference_law(sum3, times, 2, 1e-3, rng), CapabilityError);

  CHECK(sample_reference_law(one, times, 0, 1e-3, rng).empty());
}

TEST_CASE("references are centered and match the chaos second-moment identity") {
  const std::vector<double> times = {1.0};
  RandomStream rng(32);
  const TestFunction step = TestFunction::steps({{1.5, {{0.0, 0.25}, {0.5, 0.75}}}}, 2, 1.0);
  const double expect = 2.0 * l2_norm_sq(symmetrize(step));
  const int count = 20000;
  auto samples = sample_reference_law(step, times, count, 1e-3, rng);
  double mean = 0.0, m2 = 0.0, m4 = 0.0;
  for (const auto& s : samples) {
    mean += s.values[0];
    m2 += s.values[0] * s.values[0];
    m4 += std::pow(s.values[0], 4);
  }
  mean /= count;
  m2 /= count;
  m4 /= count;
  const double se_m2 = std::sqrt((m4 - m2 * m2) / count);
  const double sd = std::sqrt(m2);
  CHECK(std::abs(mean) < 4.0 * sd / std::sqrt(static_cast<double>(count)));
  CHECK(std::abs(m2 - expect) < 4.0 * se_m2);

  const TestFunction one3 = TestFunction::named(NamedForm::One, 3, 1.0);
  auto h3 = sample_reference_law(one3, times, 20000, 1e-3, rng);
  double m2h = 0.0, m4h = 0.0;
  for (const auto& s : h3) {
    m2h += s.values[0] * s.values[0];
    m4h += std::pow(s.values[0], 4);
  }
  m2h /= static_cast<double>(h3.size());
  m4h /= static_cast<double>(h3.size());
  const double se_h = std::sqrt((m4h - m2h * m2h) / static_cast<double>(h3.size()));
  CHECK(std::abs(m2h - 6.0) < 4.0 * se_h);
}

TEST_CASE("order-2 closed form has mean 0 and variance 2 t^2") {
  for (double t : {0.4, 1.0, 1.7}) {
    RandomStream rng(640 + static_cast<int>(10 * t));
    const int n = 20000;
    double mean = 0.0, m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = std::sqrt(t) * rng.gaussian();
      const double v = hermite_closed_form(2, t, w);
      mean += v;
      m2 += v * v;
      m4 += v * v * v * v;
    }
    mean /= n;
    m2 /= n;
    m4 /= n;
    const double se_mean = std::sqrt((m2 - mean * mean) / n);
    const double se_m2 = std::sqrt((m4 - m2 * m2) / n);
    CHECK(std::abs(mean) < 4.0 * se_mean);
    CHECK(std::abs(m2 - 2.0 * t * t) < 4.0 * se_m2);
  }
}

TEST_CASE("vector reference couples components through one brownian path") {
  const TestFunction step = TestFunction::steps({{1.0, {{0.0, 0.25}, {0.5, 0.75}}}}, 2, 1.0);
  const TestFunction one = TestFunction::named(NamedForm::One, 2, 1.0);
  const std::vector<TestFunction> fs = {step, one};
  const std::vector<double> times = {1.0};
  RandomStream rng(33);
  const SampleMatrix m = sample_reference_vector(fs, times, 5000, 1e-3, rng);
  REQUIRE(m.cols == 2);
  double v0 = 0.0, v1 = 0.0;
  for (std::size_t r = 0; r < m.rows; ++r) {
    v0 += m.at(r, 0) * m.at(r, 0);
    v1 += m.at(r, 1) * m.at(r, 1);
  }
  v0 /= static_cast<double>(m.rows);
  v1 /= static_cast<double>(m.rows);
  CHECK(v0 == doctest::Approx(2.0 * l2_norm_sq(symmetrize(step))).epsilon(0.15));
  CHECK(v1 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("reference samples are reproducible and worker-count independent") {
  const TestFunction one = TestFunction::named(NamedForm::One, 2, 1.0);
  const std::vector<double> times = {0.5, 1.0};
  setenv("CHAOS_APPROX_THREADS", "1", 1);
  RandomStream a(5);
  auto sa = sample_reference_law(one, times, 64, 1e-3, a);
  setenv("CHAOS_APPROX_THREADS", "5", 1);
  RandomStream b(5);
  auto sb = sample_reference_law(one, times, 64, 1e-3, b);
  unsetenv("CHAOS_APPROX_THREADS");
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(sa[i].values[0] == sb[i].values[0]);
    CHECK(sa[i].values[1] == sb[i].values[1]);
  }
}
