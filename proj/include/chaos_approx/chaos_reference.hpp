#pragma once

#include <span>
#include <vector>

#include "chaos_approx/rng.hpp"
#include "chaos_approx/sample_matrix.hpp"
#include "chaos_approx/testfunctions.hpp"

namespace chaos {

// Standard Brownian motion sampled on a uniform grid of step h (the last
// step may be shorter). cumulative[i+1] - cumulative[i] == increments[i]
// exactly by construction.
struct BrownianGrid {
  double step = 0.0;
  double horizon = 0.0;
  std::vector<double> increments;
  std::vector<double> cumulative;  // W at grid points, W(0) = 0

  std::size_t steps() const { return increments.size(); }
  double point(std::size_t i) const;  // grid time of cumulative[i]
};

BrownianGrid sample_brownian(double h, double T, RandomStream& rng);

enum class ReferenceLaw { ExactStep, IteratedIto, HermiteClosedForm };

const char* reference_law_name(ReferenceLaw law);

// One realization of the limit process at the requested times, tagged with
// the method that produced it (tags select tolerances downstream).
struct ReferenceSample {
  std::vector<double> values;
  ReferenceLaw law_tag = ReferenceLaw::ExactStep;
};

// Exact product-of-increments law for elementary step integrands:
// sum_k alpha_k prod_i [W(b_k^i ^ t) - W(a_k^i ^ t)]. Interval endpoints are
// snapped to the grid; requires h <= (min interval gap)/8.
ReferenceSample exact_integral_step(const TestFunction& f, const BrownianGrid& W,
                                    std::span<const double> times);

// Euler discretization of the order-2 iterated integral
// 2 sum_j [sum_{i<j} f(x_i, x_j) dW_i] dW_j with f read at cell midpoints and
// increments at left points (non-anticipating). f must be symmetric.
ReferenceSample iterated_ito_n2(const TestFunction& f, const BrownianGrid& W,
                                std::span<const double> times);

// Closed form of the n-fold integral of the indicator of [0,t]^n as a
// function of w = W(t): n=1 -> w, n=2 -> w^2 - t, n=3 -> w^3 - 3 t w.
double hermite_closed_form(int n, double t, double w_t);

// count independent realizations using the best available method
// (ExactStep > HermiteClosedForm > IteratedIto); derived per-sample streams
// keep this reproducible for any worker count.
std::vector<ReferenceSample> sample_reference_law(const TestFunction& f,
                                                  std::span<const double> times, int count,
                                                  double h, RandomStream& rng);

// Joint realizations for a vector of integrands on one shared Brownian path
// per sample; rows are samples, columns are (function, time) pairs with the
// time index fastest.
SampleMatrix sample_reference_vector(std::span<const TestFunction> fs,
                                     std::span<const double> times, int count, double h,
                                     RandomStream& rng);

// CSV dump: header then one row per sample, one column per time.
void write_samples_csv(const SampleMatrix& samples, std::span<const double> times,
                       const std::string& path);

}  // namespace chaos
