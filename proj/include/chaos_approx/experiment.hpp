#pragma once

#include <optional>
#include <string>

#include "chaos_approx/plan.hpp"
#include "chaos_approx/stats.hpp"

namespace chaos {

// Aggregated outcome of one plan run. Everything except wall_clock_seconds
// is a pure function of the plan (including its seed).
struct ExperimentReport {
  std::string version;
  ExperimentPlan plan;
  std::optional<CovarianceResult> covariance;
  std::optional<BoundCheckResult> bounds;
  std::optional<FddResult> fdd;
  std::optional<FddResult> vector_fdd;
  std::optional<TightnessResult> tightness;
  bool all_passed = true;
  double wall_clock_seconds = 0.0;
};

// Runs the tests named in the plan (validation happens before any sampling).
ExperimentReport run_experiment(const ExperimentPlan& plan);

// Stable-order JSON with %.17g floats; byte-identical for identical inputs.
std::string report_to_json(const ExperimentReport& report);

}  // namespace chaos
