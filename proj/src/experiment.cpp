#include "chaos_approx/experiment.hpp"

#include <algorithm>
#include <chrono>

#include "chaos_approx/errors.hpp"
#include "chaos_approx/json_out.hpp"
#include "chaos_approx/version.hpp"

namespace chaos {

namespace {

bool wants(const ExperimentPlan& plan, const std::string& test) {
  return std::find(plan.tests.begin(), plan.tests.end(), test) != plan.tests.end();
}

JsonOut verdict_json(const VerdictReport& v) {
  JsonOut j = JsonOut::object();
  j.set("name", JsonOut::string(v.name));
  j.set("passed", JsonOut::boolean(v.passed));
  j.set("statistic", JsonOut::number(v.statistic));
  j.set("threshold", JsonOut::number(v.threshold));
  j.set("details", JsonOut::string(v.details));
  return j;
}

JsonOut moment_json(const MomentReport& m) {
  JsonOut j = JsonOut::object();
  j.set("epsilon", JsonOut::number(m.epsilon));
  j.set("time", JsonOut::number(m.time));
  j.set("count", JsonOut::integer(m.count));
  j.set("mean", JsonOut::number(m.mean));
  j.set("mean_se", JsonOut::number(m.mean_se));
  j.set("m2", JsonOut::number(m.m2));
  j.set("m2_se", JsonOut::number(m.m2_se));
  j.set("m4", JsonOut::number(m.m4));
  j.set("m4_se", JsonOut::number(m.m4_se));
  return j;
}

JsonOut distance_json(const DistanceReport& d) {
  JsonOut j = JsonOut::object();
  j.set("epsilon", JsonOut::number(d.epsilon));
  JsonOut ks = JsonOut::array();
  for (double v : d.ks) ks.push(JsonOut::number(v));
  j.set("ks", std::move(ks));
  j.set("energy", JsonOut::number(d.energy));
  j.set("energy_threshold", JsonOut::number(d.energy_threshold));
  j.set("count_a", JsonOut::integer(d.count_a));
  j.set("count_b", JsonOut::integer(d.count_b));
  return j;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentPlan& plan) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.version = kVersion;
  report.plan = plan;

  const TestFunction f = plan.build_f();
  const QuadratureConfig cfg = plan.quadrature(plan.n);

  if (wants(plan, "covariance")) {
    if (plan.kernel != KernelKind::KacStroock)
      throw CapabilityError("covariance test applies to the kac_stroock kernel only");
    report.covariance = kac_stroock_covariance_check(plan.T, plan.epsilons, plan.time_pairs,
                                                     plan.count, mix_seed(plan.seed, 1));
    report.all_passed = report.all_passed && report.covariance->verdict.passed;
  }
  if (wants(plan, "bounds")) {
    report.bounds = check_second_moment_bound(f, plan.kernel, plan.xi, plan.epsilons, plan.times,
                                              plan.count, cfg, mix_seed(plan.seed, 2));
    report.all_passed = report.all_passed && report.bounds->verdict.passed &&
                        report.bounds->first_moment_verdict.passed;
  }
  if (wants(plan, "fdd")) {
    report.fdd = fdd_convergence_test(f, plan.kernel, plan.xi, plan.epsilons, plan.times,
                                      plan.count, cfg, plan.reference_h, mix_seed(plan.seed, 3));
    report.all_passed = report.all_passed && report.fdd->verdict.passed;
  }
  if (wants(plan, "vector")) {
    std::vector<TestFunction> fs;
    for (const auto& spec : plan.fs) fs.push_back(spec.build(plan.n, plan.T));
    if (fs.empty()) fs.push_back(f);
    report.vector_fdd = vector_fdd_test(fs, plan.kernel, plan.xi, plan.epsilons, plan.times,
                                        plan.count, cfg, plan.reference_h, mix_seed(plan.seed, 4));
    report.all_passed = report.all_passed && report.vector_fdd->verdict.passed;
  }
  if (wants(plan, "tightness")) {
    report.tightness =
        tightness_fourth_moment_test(f, plan.kernel, plan.xi, plan.epsilons, plan.time_pairs,
                                     plan.count, cfg, mix_seed(plan.seed, 5));
    report.all_passed = report.all_passed && report.tightness->verdict.passed;
  }

  const auto t1 = std::chrono::steady_clock::now();
  report.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
  return report;
}

std::string report_to_json(const ExperimentReport& report) {
  JsonOut j = JsonOut::object();
  j.set("version", JsonOut::string(report.version));
  j.set("seed", JsonOut::unsigned_integer(report.plan.seed));

  j.set("plan", plan_to_json(report.plan));

  JsonOut results = JsonOut::object();
  if (report.covariance) {
    JsonOut r = JsonOut::object();
    JsonOut cells = JsonOut::array();
    for (const auto& c : report.covariance->cells) {
      JsonOut cj = JsonOut::object();
      cj.set("epsilon", JsonOut::number(c.epsilon));
      cj.set("x", JsonOut::number(c.x));
      cj.set("y", JsonOut::number(c.y));
      cj.set("empirical", JsonOut::number(c.empirical));
      cj.set("se", JsonOut::number(c.se));
      cj.set("expected", JsonOut::number(c.expected));
      cells.push(std::move(cj));
    }
    r.set("cells", std::move(cells));
    r.set("verdict", verdict_json(report.covariance->verdict));
    results.set("covariance", std::move(r));
  }
  if (report.bounds) {
    JsonOut r = JsonOut::object();
    r.set("norm_sq", JsonOut::number(report.bounds->norm_sq));
    r.set("bound_constant", JsonOut::number(report.bounds->bound_constant));
    r.set("calibrated", JsonOut::boolean(report.bounds->calibrated));
    JsonOut cells = JsonOut::array();
    for (std::size_t i = 0; i < report.bounds->cells.size(); ++i) {
      JsonOut cj = moment_json(report.bounds->cells[i]);
      cj.set("abs_mean", JsonOut::number(report.bounds->abs_mean[i]));
      cj.set("abs_mean_se", JsonOut::number(report.bounds->abs_mean_se[i]));
      cells.push(std::move(cj));
    }
    r.set("cells", std::move(cells));
    r.set("verdict", verdict_json(report.bounds->verdict));
    r.set("first_moment_verdict", verdict_json(report.bounds->first_moment_verdict));
    results.set("bounds", std::move(r));
  }
  if (report.fdd) {
    JsonOut r = JsonOut::object();
    JsonOut dists = JsonOut::array();
    for (const auto& d : report.fdd->distances) dists.push(distance_json(d));
    r.set("distances", std::move(dists));
    r.set("verdict", verdict_json(report.fdd->verdict));
    results.set("fdd", std::move(r));
  }
  if (report.vector_fdd) {
    JsonOut r = JsonOut::object();
    JsonOut dists = JsonOut::array();
    for (const auto& d : report.vector_fdd->distances) dists.push(distance_json(d));
    r.set("distances", std::move(dists));
    r.set("verdict", verdict_json(report.vector_fdd->verdict));
    results.set("vector", std::move(r));
  }
  if (report.tightness) {
    JsonOut r = JsonOut::object();
    JsonOut cells = JsonOut::array();
    for (const auto& c : report.tightness->cells) {
      JsonOut cj = JsonOut::object();
      cj.set("epsilon", JsonOut::number(c.epsilon));
      cj.set("s", JsonOut::number(c.s));
      cj.set("t", JsonOut::number(c.t));
      cj.set("skipped", JsonOut::boolean(c.skipped));
      cj.set("m4", JsonOut::number(c.m4));
      cj.set("m4_se", JsonOut::number(c.m4_se));
      cj.set("denom", JsonOut::number(c.denom));
      cj.set("ratio", JsonOut::number(c.ratio));
      cj.set("ratio_se", JsonOut::number(c.ratio_se));
      cells.push(std::move(cj));
    }
    r.set("cells", std::move(cells));
    r.set("verdict", verdict_json(report.tightness->verdict));
    results.set("tightness", std::move(r));
  }
  j.set("results", std::move(results));
  j.set("all_passed", JsonOut::boolean(report.all_passed));
  j.set("wall_clock_seconds", JsonOut::number(report.wall_clock_seconds));
  return j.dump(2) + "\n";
}

}  // namespace chaos
