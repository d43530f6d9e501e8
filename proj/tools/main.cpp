#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chaos_approx/errors.hpp"
#include "chaos_approx/experiment.hpp"
#include "chaos_approx/chaos_reference.hpp"
#include "chaos_approx/stats.hpp"
#include "chaos_approx/version.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitVerdictFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitCapability = 3;
constexpr int kExitResource = 4;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> count;
  std::optional<std::string> out;
};

chaos::ExperimentPlan load_plan(const std::string& path, const Overrides& ov,
                                const std::string& forced_test) {
  chaos::ExperimentPlan plan = chaos::parse_plan(path);
  if (ov.seed) plan.seed = *ov.seed;
  if (ov.count) {
    if (*ov.count < 2) throw chaos::ValidationError("--count must be >= 2");
    plan.count = *ov.count;
  }
  if (ov.out) plan.out = *ov.out;
  if (!forced_test.empty()) plan.tests = {forced_test};
  return plan;
}

void write_or_print(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw chaos::ValidationError("cannot open output file: " + path);
  out << text;
  if (!out) throw chaos::ValidationError("write failed: " + path);
}

int run_report(const chaos::ExperimentPlan& plan) {
  const chaos::ExperimentReport report = chaos::run_experiment(plan);
  write_or_print(chaos::report_to_json(report), plan.out);
  return report.all_passed ? kExitPass : kExitVerdictFailed;
}

// one CSV per epsilon: <base>_eps<value>.csv
int run_simulate(const chaos::ExperimentPlan& plan) {
  const chaos::TestFunction f = plan.build_f();
  const chaos::QuadratureConfig cfg = plan.quadrature(plan.n);
  std::string base = !plan.dump_samples.empty() ? plan.dump_samples
                     : !plan.out.empty()        ? plan.out
                                                : std::string("samples.csv");
  const auto dot = base.rfind(".csv");
  if (dot != std::string::npos && dot == base.size() - 4) base = base.substr(0, dot);
  for (std::size_t e = 0; e < plan.epsilons.size(); ++e) {
    const chaos::SampleMatrix ys =
        chaos::sample_Y(f, plan.kernel, plan.xi, plan.epsilons[e], plan.times, plan.count, cfg,
                        chaos::mix_seed(plan.seed, e));
    char eps[32];
    std::snprintf(eps, sizeof(eps), "%g", plan.epsilons[e]);
    chaos::write_samples_csv(ys, plan.times, base + "_eps" + eps + ".csv");
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"off-diagonal multiple-integral simulation and verification"};
  app.set_version_flag("--version", chaos::kVersion);
  app.require_subcommand(1);

  Overrides ov;
  std::string plan_path;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("plan", plan_path, "experiment plan (JSON)")->required();
    cmd->add_option("--seed", ov.seed, "override the plan seed");
    cmd->add_option("--count", ov.count, "override the Monte Carlo count");
    cmd->add_option("--out", ov.out, "override the output path");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "dump approximant samples as CSV");
  CLI::App* bounds = app.add_subcommand("bounds", "second-moment bound check");
  CLI::App* fdd = app.add_subcommand("fdd", "distribution-distance convergence check");
  CLI::App* tightness = app.add_subcommand("tightness", "fourth-moment increment ratios");
  CLI::App* vector_cmd = app.add_subcommand("vector", "joint multi-integrand convergence check");
  CLI::App* covariance = app.add_subcommand("covariance", "kernel covariance identity check");
  CLI::App* report = app.add_subcommand("report", "run every test named in the plan");
  for (CLI::App* cmd : {simulate, bounds, fdd, tightness, vector_cmd, covariance, report})
    add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (simulate->parsed()) return run_simulate(load_plan(plan_path, ov, ""));
    if (bounds->parsed()) return run_report(load_plan(plan_path, ov, "bounds"));
    if (fdd->parsed()) return run_report(load_plan(plan_path, ov, "fdd"));
    if (tightness->parsed()) return run_report(load_plan(plan_path, ov, "tightness"));
    if (vector_cmd->parsed()) return run_report(load_plan(plan_path, ov, "vector"));
    if (covariance->parsed()) return run_report(load_plan(plan_path, ov, "covariance"));
    return run_report(load_plan(plan_path, ov, ""));
  } catch (const chaos::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kExitResource;
  } catch (const chaos::CapabilityError& e) {
    std::cerr << "capability error: " << e.what() << "\n";
    return kExitCapability;
  } catch (const chaos::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
