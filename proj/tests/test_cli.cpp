// Exit-code contract tests for the command-line tool. Runs the installed
// binary (path in argv[1]) against small fixture plans.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAIL: " << what << "\n";
  } else {
    std::cout << "ok: " << what << "\n";
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <path-to-cli>\n";
    return 1;
  }
  const std::string cli = argv[1];
  const std::string quiet = " > cli_out.txt 2> cli_err.txt";

  // a small passing bounds plan
  write_file("plan_ok.json", R"({
    "kernel": "donsker",
    "f": {"type": "named", "name": "one"},
    "n": 2,
    "epsilons": [0.4, 0.3],
    "times": [1.0],
    "count": 400,
    "grid_m": 4,
    "seed": 7,
    "tests": ["bounds"],
    "out": "report_ok.json"
  })");
  expect(run(cli + " report plan_ok.json" + quiet) == 0, "passing report exits 0");
  expect(slurp("report_ok.json").find("\"all_passed\": true") != std::string::npos,
         "report file written with all_passed");

  // validation errors -> 2
  write_file("plan_bad_eps.json", R"({"epsilons": [0.3, 0.5]})");
  expect(run(cli + " report plan_bad_eps.json" + quiet) == 2, "non-decreasing epsilons exit 2");
  expect(run(cli + " report no_such_plan.json" + quiet) == 2, "missing plan file exits 2");
  write_file("plan_bad_grid.json", R"({"f": {"type": "grid", "path": "nope.csv"}})");
  expect(run(cli + " report plan_bad_grid.json" + quiet) == 2, "missing grid file exits 2");
  expect(run(cli + " frobnicate plan_ok.json" + quiet) == 2, "unknown subcommand exits 2");
  expect(run(cli + quiet) == 2, "no subcommand exits 2");

  // capability errors -> 3
  write_file("plan_cap.json", R"({
    "kernel": "donsker",
    "f": {"type": "named", "name": "sum_coords"},
    "n": 3,
    "epsilons": [0.35],
    "times": [1.0],
    "count": 100,
    "grid_m": 4,
    "tests": ["fdd"]
  })");
  expect(run(cli + " fdd plan_cap.json" + quiet) == 3, "fdd without a reference law exits 3");

  // resource errors -> 4
  write_file("plan_budget.json", R"({
    "kernel": "donsker",
    "f": {"type": "named", "name": "one"},
    "n": 2,
    "epsilons": [0.4],
    "times": [1.0],
    "count": 10,
    "grid_m": 64,
    "cell_budget": 100,
    "tests": ["bounds"]
  })");
  expect(run(cli + " bounds plan_budget.json" + quiet) == 4, "cell budget breach exits 4");

  // failed verdict -> 1 (far-from-limit fdd)
  write_file("plan_fail.json", R"({
    "kernel": "donsker",
    "f": {"type": "named", "name": "one"},
    "n": 2,
    "epsilons": [0.5],
    "times": [1.0],
    "count": 2000,
    "grid_m": 4,
    "seed": 3,
    "tests": ["fdd"],
    "out": "report_fail.json"
  })");
  expect(run(cli + " fdd plan_fail.json" + quiet) == 1, "failed verdict exits 1");
  expect(slurp("report_fail.json").find("\"all_passed\": false") != std::string::npos,
         "failing report still written");

  // simulate dumps one csv per epsilon
  write_file("plan_sim.json", R"({
    "kernel": "kac_stroock",
    "f": {"type": "named", "name": "one"},
    "n": 2,
    "epsilons": [0.4, 0.3],
    "times": [0.5, 1.0],
    "count": 20,
    "grid_m": 4,
    "seed": 11,
    "dump_samples": "sim_dump"
  })");
  expect(run(cli + " simulate plan_sim.json" + quiet) == 0, "simulate exits 0");
  expect(!slurp("sim_dump_eps0.4.csv").empty(), "simulate wrote the first epsilon csv");
  expect(!slurp("sim_dump_eps0.3.csv").empty(), "simulate wrote the second epsilon csv");

  // seed override changes the report, --out redirects it
  expect(run(cli + " report plan_ok.json --seed 8 --out report_seed8.json" + quiet) == 0,
         "seed override run exits 0");
  expect(slurp("report_seed8.json") != slurp("report_ok.json"),
         "different seed changes the report");

  for (const char* f :
       {"plan_ok.json", "plan_bad_eps.json", "plan_bad_grid.json", "plan_cap.json",
        "plan_budget.json", "plan_fail.json", "plan_sim.json", "report_ok.json",
        "report_fail.json", "report_seed8.json", "sim_dump_eps0.4.csv", "sim_dump_eps0.3.csv",
        "cli_out.txt", "cli_err.txt"})
    std::remove(f);

  if (failures != 0) {
    std::cerr << failures << " cli contract checks failed\n";
    return 1;
  }
  std::cout << "all cli contract checks passed\n";
  return 0;
}
