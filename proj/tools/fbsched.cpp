#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "fbsched/fbsched.hpp"

namespace {

struct CommonOptions {
  std::string scenario = "paper";
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::optional<double> trace_grid_ms;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario file or built-in name (paper, steady)")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for measurement noise");
  cmd->add_option("--duration", o.duration_s, "Override the run length [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--trace-grid", o.trace_grid_ms, "Override the trace sampling step [ms]")
      ->check(CLI::PositiveNumber);
}

fbsched::Scenario load(const CommonOptions& o) {
  fbsched::Scenario sc = fbsched::load_scenario(o.scenario);
  if (o.duration_s) sc.duration = fbsched::duration_from_seconds(*o.duration_s);
  if (o.trace_grid_ms) sc.trace_grid = fbsched::duration_from_millis(*o.trace_grid_ms);
  sc.validate();
  return sc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-simulation of control tasks under open-loop, time-triggered and event-driven feedback scheduling"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string paradigm;
  auto* run_cmd = app.add_subcommand("run", "Simulate one scheduling paradigm");
  add_common(run_cmd, run_opts);
  run_cmd->add_option("--paradigm", paradigm, "Override the paradigm")
      ->check(CLI::IsMember({"ols", "ttfs", "edfs"}));

  CommonOptions cmp_opts;
  auto* cmp_cmd = app.add_subcommand("compare", "Simulate ols, ttfs and edfs on the same scenario");
  add_common(cmp_cmd, cmp_opts);

  std::string show_name = "paper";
  auto* show_cmd = app.add_subcommand("show", "Print a scenario in file format");
  show_cmd->add_option("--scenario", show_name, "Scenario file or built-in name")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const auto sc = load(run_opts);
      std::optional<fbsched::Paradigm> p;
      if (!paradigm.empty()) p = fbsched::paradigm_from_string(paradigm);
      return fbsched::run_command(sc, p, run_opts.out, run_opts.seed, std::cout, std::cerr);
    }
    if (*cmp_cmd) {
      const auto sc = load(cmp_opts);
      return fbsched::compare_command(sc, cmp_opts.out, cmp_opts.seed, std::cout, std::cerr);
    }
    if (*show_cmd) {
      std::cout << fbsched::serialize_scenario(fbsched::load_scenario(show_name));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
