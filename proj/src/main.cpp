#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qident/runner.hpp"
#include "qident/scenario.hpp"

namespace {

// Exit codes: 0 ok, 1 run failure (integrator blowup), 2 config failure.
constexpr int kOk = 0;
constexpr int kConfigFailure = 2;

qid::Scenario resolve_scenario(const std::string& ref) {
  if (qid::is_builtin(ref)) return qid::builtin_scenario(ref);
  return qid::load_scenario_file(ref);
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size())
      throw std::invalid_argument("--values: malformed number '" + item + "'");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulation and identification toolkit for observer-based dipole-moment"
      " estimation of closed N-level systems"};
  app.require_subcommand(1);

  std::string scenario_ref, out_dir, param_path, values_csv;
  std::uint64_t seed_override = 0;
  bool have_seed_override = false;
  int stride = -1, parallel = 1;

  auto* run = app.add_subcommand("run", "run one scenario and write artifacts");
  run->add_option("scenario", scenario_ref, "builtin name or scenario file")
      ->required();
  run->add_option("--out", out_dir, "output directory (default runs/<name>)");
  run->add_option("--seed-override", seed_override,
                  "set measurement seed to N and control seed to N+1")
      ->each([&](const std::string&) { have_seed_override = true; });
  run->add_option("--stride", stride, "record stride override (0 = auto)");

  auto* sweep = app.add_subcommand("sweep", "run one scenario per axis value");
  sweep->add_option("scenario", scenario_ref, "builtin name or scenario file")
      ->required();
  sweep->add_option("--param", param_path, "dotted scenario path, e.g. measurement.noise_sigma")
      ->required();
  sweep->add_option("--values", values_csv, "comma-separated axis values")
      ->required();
  sweep->add_option("--out", out_dir, "output directory (default runs/<name>-sweep)");
  sweep->add_option("--parallel", parallel, "worker pool size");
  sweep->add_option("--seed-override", seed_override,
                    "set measurement seed to N and control seed to N+1")
      ->each([&](const std::string&) { have_seed_override = true; });

  auto* list = app.add_subcommand("list", "list built-in scenarios");
  auto* validate_cmd = app.add_subcommand("validate", "validate a scenario");
  validate_cmd->add_option("scenario", scenario_ref, "builtin name or scenario file")
      ->required();
  auto* print_cmd =
      app.add_subcommand("print-scenario", "print the resolved scenario JSON");
  print_cmd->add_option("scenario", scenario_ref, "builtin name or scenario file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : qid::builtin_names())
        std::cout << name << ": " << qid::builtin_summary(name) << "\n";
      return kOk;
    }

    qid::Scenario sc = resolve_scenario(scenario_ref);
    if (have_seed_override) {
      sc.seeds.measurement = seed_override;
      sc.seeds.control = seed_override + 1;
    }
    if (stride >= 0) sc.integration.record_stride = stride;

    if (validate_cmd->parsed()) {
      qid::validate(sc);
      std::cout << "valid: " << scenario_ref << "\n";
      return kOk;
    }
    if (print_cmd->parsed()) {
      std::cout << qid::scenario_to_json(sc);
      return kOk;
    }
    if (run->parsed()) {
      const std::string dir = out_dir.empty()
                                  ? "runs/" + (sc.metadata.name.empty()
                                                   ? std::string("scenario")
                                                   : sc.metadata.name)
                                  : out_dir;
      const qid::RunResult rr = qid::run_scenario(sc, dir);
      if (rr.exit_code == 0) {
        std::cout << "ok: " << dir << "\n";
      } else {
        std::cerr << "error: " << rr.message << "\n";
      }
      return rr.exit_code;
    }
    if (sweep->parsed()) {
      qid::SweepSpec spec;
      spec.param_path = param_path;
      spec.values = parse_values(values_csv);
      spec.parallel = parallel;
      const std::string dir =
          out_dir.empty() ? "runs/" + sc.metadata.name + "-sweep" : out_dir;
      const qid::RunResult rr = qid::run_sweep(sc, spec, dir);
      if (rr.exit_code == 0) {
        std::cout << "ok: " << dir << "\n";
      } else {
        std::cerr << "error: " << rr.message << "\n";
      }
      return rr.exit_code;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
