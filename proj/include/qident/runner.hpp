#pragma once

// Artifact-producing front end: runs a scenario into an output directory
// (trajectory CSV, structured-text summary, SHA-256 manifest) and drives
// parameter sweeps over a worker pool.

#include <string>
#include <vector>

#include "qident/integrate.hpp"
#include "qident/scenario.hpp"

namespace qid {

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 run failure (blowup), 2 config failure
  std::string message;
};

// Writes scenario.json, trajectory.csv, summary.txt, manifest.json.
// A blowup still writes the manifest, with status "partial" and the error.
// The computed trajectory is copied to out_traj when given.
RunResult run_scenario(const Scenario& sc, const std::string& out_dir,
                       Trajectory* out_traj = nullptr);

struct SweepSpec {
  std::string param_path;  // dotted path into the scenario JSON
  std::vector<double> values;
  int parallel = 1;
};

// One run per value in out_dir/row_<i> with seeds derived as base + i;
// failures are recorded per row and the sweep continues. Aggregates
// convergence metrics into out_dir/sweep.csv.
RunResult run_sweep(const Scenario& base, const SweepSpec& spec,
                    const std::string& out_dir);

std::string sha256_hex(const std::string& bytes);
std::string csv_from_trajectory(const Trajectory& traj, const Scenario& sc);

}  // namespace qid
