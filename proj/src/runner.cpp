#include "qident/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>

#include "qident/diagnostics.hpp"
#include "qident/system.hpp"

namespace qid {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

json file_entry(const fs::path& dir, const std::string& name,
                const std::string& bytes) {
  write_file(dir / name, bytes);
  return {{"path", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}};
}

std::string build_summary(const Scenario& sc, const Trajectory& traj) {
  std::ostringstream os;
  os << "scenario: " << sc.metadata.name << "\n";
  os << "status: ok\n";
  os << "runtime_seconds: " << fmt(traj.runtime_seconds) << "\n";
  os << "records: " << traj.times.size() << "\n";
  os << "final_time: " << fmt(traj.times.back()) << "\n";
  os << "final_V: " << fmt(traj.V.back()) << "\n";

  const auto pairs = transition_pairs(sc.system.dim);
  const ConvergenceMetrics cm = convergence_metrics(traj, sc.system.theta);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    os << "final_error_" << pairs[i].first << pairs[i].second << ": "
       << fmt(cm.final_error[i]) << "\n";
  }
  os << "max_final_error: " << fmt(cm.max_final_error) << "\n";
  os << "tolerance: " << fmt(cm.tolerance) << "\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    os << "time_to_tolerance_" << pairs[i].first << pairs[i].second << ": ";
    if (std::isnan(cm.time_to_tolerance[i])) {
      os << "not reached\n";
    } else {
      os << fmt(cm.time_to_tolerance[i]) << "\n";
    }
  }
  os << "fitted_rate: " << fmt(cm.fitted_rate) << "\n";

  const IdentifiabilityReport ident =
      check_identifiability(sc.system.omega, sc.system.dipole());
  os << "a2_ok: " << (ident.a2_ok ? "true" : "false") << "\n";
  os << "a3_ok: " << (ident.a3_ok ? "true" : "false") << "\n";
  os << "a1_connected: " << (ident.a1_connected ? "true" : "false") << "\n";
  os << "min_transition_gap: " << fmt(ident.min_transition_gap) << "\n";

  const ResolvedRun rr = resolve_run(sc);
  if (!rr.amplitudes.empty()) {
    const RabiReport rabi =
        rabi_analysis(rr.amplitudes, sc.system.theta, &sc.estimator.gains);
    os << "rabi_Omega:";
    for (Eigen::Index i = 0; i < rabi.Omega.size(); ++i)
      os << " " << fmt(rabi.Omega(i));
    os << "\n";
    os << "rabi_min_gap: " << fmt(rabi.min_gap) << "\n";
    os << "rabi_max_gap: " << fmt(rabi.max_gap) << "\n";
    os << "rabi_degenerate: " << (rabi.degenerate ? "true" : "false") << "\n";
    os << "gain_margin_Gamma: " << fmt(rabi.gain_margin_Gamma) << "\n";
    os << "gain_margin_gamma: " << fmt(rabi.gain_margin_gamma) << "\n";
  }

  os << "max_trace_drift_hat: " << fmt(traj.max_trace_drift_hat) << "\n";
  os << "max_herm_drift_hat: " << fmt(traj.max_herm_drift_hat) << "\n";
  os << "max_purity_defect_hat: " << fmt(traj.max_purity_defect_hat) << "\n";
  os << "max_trace_drift_plant: " << fmt(traj.max_trace_drift_plant) << "\n";
  os << "max_purity_defect_plant: " << fmt(traj.max_purity_defect_plant) << "\n";
  for (const auto& w : traj.warnings) os << "warning: " << w << "\n";
  os << "config: scenario.json\n";
  return os.str();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

std::string csv_from_trajectory(const Trajectory& traj, const Scenario& sc) {
  const int n = sc.system.dim;
  const auto pairs = transition_pairs(n);
  std::string out;
  out.reserve(traj.times.size() * (static_cast<std::size_t>(2 * n) + pairs.size() + 5) * 26);
  out += "t";
  for (int j = 1; j <= n; ++j) out += ",y_" + std::to_string(j);
  for (int j = 1; j <= n; ++j) out += ",yhat_" + std::to_string(j);
  for (const auto& [l, k] : pairs)
    out += ",thetahat_" + std::to_string(l) + std::to_string(k);
  out += ",V,e,purity_hat,trace_drift\n";
  char buf[40];
  const auto push = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
  };
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    push(traj.times[s]);
    for (int j = 0; j < n; ++j) {
      out += ',';
      push(traj.y[s](j));
    }
    for (int j = 0; j < n; ++j) {
      out += ',';
      push(traj.y_hat[s](j));
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      out += ',';
      push(traj.theta_hat[s][i]);
    }
    out += ',';
    push(traj.V[s]);
    out += ',';
    push(traj.e[s]);
    out += ',';
    push(traj.purity_hat[s]);
    out += ',';
    push(traj.trace_drift[s]);
    out += '\n';
  }
  return out;
}

RunResult run_scenario(const Scenario& sc, const std::string& out_dir,
                       Trajectory* out_traj) {
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    return {2, out_dir + ": cannot create output directory"};

  json manifest;
  manifest["scenario"] = sc.metadata.name;
  manifest["files"] = json::array();
  try {
    manifest["files"].push_back(
        file_entry(dir, "scenario.json", scenario_to_json(sc)));
    const Trajectory traj = integrate(sc);
    if (out_traj) *out_traj = traj;
    manifest["files"].push_back(
        file_entry(dir, "trajectory.csv", csv_from_trajectory(traj, sc)));
    manifest["files"].push_back(
        file_entry(dir, "summary.txt", build_summary(sc, traj)));
    manifest["status"] = "ok";
    manifest["runtime_seconds"] = traj.runtime_seconds;
    manifest["warnings"] = traj.warnings;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return {0, ""};
  } catch (const BlowupError& e) {
    manifest["status"] = "partial";
    manifest["error"] = e.what();
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return {1, e.what()};
  } catch (const std::invalid_argument& e) {
    return {2, e.what()};
  }
}

RunResult run_sweep(const Scenario& base, const SweepSpec& spec,
                    const std::string& out_dir) {
  if (spec.values.empty()) return {2, "empty-axis"};
  json base_json;
  try {
    base_json = json::parse(scenario_to_json(base));
  } catch (const json::exception& e) {
    return {2, e.what()};
  }
  std::string pointer = "/" + spec.param_path;
  for (auto& c : pointer)
    if (c == '.') c = '/';
  const json::json_pointer ptr(pointer);
  if (!base_json.contains(ptr))
    return {2, spec.param_path + ": parameter path does not resolve"};

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    return {2, out_dir + ": cannot create output directory"};

  struct Row {
    int exit_code = 0;
    std::string message;
    std::vector<double> final_error;
    double max_final_error = 0.0;
    double fitted_rate = 0.0;
    double final_V = 0.0;
  };
  std::vector<Row> rows(spec.values.size());
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= spec.values.size()) return;
      Row& row = rows[i];
      try {
        json rj = base_json;
        rj[ptr] = spec.values[i];
        rj["seeds"]["measurement"] =
            rj["seeds"]["measurement"].get<std::uint64_t>() + i;
        rj["seeds"]["control"] =
            rj["seeds"]["control"].get<std::uint64_t>() + i;
        const Scenario sc = load_scenario_json(rj.dump());
        const std::string row_dir =
            (dir / ("row_" + std::to_string(i))).string();
        Trajectory traj;
        const RunResult rr = run_scenario(sc, row_dir, &traj);
        row.exit_code = rr.exit_code;
        row.message = rr.message;
        if (rr.exit_code == 0) {
          const ConvergenceMetrics cm = convergence_metrics(traj, sc.system.theta);
          row.final_error = cm.final_error;
          row.max_final_error = cm.max_final_error;
          row.fitted_rate = cm.fitted_rate;
          row.final_V = traj.V.back();
        }
      } catch (const std::exception& e) {
        row.exit_code = 2;
        row.message = e.what();
      }
    }
  };

  const int nw = std::max(1, spec.parallel);
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  const auto pairs = transition_pairs(base.system.dim);
  std::string csv = "index,value,status";
  for (const auto& [l, k] : pairs)
    csv += ",final_error_" + std::to_string(l) + std::to_string(k);
  csv += ",max_final_error,final_V,fitted_rate\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    csv += std::to_string(i) + "," + fmt(spec.values[i]) + ",";
    csv += row.exit_code == 0 ? "ok" : csv_escape("error: " + row.message);
    if (row.exit_code == 0) {
      for (double v : row.final_error) csv += "," + fmt(v);
      csv += "," + fmt(row.max_final_error) + "," + fmt(row.final_V) + "," +
             fmt(row.fitted_rate);
    } else {
      for (std::size_t c = 0; c < pairs.size() + 3; ++c) csv += ",";
    }
    csv += "\n";
  }
  write_file(dir / "sweep.csv", csv);
  return {0, ""};
}

}  // namespace qid
