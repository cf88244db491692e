#include "qident/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace qid {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw std::invalid_argument(key + ": " + what);
}

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(ctx, "expected an object");
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return item.key() == a;
        }) == allowed.end()) {
      bad(ctx + "." + item.key(), "unknown key");
    }
  }
}

double require_num(const json& j, const std::string& ctx, const char* key) {
  if (!j.contains(key)) bad(ctx + "." + key, "missing required key");
  if (!j[key].is_number()) bad(ctx + "." + key, "expected a number");
  return j[key].get<double>();
}

double opt_num(const json& j, const std::string& ctx, const char* key,
               double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) bad(ctx + "." + key, "expected a number");
  return j[key].get<double>();
}

bool opt_bool(const json& j, const std::string& ctx, const char* key,
              bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_boolean()) bad(ctx + "." + key, "expected a boolean");
  return j[key].get<bool>();
}

std::string opt_str(const json& j, const std::string& ctx, const char* key,
                    const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_string()) bad(ctx + "." + key, "expected a string");
  return j[key].get<std::string>();
}

double parse_real(const std::string& s, const std::string& ctx) {
  if (s.empty()) bad(ctx, "empty number");
  if (s == "+") return 1.0;
  if (s == "-") return -1.0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) bad(ctx, "malformed number '" + s + "'");
  return v;
}

cplx parse_complex(const json& v, const std::string& ctx) {
  if (v.is_number()) return cplx(v.get<double>(), 0.0);
  if (!v.is_string()) bad(ctx, "expected a number or an \"a+bi\" string");
  std::string s = v.get<std::string>();
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  if (s.empty()) bad(ctx, "empty complex literal");
  if (s.back() != 'i' && s.back() != 'I') return cplx(parse_real(s, ctx), 0.0);
  s.pop_back();
  // split before the sign of the imaginary part (signs inside exponents
  // like 1e-5 do not count)
  std::size_t split = std::string::npos;
  for (std::size_t p = s.size(); p-- > 1;) {
    if ((s[p] == '+' || s[p] == '-') && s[p - 1] != 'e' && s[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  if (split == std::string::npos) {
    if (s.empty() || s == "+") return cplx(0.0, 1.0);
    if (s == "-") return cplx(0.0, -1.0);
    return cplx(0.0, parse_real(s, ctx));
  }
  return cplx(parse_real(s.substr(0, split), ctx),
              parse_real(s.substr(split), ctx));
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_complex(cplx z) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.17g%+.17gi", z.real(), z.imag());
  return buf;
}

std::vector<double> real_vector(const json& j, const std::string& ctx) {
  if (!j.is_array()) bad(ctx, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) bad(ctx + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

CVec complex_vector(const json& j, const std::string& ctx) {
  if (!j.is_array()) bad(ctx, "expected an array of complex entries");
  CVec out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    out(static_cast<Eigen::Index>(i)) =
        parse_complex(j[i], ctx + "[" + std::to_string(i) + "]");
  return out;
}

CMat complex_matrix(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) bad(ctx, "expected an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  CMat out;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rctx = ctx + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) bad(rctx, "expected a row array");
    if (r == 0) {
      cols = j[r].size();
      out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    }
    if (j[r].size() != cols) bad(rctx, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_complex(j[r][c], rctx + "[" + std::to_string(c) + "]");
  }
  return out;
}

json dump_complex_vector(const CVec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(format_complex(v(i)));
  return out;
}

json dump_complex_matrix(const CMat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(format_complex(m(r, c)));
    out.push_back(row);
  }
  return out;
}

EstimatorMode parse_mode(const std::string& s, const std::string& ctx) {
  if (s == "full") return EstimatorMode::Full;
  if (s == "averaged") return EstimatorMode::Averaged;
  if (s == "second_averaged") return EstimatorMode::SecondAveraged;
  if (s == "unnormalized") return EstimatorMode::Unnormalized;
  bad(ctx, "expected one of full, averaged, second_averaged, unnormalized");
}

std::string mode_name(EstimatorMode m) {
  switch (m) {
    case EstimatorMode::Full: return "full";
    case EstimatorMode::Averaged: return "averaged";
    case EstimatorMode::SecondAveraged: return "second_averaged";
    case EstimatorMode::Unnormalized: return "unnormalized";
  }
  return "full";
}

std::uint64_t opt_seed(const json& j, const std::string& ctx, const char* key) {
  if (!j.contains(key)) return 0;
  if (!j[key].is_number_unsigned())
    bad(ctx + "." + key, "expected a nonnegative integer");
  return j[key].get<std::uint64_t>();
}

Scenario from_json(const json& j) {
  check_keys(j, "scenario",
             {"version", "metadata", "system", "initial_state", "control",
              "measurement", "estimator", "integration", "seeds"});
  Scenario sc;
  if (!j.contains("version")) bad("version", "missing required key");
  if (!j["version"].is_number_integer()) bad("version", "expected an integer");
  sc.version = j["version"].get<int>();

  if (j.contains("metadata")) {
    const json& m = j["metadata"];
    check_keys(m, "metadata", {"name", "description"});
    sc.metadata.name = opt_str(m, "metadata", "name", "");
    sc.metadata.description = opt_str(m, "metadata", "description", "");
  }

  if (!j.contains("system")) bad("system", "missing required key");
  {
    const json& s = j["system"];
    check_keys(s, "system", {"dim", "omega", "theta", "basis_change"});
    if (!s.contains("dim") || !s["dim"].is_number_integer())
      bad("system.dim", "expected an integer");
    sc.system.dim = s["dim"].get<int>();
    if (!s.contains("omega")) bad("system.omega", "missing required key");
    const auto om = real_vector(s["omega"], "system.omega");
    sc.system.omega = Eigen::Map<const RVec>(om.data(), static_cast<Eigen::Index>(om.size()));
    if (!s.contains("theta")) bad("system.theta", "missing required key");
    sc.system.theta = real_vector(s["theta"], "system.theta");
    if (s.contains("basis_change"))
      sc.system.basis_change = complex_matrix(s["basis_change"], "system.basis_change");
  }

  if (!j.contains("initial_state")) bad("initial_state", "missing required key");
  sc.psi0 = complex_vector(j["initial_state"], "initial_state");

  if (j.contains("control")) {
    const json& c = j["control"];
    check_keys(c, "control", {"tones", "amplitude_bias", "noise_sigma", "noise_hold"});
    if (c.contains("tones")) {
      if (!c["tones"].is_array()) bad("control.tones", "expected an array");
      for (std::size_t i = 0; i < c["tones"].size(); ++i) {
        const std::string ctx = "control.tones[" + std::to_string(i) + "]";
        const json& t = c["tones"][i];
        check_keys(t, ctx, {"amplitude", "frequency", "waveform"});
        Tone tone;
        tone.amplitude = require_num(t, ctx, "amplitude");
        tone.frequency = require_num(t, ctx, "frequency");
        const std::string wf = opt_str(t, ctx, "waveform", "cos");
        if (wf == "cos") {
          tone.waveform = Waveform::Cos;
        } else if (wf == "sin") {
          tone.waveform = Waveform::Sin;
        } else {
          bad(ctx + ".waveform", "expected cos or sin");
        }
        sc.control.tones.push_back(tone);
      }
    }
    sc.control.amplitude_bias = opt_num(c, "control", "amplitude_bias", 0.0);
    sc.control.noise_sigma = opt_num(c, "control", "noise_sigma", 0.0);
    sc.control.noise_hold = opt_num(c, "control", "noise_hold", 0.0);
  }

  if (j.contains("measurement")) {
    const json& m = j["measurement"];
    check_keys(m, "measurement", {"delay", "bias", "noise_sigma", "sample_period"});
    sc.measurement.delay = opt_num(m, "measurement", "delay", 0.0);
    sc.measurement.bias = opt_num(m, "measurement", "bias", 0.0);
    sc.measurement.noise_sigma = opt_num(m, "measurement", "noise_sigma", 0.0);
    sc.measurement.sample_period = opt_num(m, "measurement", "sample_period", 0.0);
  }

  if (!j.contains("estimator")) bad("estimator", "missing required key");
  {
    const json& e = j["estimator"];
    check_keys(e, "estimator",
               {"mode", "gains", "theta_hat0", "initial_state",
                "theory_verification"});
    sc.estimator.mode =
        parse_mode(opt_str(e, "estimator", "mode", ""), "estimator.mode");
    if (!e.contains("gains")) bad("estimator.gains", "missing required key");
    const json& g = e["gains"];
    check_keys(g, "estimator.gains",
               {"Gamma", "gamma", "amplitudes", "detuning", "phases", "channels"});
    sc.estimator.gains.Gamma = require_num(g, "estimator.gains", "Gamma");
    if (!g.contains("gamma")) bad("estimator.gains.gamma", "missing required key");
    sc.estimator.gains.gamma = real_vector(g["gamma"], "estimator.gains.gamma");
    if (g.contains("amplitudes"))
      sc.estimator.gains.amplitudes =
          real_vector(g["amplitudes"], "estimator.gains.amplitudes");
    if (g.contains("detuning"))
      sc.estimator.gains.detuning =
          real_vector(g["detuning"], "estimator.gains.detuning");
    if (g.contains("phases"))
      sc.estimator.gains.phases = real_vector(g["phases"], "estimator.gains.phases");
    if (g.contains("channels")) {
      if (!g["channels"].is_array())
        bad("estimator.gains.channels", "expected an array of integers");
      for (const auto& c : g["channels"]) {
        if (!c.is_number_integer())
          bad("estimator.gains.channels", "expected an array of integers");
        sc.estimator.gains.channels.push_back(c.get<int>());
      }
    }
    if (!e.contains("theta_hat0"))
      bad("estimator.theta_hat0", "missing required key");
    sc.estimator.theta_hat0 = real_vector(e["theta_hat0"], "estimator.theta_hat0");
    if (!e.contains("initial_state"))
      bad("estimator.initial_state", "missing required key");
    sc.estimator.psi_hat0 =
        complex_vector(e["initial_state"], "estimator.initial_state");
    sc.estimator.theory_verification =
        opt_bool(e, "estimator", "theory_verification", false);
  }

  if (!j.contains("integration")) bad("integration", "missing required key");
  {
    const json& i = j["integration"];
    check_keys(i, "integration",
               {"h", "T", "record_stride", "renormalize", "snapshots",
                "snapshot_until"});
    sc.integration.T = require_num(i, "integration", "T");
    sc.integration.h = opt_num(i, "integration", "h", 0.0);
    if (i.contains("record_stride")) {
      if (!i["record_stride"].is_number_integer())
        bad("integration.record_stride", "expected an integer");
      sc.integration.record_stride = i["record_stride"].get<int>();
    }
    sc.integration.renormalize = opt_bool(i, "integration", "renormalize", true);
    sc.integration.snapshots = opt_bool(i, "integration", "snapshots", false);
    sc.integration.snapshot_until =
        opt_num(i, "integration", "snapshot_until", 0.0);
  }

  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    check_keys(s, "seeds", {"measurement", "control"});
    sc.seeds.measurement = opt_seed(s, "seeds", "measurement");
    sc.seeds.control = opt_seed(s, "seeds", "control");
  }
  return sc;
}

json to_json(const Scenario& sc) {
  json j;
  j["version"] = sc.version;
  j["metadata"] = {{"name", sc.metadata.name},
                   {"description", sc.metadata.description}};
  json sys;
  sys["dim"] = sc.system.dim;
  sys["omega"] = json::array();
  for (Eigen::Index i = 0; i < sc.system.omega.size(); ++i)
    sys["omega"].push_back(sc.system.omega(i));
  sys["theta"] = sc.system.theta;
  if (sc.system.basis_change)
    sys["basis_change"] = dump_complex_matrix(*sc.system.basis_change);
  j["system"] = sys;
  j["initial_state"] = dump_complex_vector(sc.psi0);

  json ctrl;
  ctrl["tones"] = json::array();
  for (const auto& t : sc.control.tones) {
    ctrl["tones"].push_back(
        {{"amplitude", t.amplitude},
         {"frequency", t.frequency},
         {"waveform", t.waveform == Waveform::Sin ? "sin" : "cos"}});
  }
  ctrl["amplitude_bias"] = sc.control.amplitude_bias;
  ctrl["noise_sigma"] = sc.control.noise_sigma;
  ctrl["noise_hold"] = sc.control.noise_hold;
  j["control"] = ctrl;

  j["measurement"] = {{"delay", sc.measurement.delay},
                      {"bias", sc.measurement.bias},
                      {"noise_sigma", sc.measurement.noise_sigma},
                      {"sample_period", sc.measurement.sample_period}};

  json est;
  est["mode"] = mode_name(sc.estimator.mode);
  est["gains"] = {{"Gamma", sc.estimator.gains.Gamma},
                  {"gamma", sc.estimator.gains.gamma},
                  {"amplitudes", sc.estimator.gains.amplitudes},
                  {"detuning", sc.estimator.gains.detuning},
                  {"phases", sc.estimator.gains.phases},
                  {"channels", sc.estimator.gains.channels}};
  est["theta_hat0"] = sc.estimator.theta_hat0;
  est["initial_state"] = dump_complex_vector(sc.estimator.psi_hat0);
  est["theory_verification"] = sc.estimator.theory_verification;
  j["estimator"] = est;

  j["integration"] = {{"h", sc.integration.h},
                      {"T", sc.integration.T},
                      {"record_stride", sc.integration.record_stride},
                      {"renormalize", sc.integration.renormalize},
                      {"snapshots", sc.integration.snapshots},
                      {"snapshot_until", sc.integration.snapshot_until}};
  j["seeds"] = {{"measurement", sc.seeds.measurement},
                {"control", sc.seeds.control}};
  return j;
}

}  // namespace

void validate(const Scenario& sc) { (void)resolve_run(sc); }

Scenario load_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("parse error: ") + e.what());
  }
  Scenario sc = from_json(j);
  validate(sc);
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument(path + ": cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario_json(ss.str());
}

std::string scenario_to_json(const Scenario& sc) {
  return to_json(sc).dump(2) + "\n";
}

}  // namespace qid
