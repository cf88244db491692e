#pragma once

// Experiment configuration: plant, control field, measurement model,
// estimator setup, integration parameters, and RNG seeds. Scenarios load
// from and save to a strict JSON schema (unknown keys rejected).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qident/estimator.hpp"
#include "qident/integrate.hpp"
#include "qident/system.hpp"

namespace qid {

struct EstimatorConfig {
  EstimatorMode mode = EstimatorMode::Full;
  GainConfig gains;
  std::vector<double> theta_hat0;
  CVec psi_hat0;
  // Second-averaged runs integrate idealized error dynamics that need the
  // true parameter; they must be explicitly marked as theory checks.
  bool theory_verification = false;
};

struct Seeds {
  std::uint64_t measurement = 0;
  std::uint64_t control = 0;
};

struct Metadata {
  std::string name;
  std::string description;
};

struct Scenario {
  int version = 1;
  QuantumSystem system;
  CVec psi0;  // plant initial wavefunction
  ControlField control;
  MeasurementModel measurement;
  EstimatorConfig estimator;
  IntegrationConfig integration;
  Seeds seeds;
  Metadata metadata;
};

// Throws std::invalid_argument naming the offending key and constraint.
void validate(const Scenario& sc);

// JSON round trip. load_scenario throws std::invalid_argument on schema
// violations (missing keys, unknown keys, malformed values).
Scenario load_scenario_json(const std::string& text);
Scenario load_scenario_file(const std::string& path);
std::string scenario_to_json(const Scenario& sc);

// Built-in scenario registry.
std::vector<std::string> builtin_names();
bool is_builtin(const std::string& name);
Scenario builtin_scenario(const std::string& name);
std::string builtin_summary(const std::string& name);

}  // namespace qid
