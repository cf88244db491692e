#pragma once

// Deterministic fixed-step RK4 integration of the coupled plant+estimator
// pair with structure-preserving post-steps (re-Hermitize, renormalize),
// zero-order-hold measurement sampling, and strided trajectory recording.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qident/linalg.hpp"

namespace qid {

struct Scenario;  // experiment configuration, see scenario.hpp

struct IntegrationConfig {
  double h = 0.0;         // 0: default from tone/Rabi frequencies
  double T = 0.0;
  int record_stride = 0;  // 0: auto, keeps <= 100k samples per channel
  bool renormalize = true;
  bool snapshots = false;  // keep stride-1 state snapshots (diagnostics)
  double snapshot_until = 0.0;  // snapshot window [0, snapshot_until]
};

// Thrown when a stage value or the state goes non-finite (or the state
// leaves the physical region so far that continuing is meaningless).
struct BlowupError : std::runtime_error {
  explicit BlowupError(double when)
      : std::runtime_error("blowup at t=" + std::to_string(when)), t(when) {}
  double t;
};

// Composite ODE state: plant matrix, estimator matrix (density matrix or
// N x 1 wavefunction), and the parameter estimates.
struct SimState {
  CMat a;                  // rho / xi / zeta
  CMat b;                  // rho_hat / xi_hat / zeta_hat / psi_tilde
  std::vector<double> th;  // theta_hat

  SimState axpy(double c, const SimState& d) const;  // this + c * d
  bool all_finite() const;
};

using RhsFn = std::function<SimState(const SimState&, double)>;

// Classical RK4 update; throws BlowupError on non-finite stage values.
SimState rk4_step(const SimState& s, const RhsFn& rhs, double t, double h);

struct Trajectory {
  std::vector<double> times;
  std::vector<RVec> y;        // plant outputs per record
  std::vector<RVec> y_hat;    // estimator outputs per record
  std::vector<std::vector<double>> theta_hat;
  std::vector<double> V;            // scenario Lyapunov channel
  std::vector<double> e;            // first measured channel innovation
  std::vector<double> purity_hat;   // tr(rho_hat^2)
  std::vector<double> trace_drift;  // pre-renormalization |tr - 1|
  std::vector<double> purity_plant;

  // stride-1 snapshots over [0, snapshot_until] when enabled
  std::vector<double> snap_times;
  std::vector<CMat> snap_rho, snap_rho_hat;
  std::vector<std::vector<double>> snap_theta_hat;
  std::vector<double> snap_u;

  // Conservation maxima over the whole run (drifts measured before the
  // per-step structure restoration).
  double max_trace_drift_hat = 0.0;
  double max_herm_drift_hat = 0.0;
  double max_trace_drift_plant = 0.0;
  double max_purity_defect_hat = 0.0;    // over recorded times
  double max_purity_defect_plant = 0.0;  // over recorded times

  double runtime_seconds = 0.0;
  std::vector<std::string> warnings;
};

// Derived quantities fixed at validation time.
struct ResolvedRun {
  double h = 0.0;
  long long n_steps = 0;
  int record_stride = 1;
  long long sample_steps = 1;  // measurement sample period in steps
  long long delay_steps = 0;
  long long noise_hold_steps = 1;  // control-noise redraw period in steps
  std::vector<int> channels;   // measured channels, 1-based
  std::vector<double> amplitudes, phases, detuning;  // per pair
};

// Default step rules: 2pi/(100 w_max) for full runs, 2pi/(100 Omega_max)
// for averaged-frame runs with Omega_max the largest Rabi gap of H_eff.
ResolvedRun resolve_run(const Scenario& sc);

Trajectory integrate(const Scenario& sc);

}  // namespace qid
