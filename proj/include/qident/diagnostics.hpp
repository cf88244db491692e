#pragma once

// Lyapunov monitors, convergence metrics, Rabi-spectrum analysis of the
// effective averaged Hamiltonian, and identifiability precondition checks.

#include <vector>

#include "qident/estimator.hpp"
#include "qident/integrate.hpp"
#include "qident/linalg.hpp"

namespace qid {

struct Scenario;

struct RabiReport {
  RVec Omega;              // ascending
  double min_gap = 0.0;    // min_{m != n} |Omega_m - Omega_n|
  double max_gap = 0.0;    // max_{m != n}, the full spectral range
  bool degenerate = false; // min_gap < 1e-6 max|Omega| (or all zero)
  double gain_margin_Gamma = 0.0;  // Gamma / min_gap
  double gain_margin_gamma = 0.0;  // max gamma_lk / min_gap
};

struct IdentifiabilityReport {
  bool a2_ok = false;        // all |omega_l - omega_k| pairwise distinct
  bool a3_ok = false;        // diag(mu) = 0
  bool a1_connected = false; // coupling graph of nonzero mu_lk connected
  double min_transition_gap = 0.0;
};

struct ConvergenceMetrics {
  std::vector<double> final_error;        // |theta_hat(T) - theta| per pair
  double max_final_error = 0.0;
  double tolerance = 0.0;
  // First recorded time after which the error stays below tolerance;
  // NaN when never reached.
  std::vector<double> time_to_tolerance;
  // Log-least-squares decay rate of the max-error envelope (peaks over
  // sliding windows); positive means decay, NaN when indeterminate.
  double fitted_rate = 0.0;
};

struct RateAudit {
  double max_residual = 0.0;      // max |analytic dV/dt - centered FD of V|
  double max_damping_term = 0.0;  // max of the injection damping term (<= 0)
};

// V = (y - y_hat)^2 / 2 + (theta - theta_hat)^2 / (2 gamma); gamma > 0.
double lyapunov_2level(double y, double y_hat, double theta, double theta_hat,
                       double gamma);

// V = 1/2 sum_n tr(P_n(xi_hat - xi))^2 + sum_lk 2 (theta_hat - theta)^2 / gamma_lk
double lyapunov_N(const CMat& xi, const CMat& xi_hat,
                  const std::vector<double>& theta,
                  const std::vector<double>& theta_hat,
                  const std::vector<double>& gamma);

// Compares the closed-form dV/dt against a centered finite difference of V
// along a stride-1 snapshot window. Supports full 2-level runs and averaged
// runs with every channel measured; the residual contracts at O(h^2).
RateAudit lyapunov_rate_audit(const Trajectory& traj, const Scenario& sc);
double lyapunov_rate_residual(const Trajectory& traj, const Scenario& sc);

// Spectrum of H_eff = sum (A_lk theta_lk / 2) sigma_x^{lk}. Optional gains
// fill in the margin ratios for the regime Gamma, gamma << gap.
RabiReport rabi_analysis(const std::vector<double>& amplitudes,
                         const std::vector<double>& theta,
                         const GainConfig* gains = nullptr);

IdentifiabilityReport check_identifiability(const RVec& omega, const CMat& mu);

ConvergenceMetrics convergence_metrics(const Trajectory& traj,
                                       const std::vector<double>& theta_true,
                                       double tol = 0.05,
                                       double envelope_window = 0.0);

// Sliding-window secant slope max((V(t+w) - V(t)) / w); <= 0 certifies
// decrease in average at window scale w.
double max_windowed_rate(const std::vector<double>& t,
                         const std::vector<double>& v, double window,
                         double stride);

// Means of v over successive non-overlapping windows of the given length.
std::vector<double> windowed_means(const std::vector<double>& t,
                                   const std::vector<double>& v, double window);

}  // namespace qid
