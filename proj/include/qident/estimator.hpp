#pragma once

// The identification core: the full observer-based estimator, the
// first-averaged (frequency-free) estimator with optional detuning, the
// un-normalized 2-level observer, and the second-averaged theory system.

#include <optional>
#include <string>
#include <vector>

#include "qident/linalg.hpp"
#include "qident/system.hpp"

namespace qid {

enum class EstimatorMode { Full, Averaged, SecondAveraged, Unnormalized };

struct GainConfig {
  double Gamma = 0.0;              // state-injection gain
  std::vector<double> gamma;       // parameter gains, one per pair
  std::vector<double> amplitudes;  // drive amplitudes A_lk, one per pair
  std::vector<double> detuning;    // delta_lk (averaged mode), default 0
  std::vector<double> phases;      // tone phases: 0 for cos, pi/2 for sin
  std::vector<int> channels;       // measured output channels, 1-based
};

struct EstimatorState {
  EstimatorMode mode = EstimatorMode::Full;
  CMat rho_hat;                    // rho-hat / xi-hat / zeta-hat
  std::vector<double> theta_hat;
  CVec psi_tilde;                  // unnormalized mode only
};

struct EstimatorDeriv {
  CMat drho_hat;
  std::vector<double> dtheta_hat;
};

// Full estimator:
//   drho/dt = -i[H + u mu(theta_hat), rho] +
//             Gamma sum_j e_j (P_j rho + rho P_j - 2 y_j(rho) rho)
//   dtheta_lk/dt = -i gamma_lk u sum_j tr(P_j [sx_lk, rho]) e_j
// with e_j = y_j - tr(P_j rho), summed over the measured channels.
EstimatorDeriv full_estimator_rhs(const EstimatorState& est, const RVec& y,
                                  double u, const CMat& H,
                                  const GainConfig& gains);

// First-averaged estimator (interaction frame, frequency-free):
//   dxi/dt = -i sum_i (A_i th_i/2)[gx_i, xi] - i sum_i (delta_i/2)[sz_i, xi]
//            + Gamma sum_j e_j (P_j xi + xi P_j - 2 y_j(xi) xi)
//   dth_i/dt = gamma_i (A_i/2) tr(gy_i xi) (e_l 1[l in M] - e_k 1[k in M])
// where gx = cos(phi) sx - sin(phi) sy and gy = sin(phi) sx + cos(phi) sy
// carry each tone's phase (phi = 0 for cos drive, pi/2 for sin drive).
EstimatorDeriv averaged_estimator_rhs(const EstimatorState& est, const RVec& y,
                                      const GainConfig& gains);

// Second-averaged theory system (2-level only, zeta frozen, true theta known):
//   dzh/dt = -i (A(th_hat - th)/2)[sx, zh]
//            + (Gamma/8) a (sy zh + zh sy - 2 p zh)
//            + (Gamma/8) b (sz zh + zh sz - 2 q zh)
//   dth_hat/dt = (gamma A / 8)(p b - q a)
// with a = tr(sy(z - zh)), b = tr(sz(z - zh)), p = tr(sy zh), q = tr(sz zh).
EstimatorDeriv second_averaged_rhs(const CMat& zeta_hat, double theta_hat,
                                   const CMat& zeta, const GainConfig& gains,
                                   double theta_true);

// Un-normalized 2-level observer for known theta:
//   dpsi/dt = -i(H + theta u sx) psi + Gamma (y - <psi, P psi>) P psi
CVec unnormalized_observer_rhs(const CVec& psi_tilde, double y, double u,
                               double theta, double Gamma, const CMat& H);

// xi = e^{iHt} rho e^{-iHt} with H = diag(omega); populations invariant.
CMat to_interaction_frame(const CMat& rho, const RVec& omega, double t);
CMat from_interaction_frame(const CMat& xi, const RVec& omega, double t);

// Theorem-style small-gain conditions, reported as warnings only:
// Gamma <= eps A th, A th <= eps omega, gamma <= eps th.
std::vector<std::string> gain_regime_warnings(const GainConfig& gains,
                                              const std::vector<double>& theta_hat,
                                              double omega_min,
                                              double eps = 0.1);

}  // namespace qid
