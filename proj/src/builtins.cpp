#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qident/diagnostics.hpp"
#include "qident/scenario.hpp"

namespace qid {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;

Scenario two_level_base() {
  Scenario sc;
  sc.system.dim = 2;
  sc.system.omega = RVec(2);
  sc.system.omega << 0.5, -0.5;
  sc.system.theta = {1.0};
  sc.psi0 = CVec(2);
  sc.psi0 << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  sc.control.tones = {{1.0, 1.0, Waveform::Sin}};
  sc.estimator.mode = EstimatorMode::Full;
  sc.estimator.gains.Gamma = 1.0;
  sc.estimator.gains.gamma = {0.1};
  sc.estimator.theta_hat0 = {1.5};
  sc.estimator.psi_hat0 = CVec(2);
  sc.estimator.psi_hat0 << 1.0 / std::sqrt(5.0), 2.0 / std::sqrt(5.0);
  sc.integration.h = 2.0 * kPi / 4000.0;
  sc.integration.T = 50.0 * kPi;
  return sc;
}

Scenario fig1() {
  Scenario sc = two_level_base();
  sc.metadata.name = "fig1-2level";
  sc.metadata.description =
      "2-level full filter, resonant sine drive, theta_hat(0)=1.5";
  return sc;
}

Scenario fig3() {
  Scenario sc;
  sc.metadata.name = "fig3-3level";
  sc.metadata.description =
      "3-level full filter, three-tone drive, all populations measured";
  sc.system.dim = 3;
  sc.system.omega = RVec(3);
  sc.system.omega << 0.0, 1.0, 3.0;
  sc.system.theta = {1.3, 1.0, -1.5};  // pairs (1,2), (1,3), (2,3)
  sc.psi0 = CVec(3);
  sc.psi0 << 1.0, 2.0, 5.0;
  sc.psi0 /= std::sqrt(30.0);
  sc.control.tones = {{0.1, 1.0, Waveform::Sin},
                      {0.1, 3.0, Waveform::Sin},
                      {0.1, 2.0, Waveform::Sin}};
  sc.estimator.mode = EstimatorMode::Full;
  sc.estimator.gains.Gamma = 0.05;
  sc.estimator.gains.gamma = {1.0};
  sc.estimator.theta_hat0 = {1.2, 0.9, -1.7};
  sc.estimator.psi_hat0 = CVec(3);
  sc.estimator.psi_hat0 << 1.0, 2.0, 3.0;
  sc.estimator.psi_hat0 /= std::sqrt(14.0);
  sc.integration.h = 2.0 * kPi / 1600.0;
  sc.integration.T = 1600.0;
  return sc;
}

Scenario fig5() {
  Scenario sc;
  sc.metadata.name = "fig5-4level";
  sc.metadata.description =
      "4-level full filter, laboratory-basis Hamiltonian, Rabi-scale sampling";
  sc.system.dim = 4;
  CMat hlab(4, 4);
  hlab << 0.0833, -0.0038, -0.0087, 0.0041,
      -0.0038, 0.0647, 0.0083, 0.0038,
      -0.0087, 0.0083, 0.0036, -0.0076,
      0.0041, 0.0038, -0.0076, 0.0357;
  const EigenDecomposition eig = hermitian_eigendecompose(hlab);
  sc.system.omega = eig.eigenvalues;
  sc.system.basis_change = eig.eigenvectors;
  sc.system.theta = {5.0, -1.0, 0.0, 6.0, -1.5, 7.0};
  sc.psi0 = CVec(4);
  sc.psi0 << 0.5, 0.5, 0.5, 0.5;
  const auto pairs = transition_pairs(4);
  for (const auto& [l, k] : pairs) {
    sc.control.tones.push_back(
        {0.01, std::abs(sc.system.omega(l - 1) - sc.system.omega(k - 1)),
         Waveform::Sin});
  }
  sc.estimator.mode = EstimatorMode::Full;
  sc.estimator.gains.Gamma = 1.0;
  sc.estimator.gains.gamma = {0.5};
  sc.estimator.theta_hat0 = {6.0, -1.5, 0.05, 7.0, -2.0, 6.0};
  sc.estimator.psi_hat0 = CVec(4);
  sc.estimator.psi_hat0 << 1.0, 2.0, 3.0, 4.0;
  sc.estimator.psi_hat0 /= std::sqrt(30.0);
  // Output grid tied to the averaged-mode default step: 2pi over 100x the
  // largest Rabi gap of H_eff. Holding the measurement that long with
  // Gamma=1 destabilizes the loop, so the filter samples every step and the
  // integrator runs 1600x finer; purity drift stays below 1e-7 over T=1e5.
  const std::vector<double> amps(6, 0.01);
  const RabiReport rabi = rabi_analysis(amps, sc.system.theta);
  const double ts = 2.0 * kPi / (100.0 * rabi.max_gap);
  sc.integration.h = ts / 1600.0;
  sc.integration.record_stride = 1600;
  sc.integration.T = 1e5;
  return sc;
}

Scenario fig6() {
  Scenario sc = two_level_base();
  sc.metadata.name = "fig6-noisy-meas";
  sc.metadata.description =
      "y(t)=tr(P rho(t-0.3))+0.06+0.07eps, delayed biased noisy measurement";
  sc.measurement.delay = 0.3;
  sc.measurement.bias = 0.06;
  sc.measurement.noise_sigma = 0.07;
  sc.seeds.measurement = 1000;
  sc.integration.h = 0.0005;
  return sc;
}

Scenario fig7() {
  Scenario sc = two_level_base();
  sc.metadata.name = "fig7-noisy-control";
  sc.metadata.description = "u(t)=(A+0.03)sin(t)+0.07w";
  sc.control.amplitude_bias = 0.03;
  sc.control.noise_sigma = 0.07;
  // Redrawing w every integrator step would tie the noise bandwidth to h;
  // holding each draw for a fixed 5e-4 window (two substeps here) keeps the
  // dither spectrum step-size independent.
  sc.control.noise_hold = 0.0005;
  sc.seeds.control = 2000;
  sc.integration.h = 0.00025;
  return sc;
}

Scenario detuned() {
  Scenario sc = two_level_base();
  sc.metadata.name = "detuned-2level";
  sc.metadata.description =
      "averaged filter driven 1% off resonance (detuning 0.01)";
  sc.estimator.mode = EstimatorMode::Averaged;
  sc.control.tones = {{1.0, 0.99, Waveform::Sin}};
  return sc;
}

Scenario theory_a2() {
  Scenario sc;
  sc.metadata.name = "theory-dynA2";
  sc.metadata.description =
      "second-averaged error system, exact dissipation check";
  sc.system.dim = 2;
  sc.system.omega = RVec(2);
  sc.system.omega << 0.5, -0.5;
  sc.system.theta = {1.0};
  sc.psi0 = CVec(2);
  sc.psi0 << 1.0, 0.0;
  sc.estimator.mode = EstimatorMode::SecondAveraged;
  sc.estimator.theory_verification = true;
  sc.estimator.gains.Gamma = 1.0;
  sc.estimator.gains.gamma = {0.1};
  sc.estimator.gains.amplitudes = {1.0};
  sc.estimator.theta_hat0 = {1.5};
  sc.estimator.psi_hat0 = CVec(2);
  sc.estimator.psi_hat0 << 1.0 / std::sqrt(5.0), 2.0 / std::sqrt(5.0);
  sc.integration.h = 2.0 * kPi / 100.0;
  sc.integration.T = 50.0 * kPi;
  return sc;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"fig1-2level",      "fig3-3level",       "fig5-4level",
          "fig6-noisy-meas",  "fig7-noisy-control", "detuned-2level",
          "theory-dynA2"};
}

bool is_builtin(const std::string& name) {
  const auto names = builtin_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "fig1-2level") return fig1();
  if (name == "fig3-3level") return fig3();
  if (name == "fig5-4level") return fig5();
  if (name == "fig6-noisy-meas") return fig6();
  if (name == "fig7-noisy-control") return fig7();
  if (name == "detuned-2level") return detuned();
  if (name == "theory-dynA2") return theory_a2();
  throw std::invalid_argument(name + ": unknown scenario");
}

std::string builtin_summary(const std::string& name) {
  return builtin_scenario(name).metadata.description;
}

}  // namespace qid
