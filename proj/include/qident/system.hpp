#pragma once

// The "true" plant: an N-level closed system driven by a resonant control
// field, population outputs, and the laboratory-imperfection models
// (measurement delay/bias/noise, control amplitude bias/noise).

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qident/linalg.hpp"

namespace qid {

// Transition pairs (l,k), 1-based, l < k, in lexicographic order:
// (1,2), (1,3), ..., (1,N), (2,3), ...
std::vector<std::pair<int, int>> transition_pairs(int dim);
int pair_index(int l, int k, int dim);
int num_pairs(int dim);

// Builds mu = sum_{l<k} theta_lk sigma_x^{lk} in the working basis.
CMat dipole_from_theta(const std::vector<double>& theta, int dim);

struct QuantumSystem {
  int dim = 2;
  RVec omega;                      // free-Hamiltonian eigenvalues, ascending
  std::vector<double> theta;       // true dipole couplings theta_lk
  std::optional<CMat> basis_change;  // E with H = E^dag diag(omega) E when the
                                     // scenario is specified off the eigenbasis

  CMat hamiltonian() const;        // in the working basis
  CMat dipole() const { return dipole_from_theta(theta, dim); }
  CMat projector(int j) const;     // P_j = |j><j|, 1-based, working basis
  // |omega_l - omega_k| for every transition pair, pair order.
  std::vector<double> transition_frequencies() const;
};

enum class Waveform { Cos, Sin };

struct Tone {
  double amplitude = 0.0;
  double frequency = 0.0;  // rad/time
  Waveform waveform = Waveform::Cos;
};

struct ControlField {
  std::vector<Tone> tones;
  double amplitude_bias = 0.0;
  double noise_sigma = 0.0;
  double noise_hold = 0.0;  // 0 means "integrator step"
};

struct MeasurementModel {
  double delay = 0.0;
  double bias = 0.0;
  double noise_sigma = 0.0;
  double sample_period = 0.0;  // 0 means "integrator step"
};

// Gaussian dither tied to the integrator grid: one draw per advance(),
// held constant within the step (and across the four RK4 stages).
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : rng_(seed) {}
  double advance() { return value_ = dist_(rng_); }
  double value() const { return value_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
  double value_ = 0.0;
};

// Ring buffer of past sampled outputs for the measurement delay.
class DelayLine {
 public:
  // delay_steps = delay / h; pre-filled with y0 so early reads are defined.
  DelayLine(int delay_steps, const RVec& y0);
  void push(const RVec& y);
  const RVec& delayed() const;  // y(t - delay)

 private:
  std::deque<RVec> buf_;
  std::size_t capacity_;
};

// drho/dt = -i[H + u mu, rho]
CMat true_rhs(const CMat& rho, double u, const QuantumSystem& sys);

// Diagonal real parts tr(P_j rho).
RVec populations(const CMat& rho);

// Sum over tones of (A + bias) * wf(freq t) + sigma * w.
double field_value(const ControlField& field, double t, double noise_draw);

// Delayed populations plus bias plus per-channel Gaussian noise.
// `draws` must hold one standard-normal value per channel.
RVec measured_output(const DelayLine& line, const MeasurementModel& model,
                     const RVec& draws);

// (rho + rho^dag)/2 followed by trace normalization.
void rehermitize_renormalize(CMat& rho);

double purity(const CMat& rho);

}  // namespace qid
