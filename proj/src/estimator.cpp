#include "qident/estimator.hpp"

#include <cmath>
#include <sstream>

namespace qid {

namespace {

// Injection term Gamma e (P rho + rho P - 2 tr(P rho) rho) summed over the
// measured channels; shared by the full and averaged estimators.
CMat injection(const CMat& rho, const RVec& y, double Gamma,
               const std::vector<int>& channels) {
  const int n = static_cast<int>(rho.rows());
  CMat out = CMat::Zero(n, n);
  for (int ch : channels) {
    const int j = ch - 1;
    const double yhat = rho(j, j).real();
    const double e = y[j] - yhat;
    CMat term = CMat::Zero(n, n);
    term.row(j) += rho.row(j);
    term.col(j) += rho.col(j);
    term -= 2.0 * yhat * rho;
    out += (Gamma * e) * term;
  }
  return out;
}

void check_sizes(const EstimatorState& est, const RVec& y,
                 const GainConfig& gains) {
  const int n = static_cast<int>(est.rho_hat.rows());
  const int np = num_pairs(n);
  if (est.rho_hat.cols() != n)
    throw std::invalid_argument("estimator: rho_hat not square");
  if (y.size() != n) throw std::invalid_argument("estimator: y size mismatch");
  if (static_cast<int>(est.theta_hat.size()) != np ||
      static_cast<int>(gains.gamma.size()) != np)
    throw std::invalid_argument("estimator: theta/gamma size mismatch");
  for (int ch : gains.channels)
    if (ch < 1 || ch > n)
      throw std::invalid_argument("estimator: channel out of range");
  if (!y.allFinite()) throw std::invalid_argument("estimator: non-finite y");
}

}  // namespace

EstimatorDeriv full_estimator_rhs(const EstimatorState& est, const RVec& y,
                                  double u, const CMat& H,
                                  const GainConfig& gains) {
  check_sizes(est, y, gains);
  const int n = static_cast<int>(est.rho_hat.rows());
  const CMat& rho = est.rho_hat;
  const CMat mu = dipole_from_theta(est.theta_hat, n);
  const CMat G = H + u * mu;

  EstimatorDeriv d;
  d.drho_hat = cplx(0.0, -1.0) * commutator(G, rho) +
               injection(rho, y, gains.Gamma, gains.channels);

  const auto pairs = transition_pairs(n);
  d.dtheta_hat.assign(pairs.size(), 0.0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    // -i tr(P_j [sx_lk, rho]) is real; tr(P_j [sx, rho]) itself is imaginary,
    // and tr(P_j [sx, rho]) = (sx rho - rho sx)_{jj}.
    const auto [l, k] = pairs[i];
    const int a = l - 1, b = k - 1;
    double acc = 0.0;
    for (int ch : gains.channels) {
      const int j = ch - 1;
      cplx tr_j(0.0, 0.0);
      if (j == a) tr_j = rho(b, a) - rho(a, b);  // (sx rho - rho sx)_{aa}
      if (j == b) tr_j = rho(a, b) - rho(b, a);
      const double e = y[j] - rho(j, j).real();
      acc += tr_j.imag() * e;  // Re(-i z) = Im(z)
    }
    d.dtheta_hat[i] = gains.gamma[i] * u * acc;
  }
  return d;
}

EstimatorDeriv averaged_estimator_rhs(const EstimatorState& est, const RVec& y,
                                      const GainConfig& gains) {
  check_sizes(est, y, gains);
  const int n = static_cast<int>(est.rho_hat.rows());
  const int np = num_pairs(n);
  if (static_cast<int>(gains.amplitudes.size()) != np)
    throw std::invalid_argument("averaged_estimator_rhs: amplitudes size");
  const CMat& xi = est.rho_hat;
  const auto pairs = transition_pairs(n);

  CMat G = CMat::Zero(n, n);  // slow drift generator
  for (int i = 0; i < np; ++i) {
    const auto [l, k] = pairs[i];
    const double phi =
        gains.phases.empty() ? 0.0 : gains.phases[static_cast<std::size_t>(i)];
    const CMat gx = std::cos(phi) * generalized_pauli(l, k, Axis::X, n) -
                    std::sin(phi) * generalized_pauli(l, k, Axis::Y, n);
    G += (gains.amplitudes[i] * est.theta_hat[i] / 2.0) * gx;
    const double delta =
        gains.detuning.empty() ? 0.0 : gains.detuning[static_cast<std::size_t>(i)];
    if (delta != 0.0)
      G += (delta / 2.0) * generalized_pauli(l, k, Axis::Z, n);
  }

  EstimatorDeriv d;
  d.drho_hat = cplx(0.0, -1.0) * commutator(G, xi) +
               injection(xi, y, gains.Gamma, gains.channels);

  d.dtheta_hat.assign(pairs.size(), 0.0);
  auto measured = [&](int ch) {
    for (int c : gains.channels)
      if (c == ch) return true;
    return false;
  };
  for (int i = 0; i < np; ++i) {
    const auto [l, k] = pairs[i];
    const double phi =
        gains.phases.empty() ? 0.0 : gains.phases[static_cast<std::size_t>(i)];
    const CMat gy = std::sin(phi) * generalized_pauli(l, k, Axis::X, n) +
                    std::cos(phi) * generalized_pauli(l, k, Axis::Y, n);
    const double gy_tr = (gy * xi).trace().real();
    double innov = 0.0;
    if (measured(l)) innov += y[l - 1] - xi(l - 1, l - 1).real();
    if (measured(k)) innov -= y[k - 1] - xi(k - 1, k - 1).real();
    d.dtheta_hat[i] = gains.gamma[i] * (gains.amplitudes[i] / 2.0) * gy_tr * innov;
  }
  return d;
}

EstimatorDeriv second_averaged_rhs(const CMat& zeta_hat, double theta_hat,
                                   const CMat& zeta, const GainConfig& gains,
                                   double theta_true) {
  if (zeta_hat.rows() != 2 || zeta.rows() != 2)
    throw std::invalid_argument("second_averaged_rhs: 2-level only");
  const CMat sx = pauli(Axis::X), sy = pauli(Axis::Y), sz = pauli(Axis::Z);
  const double A = gains.amplitudes.at(0);
  const double gamma = gains.gamma.at(0);
  const double a = (sy * (zeta - zeta_hat)).trace().real();
  const double b = (sz * (zeta - zeta_hat)).trace().real();
  const double p = (sy * zeta_hat).trace().real();
  const double q = (sz * zeta_hat).trace().real();

  EstimatorDeriv d;
  d.drho_hat =
      cplx(0.0, -1.0) * (A * (theta_hat - theta_true) / 2.0) *
          commutator(sx, zeta_hat) +
      (gains.Gamma / 8.0) * a *
          (sy * zeta_hat + zeta_hat * sy - 2.0 * p * zeta_hat) +
      (gains.Gamma / 8.0) * b *
          (sz * zeta_hat + zeta_hat * sz - 2.0 * q * zeta_hat);
  d.dtheta_hat = {gamma * A / 8.0 * (p * b - q * a)};
  return d;
}

CVec unnormalized_observer_rhs(const CVec& psi_tilde, double y, double u,
                               double theta, double Gamma, const CMat& H) {
  if (psi_tilde.size() != 2 || H.rows() != 2)
    throw std::invalid_argument("unnormalized_observer_rhs: 2-level only");
  const CMat G = H + theta * u * pauli(Axis::X);
  const double y_tilde = std::real(psi_tilde[0] * std::conj(psi_tilde[0]));
  CVec d = cplx(0.0, -1.0) * (G * psi_tilde);
  d[0] += Gamma * (y - y_tilde) * psi_tilde[0];  // P psi, P = |1><1|
  return d;
}

CMat to_interaction_frame(const CMat& rho, const RVec& omega, double t) {
  const int n = static_cast<int>(rho.rows());
  if (omega.size() != n)
    throw std::invalid_argument("to_interaction_frame: omega size");
  CMat xi(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      xi(j, k) = std::exp(cplx(0.0, (omega[j] - omega[k]) * t)) * rho(j, k);
  return xi;
}

CMat from_interaction_frame(const CMat& xi, const RVec& omega, double t) {
  return to_interaction_frame(xi, omega, -t);
}

std::vector<std::string> gain_regime_warnings(
    const GainConfig& gains, const std::vector<double>& theta_hat,
    double omega_min, double eps) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < theta_hat.size(); ++i) {
    const double th = std::abs(theta_hat[i]);
    const double A =
        i < gains.amplitudes.size() ? std::abs(gains.amplitudes[i]) : 0.0;
    const double rabi = A * th;
    if (gains.Gamma > eps * rabi && rabi > 0.0) {
      std::ostringstream ss;
      ss << "Gamma=" << gains.Gamma << " exceeds " << eps << "*A*theta="
         << eps * rabi << " for pair " << i;
      out.push_back(ss.str());
    }
    if (rabi > eps * omega_min && omega_min > 0.0) {
      std::ostringstream ss;
      ss << "A*theta=" << rabi << " exceeds " << eps
         << "*omega=" << eps * omega_min << " for pair " << i;
      out.push_back(ss.str());
    }
    if (i < gains.gamma.size() && gains.gamma[i] > eps * th && th > 0.0) {
      std::ostringstream ss;
      ss << "gamma=" << gains.gamma[i] << " exceeds " << eps
         << "*theta=" << eps * th << " for pair " << i;
      out.push_back(ss.str());
    }
  }
  return out;
}

}  // namespace qid
