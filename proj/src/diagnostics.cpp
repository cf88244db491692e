#include "qident/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qident/scenario.hpp"
#include "qident/system.hpp"

namespace qid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

int dim_from_pairs(std::size_t np, const char* what) {
  const int n =
      static_cast<int>(std::lround((1.0 + std::sqrt(1.0 + 8.0 * np)) / 2.0));
  if (np == 0 || static_cast<std::size_t>(n * (n - 1) / 2) != np)
    throw std::invalid_argument(std::string(what) +
                                ": length is not N(N-1)/2 for any N");
  return n;
}

}  // namespace

double lyapunov_2level(double y, double y_hat, double theta, double theta_hat,
                       double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const double e = y - y_hat;
  const double d = theta - theta_hat;
  return 0.5 * e * e + d * d / (2.0 * gamma);
}

double lyapunov_N(const CMat& xi, const CMat& xi_hat,
                  const std::vector<double>& theta,
                  const std::vector<double>& theta_hat,
                  const std::vector<double>& gamma) {
  const int n = static_cast<int>(xi.rows());
  if (xi.cols() != n || xi_hat.rows() != n || xi_hat.cols() != n)
    throw std::invalid_argument("state dimension mismatch");
  const std::size_t np = static_cast<std::size_t>(num_pairs(n));
  if (theta.size() != np || theta_hat.size() != np || gamma.size() != np)
    throw std::invalid_argument("parameter dimension mismatch");
  double v = 0.0;
  for (int j = 0; j < n; ++j) {
    const double eps = (xi_hat(j, j) - xi(j, j)).real();
    v += 0.5 * eps * eps;
  }
  for (std::size_t i = 0; i < np; ++i) {
    if (!(gamma[i] > 0.0)) throw std::invalid_argument("gamma must be positive");
    const double d = theta_hat[i] - theta[i];
    v += 2.0 / gamma[i] * d * d;
  }
  return v;
}

RateAudit lyapunov_rate_audit(const Trajectory& traj, const Scenario& sc) {
  const auto& ts = traj.snap_times;
  if (ts.size() < 3)
    throw std::invalid_argument("rate audit window too short (< 3 samples)");
  if (sc.measurement.delay != 0.0 || sc.measurement.noise_sigma != 0.0 ||
      sc.measurement.bias != 0.0 || sc.control.noise_sigma != 0.0 ||
      sc.measurement.sample_period != 0.0)
    throw std::invalid_argument(
        "rate audit requires an ideal step-sampled measurement");

  const ResolvedRun rr = resolve_run(sc);
  const int n = sc.system.dim;
  const int np = num_pairs(n);
  std::vector<double> gamma = sc.estimator.gains.gamma;
  if (gamma.size() == 1) gamma.assign(np, gamma[0]);
  const double Gamma = sc.estimator.gains.Gamma;
  const auto& theta = sc.system.theta;
  const EstimatorMode mode = sc.estimator.mode;
  const auto pairs = transition_pairs(n);

  if (mode == EstimatorMode::Full && n != 2)
    throw std::invalid_argument(
        "full-mode rate audit is only derived for 2-level runs");
  if (mode == EstimatorMode::Averaged &&
      static_cast<int>(rr.channels.size()) != n)
    throw std::invalid_argument(
        "averaged-mode rate audit requires all channels measured");
  if (mode != EstimatorMode::Full && mode != EstimatorMode::Averaged)
    throw std::invalid_argument("rate audit supports full and averaged modes");

  const std::size_t m = ts.size();
  std::vector<double> v(m), rate(m);
  RateAudit audit;
  audit.max_damping_term = -kInf;

  std::vector<CMat> gy(np);
  if (mode == EstimatorMode::Averaged) {
    for (int i = 0; i < np; ++i) {
      const auto [l, k] = pairs[i];
      gy[i] = std::sin(rr.phases[i]) * generalized_pauli(l, k, Axis::X, n) +
              std::cos(rr.phases[i]) * generalized_pauli(l, k, Axis::Y, n);
    }
  }

  for (std::size_t s = 0; s < m; ++s) {
    const CMat& rho = traj.snap_rho[s];
    const CMat& rho_hat = traj.snap_rho_hat[s];
    const auto& th = traj.snap_theta_hat[s];
    const RVec y = populations(rho);
    const RVec yh = populations(rho_hat);

    if (mode == EstimatorMode::Full) {
      const int c0 = rr.channels.front() - 1;
      const double e = y(c0) - yh(c0);
      const double dth = theta[0] - th[0];
      v[s] = 0.5 * e * e + dth * dth / (2.0 * gamma[0]);
      const CMat sx = pauli(Axis::X);
      const CMat diff = rho_hat - rho;
      const CMat p = sc.system.projector(c0 + 1);
      const double comm =
          (cplx(0.0, 1.0) * theta[0] * traj.snap_u[s] *
           (p * (sx * diff - diff * sx)).trace())
              .real();
      const double damping = -2.0 * Gamma * e * e * yh(c0) * (1.0 - yh(c0));
      rate[s] = comm * e + damping;
      audit.max_damping_term = std::max(audit.max_damping_term, damping);
    } else {
      double val = 0.0;
      for (int j = 0; j < n; ++j) {
        const double eps = yh(j) - y(j);
        val += 0.5 * eps * eps;
      }
      double r = 0.0, se2y = 0.0, sey = 0.0;
      for (int i = 0; i < np; ++i) {
        const double d = th[i] - theta[i];
        val += 2.0 / gamma[i] * d * d;
        const auto [l, k] = pairs[i];
        const double el = y(l - 1) - yh(l - 1);
        const double ek = y(k - 1) - yh(k - 1);
        const double syx = (gy[i] * rho_hat).trace().real();
        const double syd = (gy[i] * (rho_hat - rho)).trace().real();
        r += 0.5 * rr.amplitudes[i] * (el - ek) *
             (3.0 * d * syx - theta[i] * syd);
      }
      for (int j = 0; j < n; ++j) {
        const double e = y(j) - yh(j);
        se2y += e * e * yh(j);
        sey += e * yh(j);
      }
      const double damping = -2.0 * Gamma * (se2y - sey * sey);
      v[s] = val;
      rate[s] = r + damping;
      audit.max_damping_term = std::max(audit.max_damping_term, damping);
    }
  }

  for (std::size_t s = 1; s + 1 < m; ++s) {
    const double fd = (v[s + 1] - v[s - 1]) / (ts[s + 1] - ts[s - 1]);
    audit.max_residual = std::max(audit.max_residual, std::abs(fd - rate[s]));
  }
  return audit;
}

double lyapunov_rate_residual(const Trajectory& traj, const Scenario& sc) {
  return lyapunov_rate_audit(traj, sc).max_residual;
}

RabiReport rabi_analysis(const std::vector<double>& amplitudes,
                         const std::vector<double>& theta,
                         const GainConfig* gains) {
  if (amplitudes.size() != theta.size())
    throw std::invalid_argument("amplitudes and theta must have equal length");
  const int n = dim_from_pairs(theta.size(), "theta");
  CMat heff = CMat::Zero(n, n);
  const auto pairs = transition_pairs(n);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    heff += 0.5 * amplitudes[i] * theta[i] *
            generalized_pauli(pairs[i].first, pairs[i].second, Axis::X, n);
  }
  const auto eig = hermitian_eigendecompose(heff);

  RabiReport rep;
  rep.Omega = eig.eigenvalues;
  rep.min_gap = kInf;
  for (int j = 0; j + 1 < n; ++j)
    rep.min_gap = std::min(rep.min_gap, rep.Omega(j + 1) - rep.Omega(j));
  rep.max_gap = rep.Omega(n - 1) - rep.Omega(0);
  const double scale =
      std::max(std::abs(rep.Omega(0)), std::abs(rep.Omega(n - 1)));
  rep.degenerate = scale == 0.0 || rep.min_gap < 1e-6 * scale;
  if (gains && rep.min_gap > 0.0) {
    rep.gain_margin_Gamma = gains->Gamma / rep.min_gap;
    rep.gain_margin_gamma =
        gains->gamma.empty()
            ? 0.0
            : *std::max_element(gains->gamma.begin(), gains->gamma.end()) /
                  rep.min_gap;
  } else if (gains) {
    rep.gain_margin_Gamma = rep.gain_margin_gamma = kInf;
  }
  return rep;
}

IdentifiabilityReport check_identifiability(const RVec& omega, const CMat& mu) {
  const int n = static_cast<int>(omega.size());
  if (mu.rows() != n || mu.cols() != n)
    throw std::invalid_argument("omega and mu dimensions disagree");
  constexpr double tol = 1e-9;
  IdentifiabilityReport rep;

  std::vector<double> gaps;
  for (int l = 0; l < n; ++l)
    for (int k = l + 1; k < n; ++k) gaps.push_back(std::abs(omega(l) - omega(k)));
  rep.min_transition_gap = kInf;
  rep.a2_ok = true;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    for (std::size_t j = i + 1; j < gaps.size(); ++j) {
      const double d = std::abs(gaps[i] - gaps[j]);
      rep.min_transition_gap = std::min(rep.min_transition_gap, d);
      if (d <= tol) rep.a2_ok = false;
    }
  }

  rep.a3_ok = true;
  for (int j = 0; j < n; ++j)
    if (std::abs(mu(j, j)) > tol) rep.a3_ok = false;

  std::vector<int> seen(n, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  while (!queue.empty()) {
    const int v = queue.back();
    queue.pop_back();
    for (int w = 0; w < n; ++w) {
      if (!seen[w] && v != w && std::abs(mu(v, w)) > tol) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  rep.a1_connected =
      std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
  return rep;
}

ConvergenceMetrics convergence_metrics(const Trajectory& traj,
                                       const std::vector<double>& theta_true,
                                       double tol, double envelope_window) {
  const std::size_t m = traj.times.size();
  const std::size_t np = theta_true.size();
  if (m == 0 || traj.theta_hat.empty() || traj.theta_hat[0].size() != np)
    throw std::invalid_argument("trajectory has no matching theta channels");

  ConvergenceMetrics out;
  out.tolerance = tol;
  out.final_error.resize(np);
  out.time_to_tolerance.assign(np, kNaN);
  for (std::size_t i = 0; i < np; ++i)
    out.final_error[i] = std::abs(traj.theta_hat.back()[i] - theta_true[i]);
  out.max_final_error =
      *std::max_element(out.final_error.begin(), out.final_error.end());

  for (std::size_t i = 0; i < np; ++i) {
    std::ptrdiff_t last_bad = -1;
    for (std::size_t s = 0; s < m; ++s) {
      if (std::abs(traj.theta_hat[s][i] - theta_true[i]) >= tol)
        last_bad = static_cast<std::ptrdiff_t>(s);
    }
    if (last_bad < 0) {
      out.time_to_tolerance[i] = traj.times.front();
    } else if (last_bad + 1 < static_cast<std::ptrdiff_t>(m)) {
      out.time_to_tolerance[i] = traj.times[last_bad + 1];
    }
  }

  // Envelope decay rate: peaks of the max-parameter error per window,
  // least squares on the log against the window centers.
  const double T = traj.times.back() - traj.times.front();
  double w = envelope_window > 0.0 ? envelope_window : T / 20.0;
  out.fitted_rate = kNaN;
  if (w > 0.0 && m >= 4) {
    std::vector<double> cx, cy;
    std::size_t s = 0;
    for (double t0 = traj.times.front(); t0 + w <= traj.times.back() + 1e-12;
         t0 += w) {
      double peak = 0.0;
      bool any = false;
      while (s < m && traj.times[s] < t0 + w) {
        double err = 0.0;
        for (std::size_t i = 0; i < np; ++i)
          err = std::max(err, std::abs(traj.theta_hat[s][i] - theta_true[i]));
        peak = std::max(peak, err);
        any = true;
        ++s;
      }
      if (any && peak > 1e-300) {
        cx.push_back(t0 + 0.5 * w);
        cy.push_back(std::log(peak));
      }
    }
    if (cx.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t j = 0; j < cx.size(); ++j) {
        sx += cx[j];
        sy += cy[j];
        sxx += cx[j] * cx[j];
        sxy += cx[j] * cy[j];
      }
      const double nn = static_cast<double>(cx.size());
      const double denom = nn * sxx - sx * sx;
      if (denom > 0.0) out.fitted_rate = -(nn * sxy - sx * sy) / denom;
    }
  }
  return out;
}

double max_windowed_rate(const std::vector<double>& t,
                         const std::vector<double>& v, double window,
                         double stride) {
  if (t.size() != v.size() || t.size() < 2)
    throw std::invalid_argument("windowed rate needs matching series");
  const double dt = t[1] - t[0];
  const std::size_t iw =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window / dt)));
  const std::size_t is =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(stride / dt)));
  double worst = -kInf;
  for (std::size_t i = 0; i + iw < t.size(); i += is)
    worst = std::max(worst, (v[i + iw] - v[i]) / (t[i + iw] - t[i]));
  return worst;
}

std::vector<double> windowed_means(const std::vector<double>& t,
                                   const std::vector<double>& v,
                                   double window) {
  if (t.size() != v.size() || t.empty() || !(window > 0.0))
    throw std::invalid_argument("windowed means needs matching series");
  std::vector<double> out;
  std::size_t s = 0;
  for (double t0 = t.front(); t0 + window <= t.back() + 1e-12; t0 += window) {
    double acc = 0.0;
    std::size_t cnt = 0;
    while (s < t.size() && t[s] < t0 + window) {
      acc += v[s];
      ++cnt;
      ++s;
    }
    if (cnt > 0) out.push_back(acc / static_cast<double>(cnt));
  }
  return out;
}

}  // namespace qid
