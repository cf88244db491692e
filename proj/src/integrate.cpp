#include "qident/integrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "qident/estimator.hpp"
#include "qident/scenario.hpp"
#include "qident/system.hpp"

namespace qid {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw std::invalid_argument(key + ": " + what);
}

long long steps_in(double value, double h, const std::string& key) {
  const long long k = std::llround(value / h);
  if (k < 0 || std::abs(value - static_cast<double>(k) * h) >
                   1e-9 * std::max(1.0, std::abs(value))) {
    fail(key, "must be an integer multiple of integration.h");
  }
  return k;
}

double max_tone_frequency(const ControlField& field) {
  double f = 0.0;
  for (const auto& tone : field.tones) f = std::max(f, tone.frequency);
  return f;
}

// Effective Rabi generator sum_i (A_i theta_i / 2) sigma_x^i; the default
// averaged-frame step resolves its largest eigenvalue gap.
double rabi_range(const std::vector<double>& amplitudes,
                  const std::vector<double>& theta, int dim) {
  CMat heff = CMat::Zero(dim, dim);
  const auto pairs = transition_pairs(dim);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    heff += 0.5 * amplitudes[i] * theta[i] *
            generalized_pauli(pairs[i].first, pairs[i].second, Axis::X, dim);
  }
  const auto eig = hermitian_eigendecompose(heff);
  return eig.eigenvalues(dim - 1) - eig.eigenvalues(0);
}

// Frequency-free frame Hamiltonian sum_i (A_i th_i/2) gx_i + (delta_i/2) sz_i.
CMat rotating_hamiltonian(const std::vector<double>& theta,
                          const ResolvedRun& rr, int dim) {
  CMat g = CMat::Zero(dim, dim);
  const auto pairs = transition_pairs(dim);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int l = pairs[i].first, k = pairs[i].second;
    const CMat sx = generalized_pauli(l, k, Axis::X, dim);
    const CMat sy = generalized_pauli(l, k, Axis::Y, dim);
    const CMat sz = generalized_pauli(l, k, Axis::Z, dim);
    const double phi = rr.phases[i];
    g += 0.5 * rr.amplitudes[i] * theta[i] *
             (std::cos(phi) * sx - std::sin(phi) * sy) +
         0.5 * rr.detuning[i] * sz;
  }
  return g;
}

}  // namespace

// The innovation term is tangent to the pure-state manifold, so any purity
// error seeded while the output error is still large gets amplified by the
// convergence transient (orders of magnitude over long horizons). Plain
// accumulation rounds at the state's magnitude every step and that rounding
// walk becomes the dominant seed. The state is therefore carried as a
// value/compensation pair (Neumaier summation), and the per-step hermitize
// plus trace-renormalize pass is done with exact residuals (TwoSum, fma) so
// the compensation survives it. Only O(eps*h) perturbations ever enter the
// stage evaluations.
namespace {

void neumaier_add(double& x, double& c, double d) {
  const double t = x + d;
  c += (std::abs(x) >= std::abs(d)) ? (x - t) + d : (d - t) + x;
  x = t;
}

void neumaier_add(cplx& x, cplx& c, const cplx& d) {
  double xr = x.real(), xi = x.imag(), cr = c.real(), ci = c.imag();
  neumaier_add(xr, cr, d.real());
  neumaier_add(xi, ci, d.imag());
  x = cplx(xr, xi);
  c = cplx(cr, ci);
}

// s = a + b exactly equal to fl(a + b) + err.
double two_sum(double a, double b, double& err) {
  const double s = a + b;
  const double ap = s - b;
  const double bp = s - ap;
  err = (a - ap) + (b - bp);
  return s;
}

void compensated_add(SimState& s, SimState& comp, const SimState& d) {
  for (Eigen::Index i = 0; i < s.a.size(); ++i)
    neumaier_add(s.a.data()[i], comp.a.data()[i], d.a.data()[i]);
  for (Eigen::Index i = 0; i < s.b.size(); ++i)
    neumaier_add(s.b.data()[i], comp.b.data()[i], d.b.data()[i]);
  for (std::size_t i = 0; i < s.th.size(); ++i)
    neumaier_add(s.th[i], comp.th[i], d.th[i]);
}

// (rho + rho^dag)/2 with the symmetrization residual folded into comp. The
// anti-hermitian component is a projection loss, not rounding, so it is
// dropped from both halves just as the uncompensated form drops it.
void hermitize_comp(CMat& x, CMat& c) {
  const Eigen::Index n = x.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, i) = cplx(x(i, i).real(), 0.0);
    c(i, i) = cplx(c(i, i).real(), 0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double er = 0.0, ei = 0.0;
      const double mr = two_sum(x(i, j).real(), x(j, i).real(), er) / 2.0;
      const double mi = two_sum(x(i, j).imag(), -x(j, i).imag(), ei) / 2.0;
      const cplx cm = (c(i, j) + std::conj(c(j, i))) / 2.0 +
                      cplx(er, ei) / 2.0;
      x(i, j) = cplx(mr, mi);
      x(j, i) = std::conj(x(i, j));
      c(i, j) = cm;
      c(j, i) = std::conj(cm);
    }
  }
}

// x /= tr(x + c); fma gives the exact division remainder per component.
void renormalize_comp(CMat& x, CMat& c) {
  double tr = 0.0, trc = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    neumaier_add(tr, trc, x(i, i).real());
    neumaier_add(tr, trc, c(i, i).real());
  }
  tr += trc;
  if (tr == 0.0) return;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const cplx xv = x.data()[i], cv = c.data()[i];
    const double qr = xv.real() / tr, qi = xv.imag() / tr;
    x.data()[i] = cplx(qr, qi);
    c.data()[i] = cplx(std::fma(-qr, tr, xv.real()) / tr + cv.real() / tr,
                       std::fma(-qi, tr, xv.imag()) / tr + cv.imag() / tr);
  }
}

SimState rk4_increment(const SimState& s, const RhsFn& rhs, double t,
                       double h) {
  const SimState k1 = rhs(s, t);
  if (!k1.all_finite()) throw BlowupError(t);
  const SimState k2 = rhs(s.axpy(0.5 * h, k1), t + 0.5 * h);
  if (!k2.all_finite()) throw BlowupError(t);
  const SimState k3 = rhs(s.axpy(0.5 * h, k2), t + 0.5 * h);
  if (!k3.all_finite()) throw BlowupError(t);
  const SimState k4 = rhs(s.axpy(h, k3), t + h);
  if (!k4.all_finite()) throw BlowupError(t);
  SimState incr = k1.axpy(2.0, k2).axpy(2.0, k3).axpy(1.0, k4);
  incr.a *= h / 6.0;
  incr.b *= h / 6.0;
  for (double& v : incr.th) v *= h / 6.0;
  return incr;
}

}  // namespace

SimState SimState::axpy(double c, const SimState& d) const {
  SimState out;
  out.a = a + c * d.a;
  out.b = b + c * d.b;
  out.th.resize(th.size());
  for (std::size_t i = 0; i < th.size(); ++i) out.th[i] = th[i] + c * d.th[i];
  return out;
}

bool SimState::all_finite() const {
  if (!a.allFinite() || !b.allFinite()) return false;
  for (double v : th) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

SimState rk4_step(const SimState& s, const RhsFn& rhs, double t, double h) {
  return s.axpy(1.0, rk4_increment(s, rhs, t, h));
}

ResolvedRun resolve_run(const Scenario& sc) {
  const auto& sys = sc.system;
  const int n = sys.dim;
  const int np = num_pairs(n);
  if (sc.version != 1) fail("version", "unsupported schema version");
  if (n < 2) fail("system.dim", "must be at least 2");
  if (sys.omega.size() != n) fail("system.omega", "expected one entry per level");
  if (static_cast<int>(sys.theta.size()) != np)
    fail("system.theta", "expected one entry per transition pair");
  if (sys.basis_change) {
    if (sys.basis_change->rows() != n || sys.basis_change->cols() != n)
      fail("system.basis_change", "expected a dim x dim matrix");
    const CMat& e = *sys.basis_change;
    if ((e * e.adjoint() - CMat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-8)
      fail("system.basis_change", "must be unitary");
  }
  if (sc.psi0.size() != n) fail("initial_state", "expected dim entries");
  if (std::abs(sc.psi0.norm() - 1.0) > 1e-9)
    fail("initial_state", "must be normalized to 1 within 1e-9");

  const auto& est = sc.estimator;
  if (est.psi_hat0.size() != n)
    fail("estimator.initial_state", "expected dim entries");
  if (std::abs(est.psi_hat0.norm() - 1.0) > 1e-9)
    fail("estimator.initial_state", "must be normalized to 1 within 1e-9");
  if (static_cast<int>(est.theta_hat0.size()) != np)
    fail("estimator.theta_hat0", "expected one entry per transition pair");
  if (est.mode == EstimatorMode::SecondAveraged) {
    if (n != 2) fail("estimator.mode", "second-averaged requires a 2-level system");
    if (!est.theory_verification)
      fail("estimator.theory_verification",
           "second-averaged runs must be marked as theory checks");
  }
  if (est.mode == EstimatorMode::Unnormalized && n != 2)
    fail("estimator.mode", "unnormalized observer requires a 2-level system");

  const auto& g = est.gains;
  if (g.Gamma < 0.0) fail("estimator.gains.Gamma", "must be nonnegative");
  if (g.gamma.empty() ||
      (g.gamma.size() != 1 && static_cast<int>(g.gamma.size()) != np))
    fail("estimator.gains.gamma", "expected 1 entry or one per transition pair");
  for (double v : g.gamma)
    if (!(v > 0.0)) fail("estimator.gains.gamma", "entries must be positive");
  for (const char* name : {"amplitudes", "detuning", "phases"}) {
    const auto& vec = std::string(name) == "amplitudes" ? g.amplitudes
                      : std::string(name) == "detuning" ? g.detuning
                                                        : g.phases;
    if (!vec.empty() && static_cast<int>(vec.size()) != np)
      fail("estimator.gains." + std::string(name),
           "expected one entry per transition pair");
  }

  ResolvedRun rr;
  rr.channels = g.channels;
  if (rr.channels.empty()) {
    if (n == 2) {
      rr.channels = {1};
    } else {
      for (int j = 1; j <= n; ++j) rr.channels.push_back(j);
    }
  }
  for (int c : rr.channels)
    if (c < 1 || c > n)
      fail("estimator.gains.channels", "entries must lie in [1, dim]");
  for (std::size_t i = 1; i < rr.channels.size(); ++i)
    if (rr.channels[i] <= rr.channels[i - 1])
      fail("estimator.gains.channels", "entries must be strictly increasing");

  // Per-pair drive data: explicit gains win, otherwise each pair adopts the
  // nearest tone; the frequency mismatch becomes that pair's detuning.
  const auto freqs = sys.transition_frequencies();
  rr.amplitudes = g.amplitudes;
  rr.phases = g.phases;
  rr.detuning = g.detuning;
  if (rr.amplitudes.empty() && !sc.control.tones.empty()) {
    rr.amplitudes.resize(np);
    if (rr.phases.empty()) rr.phases.resize(np);
    if (rr.detuning.empty()) rr.detuning.resize(np);
    for (int i = 0; i < np; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < sc.control.tones.size(); ++j) {
        if (std::abs(sc.control.tones[j].frequency - freqs[i]) <
            std::abs(sc.control.tones[best].frequency - freqs[i]))
          best = j;
      }
      const Tone& tone = sc.control.tones[best];
      rr.amplitudes[i] = tone.amplitude + sc.control.amplitude_bias;
      if (g.phases.empty())
        rr.phases[i] = tone.waveform == Waveform::Sin ? kTwoPi / 4.0 : 0.0;
      if (g.detuning.empty()) rr.detuning[i] = freqs[i] - tone.frequency;
    }
  }
  if (rr.phases.empty()) rr.phases.assign(np, 0.0);
  if (rr.detuning.empty()) rr.detuning.assign(np, 0.0);

  const bool averaged_family = est.mode == EstimatorMode::Averaged ||
                               est.mode == EstimatorMode::SecondAveraged;
  if (averaged_family && rr.amplitudes.empty())
    fail("estimator.gains.amplitudes",
         "averaged modes need amplitudes (explicit or derived from tones)");

  const auto& cfg = sc.integration;
  if (!(cfg.T > 0.0)) fail("integration.T", "must be positive");
  if (cfg.h < 0.0) fail("integration.h", "must be nonnegative");
  if (cfg.record_stride < 0) fail("integration.record_stride", "must be nonnegative");

  const double f_max = max_tone_frequency(sc.control);
  rr.h = cfg.h;
  if (rr.h == 0.0) {
    if (averaged_family) {
      const double range = rabi_range(rr.amplitudes, sys.theta, n);
      if (!(range > 0.0))
        fail("integration.h", "no Rabi scale to derive a default step from");
      rr.h = kTwoPi / (100.0 * range);
    } else {
      if (!(f_max > 0.0))
        fail("integration.h", "no tone frequency to derive a default step from");
      rr.h = kTwoPi / (100.0 * f_max);
    }
  }
  if (f_max > 0.0 && rr.h > kTwoPi / f_max / 50.0 * (1.0 + 1e-12))
    fail("integration.h", "exceeds 1/50 of the fastest tone period");

  rr.n_steps = std::llround(cfg.T / rr.h);
  if (rr.n_steps < 1) fail("integration.T", "shorter than one integrator step");

  if (sc.measurement.delay < 0.0) fail("measurement.delay", "must be nonnegative");
  if (sc.measurement.noise_sigma < 0.0)
    fail("measurement.noise_sigma", "must be nonnegative");
  if (sc.control.noise_sigma < 0.0)
    fail("control.noise_sigma", "must be nonnegative");
  rr.delay_steps = steps_in(sc.measurement.delay, rr.h, "measurement.delay");
  rr.sample_steps =
      sc.measurement.sample_period == 0.0
          ? 1
          : steps_in(sc.measurement.sample_period, rr.h, "measurement.sample_period");
  if (rr.sample_steps < 1)
    fail("measurement.sample_period", "must be at least one integrator step");
  if (sc.control.noise_hold < 0.0) fail("control.noise_hold", "must be nonnegative");
  rr.noise_hold_steps =
      sc.control.noise_hold == 0.0
          ? 1
          : steps_in(sc.control.noise_hold, rr.h, "control.noise_hold");
  if (rr.noise_hold_steps < 1)
    fail("control.noise_hold", "must be at least one integrator step");

  rr.record_stride = cfg.record_stride;
  if (rr.record_stride == 0) {
    rr.record_stride = static_cast<int>((rr.n_steps + 100000) / 100000);
  }
  return rr;
}

Trajectory integrate(const Scenario& sc) {
  const ResolvedRun rr = resolve_run(sc);
  const auto& sys = sc.system;
  const int n = sys.dim;
  const int np = num_pairs(n);
  const EstimatorMode mode = sc.estimator.mode;
  const auto start = std::chrono::steady_clock::now();

  GainConfig eff = sc.estimator.gains;
  if (eff.gamma.size() == 1) eff.gamma.assign(np, eff.gamma[0]);
  eff.amplitudes = rr.amplitudes;
  eff.phases = rr.phases;
  eff.detuning = rr.detuning;
  eff.channels = rr.channels;

  const CMat H = sys.hamiltonian();
  const auto freqs = sys.transition_frequencies();
  const bool density_est = mode != EstimatorMode::Unnormalized;
  const bool uses_field =
      mode == EstimatorMode::Full || mode == EstimatorMode::Unnormalized;

  Trajectory out;
  if (!eff.amplitudes.empty() && eff.gamma.size() == static_cast<std::size_t>(np)) {
    const double omega_min =
        *std::min_element(freqs.begin(), freqs.end());
    out.warnings = gain_regime_warnings(eff, sc.estimator.theta_hat0, omega_min);
  }

  SimState s;
  s.a = sc.psi0 * sc.psi0.adjoint();
  if (density_est) {
    s.b = sc.estimator.psi_hat0 * sc.estimator.psi_hat0.adjoint();
  } else {
    s.b = sc.estimator.psi_hat0;
  }
  s.th = sc.estimator.theta_hat0;

  // Constant generator of the true averaged flow.
  CMat g_true;
  if (mode == EstimatorMode::Averaged)
    g_true = rotating_hamiltonian(sys.theta, rr, n);

  NoiseStream meas_noise(sc.seeds.measurement);
  NoiseStream ctrl_noise(sc.seeds.control);
  RVec ypops = populations(s.a);
  DelayLine ring(static_cast<int>(rr.delay_steps), ypops);
  RVec y_held = ypops;
  RVec draws = RVec::Zero(n);
  double w_held = 0.0;
  double last_drift = 0.0;
  const int c0 = rr.channels.front() - 1;

  const auto estimator_outputs = [&]() -> RVec {
    if (density_est) return populations(s.b);
    const double nn = s.b.squaredNorm();
    RVec yh(n);
    for (int j = 0; j < n; ++j) yh(j) = std::norm(s.b(j, 0)) / nn;
    return yh;
  };

  const auto lyapunov_value = [&](const RVec& yh) -> double {
    switch (mode) {
      case EstimatorMode::Full:
        if (n == 2) {
          const double e1 = yh(c0) - ypops(c0);
          return 0.5 * e1 * e1 +
                 1.0 / (2.0 * eff.gamma[0]) * (s.th[0] - sys.theta[0]) *
                     (s.th[0] - sys.theta[0]);
        }
        [[fallthrough]];
      case EstimatorMode::Averaged: {
        double v = 0.0;
        for (int j = 0; j < n; ++j) v += 0.5 * (yh(j) - ypops(j)) * (yh(j) - ypops(j));
        for (int i = 0; i < np; ++i) {
          const double d = s.th[i] - sys.theta[i];
          v += 2.0 / eff.gamma[i] * d * d;
        }
        return v;
      }
      case EstimatorMode::SecondAveraged: {
        const CMat sy = pauli(Axis::Y), sz = pauli(Axis::Z);
        const CMat diff = s.b - s.a;
        const double ae = (sy * diff).trace().real();
        const double be = (sz * diff).trace().real();
        const double d = s.th[0] - sys.theta[0];
        return 0.5 * ae * ae + 0.5 * be * be + 4.0 / eff.gamma[0] * d * d;
      }
      case EstimatorMode::Unnormalized: {
        const double e1 = y_held(c0) - std::norm(s.b(c0, 0));
        return 0.5 * e1 * e1;
      }
    }
    return 0.0;
  };

  const auto emit = [&](double t) {
    const RVec yh = estimator_outputs();
    out.times.push_back(t);
    out.y.push_back(ypops);
    out.y_hat.push_back(yh);
    out.theta_hat.push_back(s.th);
    out.V.push_back(lyapunov_value(yh));
    if (density_est) {
      out.e.push_back(y_held(c0) - yh(c0));
      out.purity_hat.push_back(purity(s.b));
    } else {
      out.e.push_back(y_held(c0) - std::norm(s.b(c0, 0)));
      const double nn = s.b.squaredNorm();
      const CMat rho_n = s.b * s.b.adjoint() / nn;
      out.purity_hat.push_back(purity(rho_n));
    }
    out.trace_drift.push_back(last_drift);
    out.purity_plant.push_back(purity(s.a));
    out.max_purity_defect_hat =
        std::max(out.max_purity_defect_hat, std::abs(out.purity_hat.back() - 1.0));
    out.max_purity_defect_plant =
        std::max(out.max_purity_defect_plant, std::abs(out.purity_plant.back() - 1.0));
  };

  const auto rhs = [&](const SimState& x, double tau) -> SimState {
    SimState d;
    d.th.assign(x.th.size(), 0.0);
    switch (mode) {
      case EstimatorMode::Full: {
        const double u = field_value(sc.control, tau, w_held);
        d.a = true_rhs(x.a, u, sys);
        EstimatorState es;
        es.mode = mode;
        es.rho_hat = x.b;
        es.theta_hat = x.th;
        EstimatorDeriv ed = full_estimator_rhs(es, y_held, u, H, eff);
        d.b = std::move(ed.drho_hat);
        d.th = std::move(ed.dtheta_hat);
        break;
      }
      case EstimatorMode::Averaged: {
        d.a = cplx(0.0, -1.0) * (g_true * x.a - x.a * g_true);
        EstimatorState es;
        es.mode = mode;
        es.rho_hat = x.b;
        es.theta_hat = x.th;
        EstimatorDeriv ed = averaged_estimator_rhs(es, y_held, eff);
        d.b = std::move(ed.drho_hat);
        d.th = std::move(ed.dtheta_hat);
        break;
      }
      case EstimatorMode::SecondAveraged: {
        d.a = CMat::Zero(n, n);
        EstimatorDeriv ed =
            second_averaged_rhs(x.b, x.th[0], x.a, eff, sys.theta[0]);
        d.b = std::move(ed.drho_hat);
        d.th = std::move(ed.dtheta_hat);
        break;
      }
      case EstimatorMode::Unnormalized: {
        const double u = field_value(sc.control, tau, w_held);
        d.a = true_rhs(x.a, u, sys);
        d.b = unnormalized_observer_rhs(x.b.col(0), y_held(c0), u, x.th[0],
                                        eff.Gamma, H);
        break;
      }
    }
    return d;
  };

  SimState comp;
  comp.a = CMat::Zero(s.a.rows(), s.a.cols());
  comp.b = CMat::Zero(s.b.rows(), s.b.cols());
  comp.th.assign(s.th.size(), 0.0);

  for (long long i = 0;; ++i) {
    const double t = static_cast<double>(i) * rr.h;
    ypops = populations(s.a);
    ring.push(ypops);
    if (i % rr.sample_steps == 0) {
      if (sc.measurement.noise_sigma > 0.0) {
        for (int j = 0; j < n; ++j) draws(j) = meas_noise.advance();
      }
      y_held = measured_output(ring, sc.measurement, draws);
    }
    if (i % rr.noise_hold_steps == 0) {
      w_held = (uses_field && sc.control.noise_sigma > 0.0) ? ctrl_noise.advance() : 0.0;
    }
    if (i % rr.record_stride == 0 || i == rr.n_steps) emit(t);
    if (sc.integration.snapshots && t <= sc.integration.snapshot_until + 1e-12) {
      out.snap_times.push_back(t);
      out.snap_rho.push_back(s.a);
      out.snap_rho_hat.push_back(s.b);
      out.snap_theta_hat.push_back(s.th);
      out.snap_u.push_back(uses_field ? field_value(sc.control, t, w_held) : 0.0);
    }
    if (i == rr.n_steps) break;

    compensated_add(s, comp, rk4_increment(s, rhs, t, rr.h));

    if (density_est) {
      last_drift = std::abs(s.b.trace() - cplx(1.0, 0.0));
      out.max_herm_drift_hat =
          std::max(out.max_herm_drift_hat, hermiticity_defect(s.b));
    } else {
      last_drift = std::abs(s.b.squaredNorm() - 1.0);
    }
    out.max_trace_drift_hat = std::max(out.max_trace_drift_hat, last_drift);
    out.max_trace_drift_plant = std::max(
        out.max_trace_drift_plant, std::abs(s.a.trace() - cplx(1.0, 0.0)));
    if (sc.integration.renormalize) {
      hermitize_comp(s.a, comp.a);
      renormalize_comp(s.a, comp.a);
      if (density_est) {
        hermitize_comp(s.b, comp.b);
        renormalize_comp(s.b, comp.b);
      }
    }
    if (!s.all_finite() || purity(s.a) > 10.0 ||
        (density_est && purity(s.b) > 10.0)) {
      throw BlowupError(t + rr.h);
    }
  }

  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

}  // namespace qid
