#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qident/estimator.hpp"

using namespace qid;

namespace {

CMat random_pure(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVec psi(n);
  for (int i = 0; i < n; ++i) psi(i) = cplx(g(rng), g(rng));
  psi /= psi.norm();
  return psi * psi.adjoint();
}

GainConfig gains2(double Gamma = 1.0, double gamma = 0.1) {
  GainConfig g;
  g.Gamma = Gamma;
  g.gamma = {gamma};
  g.channels = {1};
  return g;
}

}  // namespace

TEST_CASE("full estimator matches the hand-written 2-level form") {
  std::mt19937_64 rng(11);
  const CMat H = 0.5 * pauli(Axis::Z);
  const CMat sx = pauli(Axis::X);
  const CMat P = (pauli(Axis::I) + pauli(Axis::Z)) / 2.0;  // |1><1|
  const GainConfig g = gains2();

  for (int rep = 0; rep < 20; ++rep) {
    EstimatorState est;
    est.rho_hat = random_pure(2, rng);
    est.theta_hat = {1.5};
    RVec y(2);
    y << 0.37, 0.63;
    const double u = 0.42;

    const EstimatorDeriv d = full_estimator_rhs(est, y, u, H, g);

    const CMat& r = est.rho_hat;
    const double e = y(0) - r(0, 0).real();
    const CMat G = H + u * est.theta_hat[0] * sx;
    const CMat want = cplx(0.0, -1.0) * (G * r - r * G) +
                      g.Gamma * e * (P * r + r * P - 2.0 * r(0, 0).real() * r);
    CHECK((d.drho_hat - want).cwiseAbs().maxCoeff() < 1e-15);

    const double want_dth =
        g.gamma[0] * u * (r(1, 0) - r(0, 1)).imag() * e;
    CHECK(d.dtheta_hat[0] == doctest::Approx(want_dth).epsilon(1e-13));
  }
}

TEST_CASE("zero innovation freezes the parameter and removes the injection") {
  std::mt19937_64 rng(12);
  const CMat H = 0.5 * pauli(Axis::Z);
  EstimatorState est;
  est.rho_hat = random_pure(2, rng);
  est.theta_hat = {0.9};
  RVec y(2);
  y << est.rho_hat(0, 0).real(), est.rho_hat(1, 1).real();

  const EstimatorDeriv d = full_estimator_rhs(est, y, 0.8, H, gains2());
  const CMat G = H + 0.8 * 0.9 * pauli(Axis::X);
  const CMat comm_only = cplx(0.0, -1.0) * (G * est.rho_hat - est.rho_hat * G);
  CHECK((d.drho_hat - comm_only).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.dtheta_hat[0] == 0.0);
}

TEST_CASE("full estimator flow is tangent to trace and purity on pure states") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uy(0.0, 1.0);
  for (int n : {2, 3, 4}) {
    GainConfig g;
    g.Gamma = 1.3;
    g.gamma.assign(num_pairs(n), 0.2);
    for (int ch = 1; ch <= n; ++ch) g.channels.push_back(ch);
    const CMat H = random_pure(n, rng);  // any hermitian works here

    for (int rep = 0; rep < 10; ++rep) {
      EstimatorState est;
      est.rho_hat = random_pure(n, rng);
      est.theta_hat.assign(num_pairs(n), 1.1);
      RVec y(n);
      for (int j = 0; j < n; ++j) y(j) = uy(rng);  // arbitrary held output

      const EstimatorDeriv d = full_estimator_rhs(est, y, 0.7, H, g);
      CHECK(std::abs(d.drho_hat.trace()) < 1e-14);
      // d/dt tr(rho^2) = 2 Re tr(rho drho) vanishes on the pure manifold
      // for any measurement value
      CHECK(std::abs((est.rho_hat * d.drho_hat).trace().real()) < 1e-14);
    }
  }
}

TEST_CASE("averaged estimator matches the hand-written phase-resolved form") {
  std::mt19937_64 rng(14);
  const double phi = 1.5707963267948966;  // sine drive
  GainConfig g = gains2();
  g.amplitudes = {1.0};
  g.phases = {phi};
  g.detuning = {0.01};
  g.channels = {1};

  EstimatorState est;
  est.rho_hat = random_pure(2, rng);
  est.theta_hat = {1.2};
  RVec y(2);
  y << 0.55, 0.45;

  const EstimatorDeriv d = averaged_estimator_rhs(est, y, g);

  const CMat sx = pauli(Axis::X), sy = pauli(Axis::Y), sz = pauli(Axis::Z);
  const CMat gx = std::cos(phi) * sx - std::sin(phi) * sy;
  const CMat gy = std::sin(phi) * sx + std::cos(phi) * sy;
  const CMat G = (g.amplitudes[0] * est.theta_hat[0] / 2.0) * gx +
                 (g.detuning[0] / 2.0) * sz;
  const CMat& r = est.rho_hat;
  const double e1 = y(0) - r(0, 0).real();
  const CMat P = (pauli(Axis::I) + sz) / 2.0;
  const CMat want = cplx(0.0, -1.0) * (G * r - r * G) +
                    g.Gamma * e1 * (P * r + r * P - 2.0 * r(0, 0).real() * r);
  CHECK((d.drho_hat - want).cwiseAbs().maxCoeff() < 1e-15);

  const double want_dth = g.gamma[0] * (g.amplitudes[0] / 2.0) *
                          (gy * r).trace().real() * e1;
  CHECK(d.dtheta_hat[0] == doctest::Approx(want_dth).epsilon(1e-13));

  // detuning enters only through the -i(delta/2)[sz, xi] drift
  GainConfig g0 = g;
  g0.detuning = {0.0};
  const EstimatorDeriv d0 = averaged_estimator_rhs(est, y, g0);
  const CMat extra = cplx(0.0, -1.0) * (g.detuning[0] / 2.0) * (sz * r - r * sz);
  CHECK((d.drho_hat - d0.drho_hat - extra).cwiseAbs().maxCoeff() < 2e-15);
  CHECK(d.dtheta_hat[0] == d0.dtheta_hat[0]);
}

TEST_CASE("averaged estimator adapts only through measured channels") {
  std::mt19937_64 rng(15);
  GainConfig g;
  g.Gamma = 0.5;
  g.gamma.assign(3, 0.1);
  g.amplitudes.assign(3, 0.2);
  g.channels = {2};  // only level 2 observed

  EstimatorState est;
  est.rho_hat = random_pure(3, rng);
  est.theta_hat = {1.0, 1.0, 1.0};
  RVec y(3);
  y << 0.2, 0.5, 0.3;

  const EstimatorDeriv d = averaged_estimator_rhs(est, y, g);
  const double e2 = y(1) - est.rho_hat(1, 1).real();
  const auto pairs = transition_pairs(3);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [l, k] = pairs[i];
    const CMat gy = generalized_pauli(l, k, Axis::Y, 3);  // no phases set
    double innov = 0.0;
    if (l == 2) innov += e2;
    if (k == 2) innov -= e2;
    const double want =
        g.gamma[i] * (g.amplitudes[i] / 2.0) *
        (gy * est.rho_hat).trace().real() * innov;
    CHECK(d.dtheta_hat[i] == doctest::Approx(want).epsilon(1e-13));
  }
  // pair (1,3) touches no measured level: frozen
  CHECK(d.dtheta_hat[1] == 0.0);
}

TEST_CASE("second averaged system: equilibria and dissipation identity") {
  const CMat sx = pauli(Axis::X), sy = pauli(Axis::Y), sz = pauli(Axis::Z);
  GainConfig g;
  g.Gamma = 1.0;
  g.gamma = {0.1};
  g.amplitudes = {1.0};
  const double theta = 1.0;

  CMat zeta = CMat::Zero(2, 2);
  zeta(0, 0) = 1.0;

  SUBCASE("true state is an equilibrium") {
    const EstimatorDeriv d = second_averaged_rhs(zeta, theta, zeta, g, theta);
    CHECK(d.drho_hat.cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.dtheta_hat[0] == 0.0);
  }

  SUBCASE("the sigma_x mirrored state is a spurious equilibrium") {
    const CMat mirror = sx * zeta * sx;
    const EstimatorDeriv d = second_averaged_rhs(mirror, theta, zeta, g, theta);
    CHECK(d.drho_hat.cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(d.dtheta_hat[0]) < 1e-15);
  }

  SUBCASE("analytic dV/dt matches the flow and is nonpositive") {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> uth(-1.0, 3.0);
    double worst_rel = 0.0, worst_rate = -1.0;
    for (int rep = 0; rep < 50; ++rep) {
      const CMat z = random_pure(2, rng);
      const CMat zh = random_pure(2, rng);
      const double th = uth(rng);

      const auto a = [&](const CMat& m) {
        return (sy * (z - m)).trace().real();
      };
      const auto b = [&](const CMat& m) {
        return (sz * (z - m)).trace().real();
      };
      const auto V = [&](const CMat& m, double t) {
        return 0.5 * a(m) * a(m) + 0.5 * b(m) * b(m) +
               4.0 / g.gamma[0] * (t - theta) * (t - theta);
      };
      const double p = (sy * zh).trace().real();
      const double q = (sz * zh).trace().real();
      const double aa = a(zh), bb = b(zh);
      const double analytic = g.Gamma / 4.0 *
                              ((aa * p + bb * q) * (aa * p + bb * q) -
                               (aa * aa + bb * bb));
      worst_rate = std::max(worst_rate, analytic);

      const EstimatorDeriv d = second_averaged_rhs(zh, th, z, g, theta);
      const double eps = 1e-6;
      const double num = (V(zh + eps * d.drho_hat, th + eps * d.dtheta_hat[0]) -
                          V(zh - eps * d.drho_hat, th - eps * d.dtheta_hat[0])) /
                         (2.0 * eps);
      worst_rel = std::max(worst_rel, std::abs(num - analytic) /
                                          std::max(1e-9, std::abs(analytic)));
    }
    CHECK(worst_rel < 1e-5);
    CHECK(worst_rate <= 0.0);
  }
}

TEST_CASE("unnormalized observer injects only on the measured level") {
  CVec psi(2);
  psi << cplx(0.6, 0.1), cplx(0.7, -0.2);
  const CMat H = 0.5 * pauli(Axis::Z);
  const double y = 0.8, u = 0.3, theta = 1.1, Gamma = 2.0;
  const CVec d = unnormalized_observer_rhs(psi, y, u, theta, Gamma, H);

  const CMat G = H + theta * u * pauli(Axis::X);
  CVec want = cplx(0.0, -1.0) * (G * psi);
  want(0) += Gamma * (y - std::norm(psi(0))) * psi(0);
  CHECK((d - want).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(unnormalized_observer_rhs(CVec::Zero(3), y, u, theta, Gamma,
                                            CMat::Zero(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("interaction frame preserves populations and round trips") {
  std::mt19937_64 rng(17);
  const CMat rho = random_pure(3, rng);
  RVec omega(3);
  omega << 0.0, 1.0, 3.0;
  const double t = 2.7;

  const CMat xi = to_interaction_frame(rho, omega, t);
  for (int j = 0; j < 3; ++j)
    CHECK(xi(j, j) == rho(j, j));  // phases cancel on the diagonal
  const CMat back = from_interaction_frame(xi, omega, t);
  CHECK((back - rho).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gain regime warnings flag each violated smallness condition") {
  GainConfig ok;
  ok.Gamma = 0.005;
  ok.gamma = {0.01};
  ok.amplitudes = {0.1};
  CHECK(gain_regime_warnings(ok, {1.0}, 10.0).empty());

  GainConfig big_Gamma = ok;
  big_Gamma.Gamma = 1.0;
  auto w = gain_regime_warnings(big_Gamma, {1.0}, 10.0);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("Gamma=") == 0);

  GainConfig fast_rabi = ok;
  fast_rabi.amplitudes = {1.0};
  w = gain_regime_warnings(fast_rabi, {1.0}, 1.0);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("A*theta=") == 0);

  GainConfig big_gamma = ok;
  big_gamma.gamma = {0.5};
  w = gain_regime_warnings(big_gamma, {1.0}, 10.0);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("gamma=") == 0);
}

TEST_CASE("estimator rhs rejects inconsistent shapes") {
  EstimatorState est;
  est.rho_hat = CMat::Identity(2, 2) / 2.0;
  est.theta_hat = {1.0};
  const CMat H = 0.5 * pauli(Axis::Z);

  RVec y3(3);
  y3 << 0.1, 0.2, 0.7;
  CHECK_THROWS_AS(full_estimator_rhs(est, y3, 0.0, H, gains2()),
                  std::invalid_argument);

  RVec y(2);
  y << 0.5, 0.5;
  GainConfig bad_ch = gains2();
  bad_ch.channels = {3};
  CHECK_THROWS_AS(full_estimator_rhs(est, y, 0.0, H, bad_ch),
                  std::invalid_argument);

  RVec ynan(2);
  ynan << std::nan(""), 0.5;
  CHECK_THROWS_AS(full_estimator_rhs(est, ynan, 0.0, H, gains2()),
                  std::invalid_argument);
}
