#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qident/system.hpp"

using namespace qid;

TEST_CASE("transition pairs are lexicographic and index back consistently") {
  const auto p4 = transition_pairs(4);
  REQUIRE(p4.size() == 6);
  CHECK(p4[0] == std::pair<int, int>{1, 2});
  CHECK(p4[1] == std::pair<int, int>{1, 3});
  CHECK(p4[2] == std::pair<int, int>{1, 4});
  CHECK(p4[3] == std::pair<int, int>{2, 3});
  CHECK(p4[4] == std::pair<int, int>{2, 4});
  CHECK(p4[5] == std::pair<int, int>{3, 4});
  CHECK(num_pairs(4) == 6);
  for (std::size_t i = 0; i < p4.size(); ++i)
    CHECK(pair_index(p4[i].first, p4[i].second, 4) == static_cast<int>(i));
  CHECK_THROWS_AS(pair_index(2, 2, 4), std::invalid_argument);
  CHECK_THROWS_AS(pair_index(1, 5, 4), std::invalid_argument);
}

TEST_CASE("dipole matrix is symmetric with zero diagonal") {
  const std::vector<double> theta = {5.0, -1.0, 0.0, 6.0, -1.5, 7.0};
  const CMat mu = dipole_from_theta(theta, 4);
  CHECK(hermiticity_defect(mu) == 0.0);
  for (int j = 0; j < 4; ++j) CHECK(mu(j, j) == cplx(0.0, 0.0));
  const auto pairs = transition_pairs(4);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(mu(pairs[i].first - 1, pairs[i].second - 1).real() == theta[i]);
    CHECK(mu(pairs[i].second - 1, pairs[i].first - 1).real() == theta[i]);
  }
  CHECK_THROWS_AS(dipole_from_theta({1.0}, 3), std::invalid_argument);

  // 2-level reduction: theta = 1 gives sigma_x
  CHECK((dipole_from_theta({1.0}, 2) - pauli(Axis::X)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("hamiltonian diagonalizes in the eigenbasis and conjugates off it") {
  QuantumSystem sys;
  sys.dim = 2;
  sys.omega = RVec(2);
  sys.omega << 0.5, -0.5;
  sys.theta = {1.0};
  CHECK((sys.hamiltonian() - 0.5 * pauli(Axis::Z)).cwiseAbs().maxCoeff() ==
        0.0);

  // H = E^dag diag(omega) E must reproduce the matrix the decomposition
  // came from
  CMat hlab(2, 2);
  hlab << 0.3, 0.1, 0.1, -0.2;
  const EigenDecomposition eig = hermitian_eigendecompose(hlab);
  sys.omega = eig.eigenvalues;
  sys.basis_change = eig.eigenvectors;
  CHECK((sys.hamiltonian() - hlab).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(sys.projector(1)(0, 0) == cplx(1.0, 0.0));
  CHECK(sys.projector(2)(1, 1) == cplx(1.0, 0.0));
  CHECK_THROWS_AS(sys.projector(3), std::invalid_argument);
}

TEST_CASE("transition frequencies are absolute eigenvalue gaps in pair order") {
  QuantumSystem sys;
  sys.dim = 3;
  sys.omega = RVec(3);
  sys.omega << 0.0, 1.0, 3.0;
  sys.theta = {1.0, 1.0, 1.0};
  const auto w = sys.transition_frequencies();
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 1.0);  // (1,2)
  CHECK(w[1] == 3.0);  // (1,3)
  CHECK(w[2] == 2.0);  // (2,3)

  // descending eigenvalues still give positive gaps
  sys.dim = 2;
  sys.omega = RVec(2);
  sys.omega << 0.5, -0.5;
  sys.theta = {1.0};
  CHECK(sys.transition_frequencies()[0] == 1.0);
}

TEST_CASE("plant rhs is the commutator flow and conserves trace") {
  QuantumSystem sys;
  sys.dim = 2;
  sys.omega = RVec(2);
  sys.omega << 0.5, -0.5;
  sys.theta = {1.0};
  CMat rho(2, 2);
  rho << 0.7, cplx(0.1, 0.2), cplx(0.1, -0.2), 0.3;
  const double u = 0.8;
  const CMat want = cplx(0.0, -1.0) * commutator(0.5 * pauli(Axis::Z) +
                                                     u * pauli(Axis::X),
                                                 rho);
  CHECK((true_rhs(rho, u, sys) - want).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(true_rhs(rho, u, sys).trace()) < 1e-16);
  CHECK_THROWS_AS(true_rhs(CMat::Zero(3, 3), u, sys), std::invalid_argument);

  const RVec y = populations(rho);
  CHECK(y(0) == 0.7);
  CHECK(y(1) == 0.3);
}

TEST_CASE("field value sums biased tones plus scaled dither") {
  ControlField f;
  f.tones = {{1.0, 2.0, Waveform::Cos}, {0.5, 3.0, Waveform::Sin}};
  f.amplitude_bias = 0.25;
  f.noise_sigma = 0.07;
  const double t = 0.9, w = -1.3;
  const double want = (1.0 + 0.25) * std::cos(2.0 * t) +
                      (0.5 + 0.25) * std::sin(3.0 * t) + 0.07 * w;
  CHECK(field_value(f, t, w) == doctest::Approx(want).epsilon(1e-15));

  ControlField quiet;
  quiet.tones = {{1.0, 1.0, Waveform::Sin}};
  CHECK(field_value(quiet, t, w) == std::sin(t));  // sigma = 0 ignores w
}

TEST_CASE("noise stream is reproducible per seed and holds its last draw") {
  NoiseStream a(123), b(123), c(124);
  std::vector<double> sa, sb;
  for (int i = 0; i < 16; ++i) {
    sa.push_back(a.advance());
    sb.push_back(b.advance());
  }
  CHECK(sa == sb);
  CHECK(a.value() == sa.back());
  bool differs = false;
  for (int i = 0; i < 16; ++i) differs |= (c.advance() != sa[i]);
  CHECK(differs);
}

TEST_CASE("delay line returns the sample pushed delay_steps ago") {
  RVec y0(1), ya(1), yb(1), yc(1);
  y0 << 0.0;
  ya << 1.0;
  yb << 2.0;
  yc << 3.0;
  DelayLine line(2, y0);
  CHECK(line.delayed()(0) == 0.0);  // prefilled history
  line.push(ya);
  CHECK(line.delayed()(0) == 0.0);
  line.push(yb);
  CHECK(line.delayed()(0) == 0.0);
  line.push(yc);
  CHECK(line.delayed()(0) == 1.0);  // ya surfaces after two more pushes

  DelayLine zero(0, y0);
  zero.push(ya);
  CHECK(zero.delayed()(0) == 1.0);  // no delay passes through

  CHECK_THROWS_AS(DelayLine(-1, y0), std::invalid_argument);
}

TEST_CASE("measured output adds bias and per-channel noise to delayed y") {
  RVec y0(2);
  y0 << 0.4, 0.6;
  DelayLine line(0, y0);
  line.push(y0);
  MeasurementModel m;
  m.bias = 0.06;
  m.noise_sigma = 0.07;
  RVec draws(2);
  draws << 1.0, -2.0;
  const RVec out = measured_output(line, m, draws);
  CHECK(out(0) == doctest::Approx(0.4 + 0.06 + 0.07).epsilon(1e-15));
  CHECK(out(1) == doctest::Approx(0.6 + 0.06 - 0.14).epsilon(1e-15));
  RVec bad(1);
  bad << 0.0;
  CHECK_THROWS_AS(measured_output(line, m, bad), std::invalid_argument);
}

TEST_CASE("rehermitize renormalize restores the density matrix invariants") {
  CMat rho(2, 2);
  rho << cplx(0.71, 1e-3), cplx(0.1, 0.2), cplx(0.11, -0.19), cplx(0.32, -1e-3);
  rehermitize_renormalize(rho);
  CHECK(hermiticity_defect(rho) == 0.0);
  CHECK(std::abs(rho.trace().real() - 1.0) < 1e-15);
  CHECK(std::abs(rho.trace().imag()) == 0.0);

  // purity of a pure projector is exactly 1
  CMat pure = CMat::Zero(2, 2);
  pure(0, 0) = 1.0;
  CHECK(purity(pure) == 1.0);
  CHECK(purity(CMat::Identity(2, 2) / 2.0) == doctest::Approx(0.5));
}
