#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <complex>
#include <random>

#include "qident/linalg.hpp"

using namespace qid;

namespace {

CMat random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return (m + m.adjoint()).eval() / 2.0;
}

double maxabs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("pauli matrices satisfy the su(2) algebra") {
  const CMat sx = pauli(Axis::X), sy = pauli(Axis::Y), sz = pauli(Axis::Z);
  const CMat id = pauli(Axis::I);
  CHECK(maxabs(sx * sx - id) == 0.0);
  CHECK(maxabs(sy * sy - id) == 0.0);
  CHECK(maxabs(sz * sz - id) == 0.0);
  CHECK(maxabs(sx * sy - cplx(0.0, 1.0) * sz) == 0.0);
  CHECK(maxabs(commutator(sx, sy) - cplx(0.0, 2.0) * sz) == 0.0);
  CHECK(is_hermitian(sx));
  CHECK(is_hermitian(sy));
  CHECK(is_hermitian(sz));
}

TEST_CASE("generalized pauli places the 2x2 block on the right transition") {
  const int dim = 4;
  const CMat x13 = generalized_pauli(1, 3, Axis::X, dim);
  CHECK(x13(0, 2) == cplx(1.0, 0.0));
  CHECK(x13(2, 0) == cplx(1.0, 0.0));
  CHECK(maxabs(x13) == 1.0);
  CHECK(x13.cwiseAbs().sum() == 2.0);  // nothing outside the block

  const CMat y24 = generalized_pauli(2, 4, Axis::Y, dim);
  CHECK(y24(1, 3) == cplx(0.0, -1.0));
  CHECK(y24(3, 1) == cplx(0.0, 1.0));

  const CMat z12 = generalized_pauli(1, 2, Axis::Z, dim);
  CHECK(z12(0, 0) == cplx(1.0, 0.0));
  CHECK(z12(1, 1) == cplx(-1.0, 0.0));
  CHECK(z12(2, 2) == cplx(0.0, 0.0));

  const CMat i23 = generalized_pauli(2, 3, Axis::I, dim);
  CHECK(i23(1, 1) == cplx(1.0, 0.0));
  CHECK(i23(2, 2) == cplx(1.0, 0.0));
  CHECK(i23.trace() == cplx(2.0, 0.0));

  // reduces to the plain 2x2 set
  CHECK(maxabs(generalized_pauli(1, 2, Axis::X, 2) - pauli(Axis::X)) == 0.0);

  CHECK_THROWS_AS(generalized_pauli(2, 2, Axis::X, 4), std::invalid_argument);
  CHECK_THROWS_AS(generalized_pauli(0, 2, Axis::X, 4), std::invalid_argument);
  CHECK_THROWS_AS(generalized_pauli(1, 5, Axis::X, 4), std::invalid_argument);
  CHECK_THROWS_AS(generalized_pauli(1, 2, Axis::X, 1), std::invalid_argument);
}

TEST_CASE("commutator rejects mismatched dimensions") {
  CHECK_THROWS_AS(commutator(CMat::Identity(2, 2), CMat::Identity(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("hermiticity defect measures the max deviation from M^dag") {
  CMat m = CMat::Zero(2, 2);
  m(0, 1) = cplx(1.0, 2.0);
  m(1, 0) = cplx(1.0, -2.0);
  CHECK(hermiticity_defect(m) == 0.0);
  m(1, 0) = cplx(1.0, -2.0 + 3e-3);
  CHECK(hermiticity_defect(m) == doctest::Approx(3e-3).epsilon(1e-12));
  CHECK_FALSE(is_hermitian(m));
  CHECK(is_hermitian(m, 1e-2));
}

TEST_CASE("eigendecomposition reconstructs and matches a reference solver") {
  std::mt19937_64 rng(42);
  for (int n : {2, 3, 4, 8, 16}) {
    for (int rep = 0; rep < 3; ++rep) {
      const CMat m = random_hermitian(n, rng);
      const EigenDecomposition d = hermitian_eigendecompose(m);

      CHECK(maxabs(d.reconstruct() - m) < 1e-10);
      CHECK(maxabs(d.eigenvectors * d.eigenvectors.adjoint() -
                   CMat::Identity(n, n)) < 1e-12);
      for (int i = 0; i + 1 < n; ++i)
        CHECK(d.eigenvalues(i) <= d.eigenvalues(i + 1));

      Eigen::SelfAdjointEigenSolver<CMat> ref(m);
      for (int i = 0; i < n; ++i)
        CHECK(d.eigenvalues(i) ==
              doctest::Approx(ref.eigenvalues()(i)).epsilon(1e-10));
    }
  }
}

TEST_CASE("eigendecomposition fixes each eigenvector's phase") {
  std::mt19937_64 rng(7);
  const CMat m = random_hermitian(5, rng);
  const EigenDecomposition d1 = hermitian_eigendecompose(m);
  const EigenDecomposition d2 = hermitian_eigendecompose(m);
  // bitwise deterministic
  CHECK(maxabs(d1.eigenvectors - d2.eigenvectors) == 0.0);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      const cplx v = d1.eigenvectors(r, c);
      if (std::abs(v) > 1e-8) {
        CHECK(v.real() > 0.0);
        CHECK(std::abs(v.imag()) < 1e-12 * std::abs(v.real()));
        break;
      }
    }
  }
}

TEST_CASE("eigendecomposition rejects non-hermitian input") {
  CMat m = CMat::Zero(2, 2);
  m(0, 1) = cplx(1.0, 0.0);
  CHECK_THROWS_AS(hermitian_eigendecompose(m), std::invalid_argument);
  CHECK_THROWS_AS(hermitian_eigendecompose(CMat::Zero(2, 3)),
                  std::invalid_argument);
}

TEST_CASE("unitary conjugation rotates the bloch vector at rate 2t") {
  const CMat sx = pauli(Axis::X), sy = pauli(Axis::Y), sz = pauli(Axis::Z);
  const CMat id = pauli(Axis::I);
  const double t = 0.37;
  const CMat rho = (id + sz) / 2.0;
  const CMat got = unitary_conjugate(rho, sx, t);
  const CMat want =
      (id + std::cos(2.0 * t) * sz + std::sin(2.0 * t) * sy) / 2.0;
  CHECK(maxabs(got - want) < 1e-12);
  CHECK(std::abs(got.trace().real() - 1.0) < 1e-14);
}

TEST_CASE("expm of an anti-hermitian generator is unitary") {
  const CMat sx = pauli(Axis::X);
  const double t = 1.1;
  const CMat u = expm_antihermitian(cplx(0.0, t) * sx);
  const CMat want = std::cos(t) * pauli(Axis::I) + cplx(0.0, std::sin(t)) * sx;
  CHECK(maxabs(u - want) < 1e-12);
  CHECK(maxabs(u * u.adjoint() - pauli(Axis::I)) < 1e-13);

  std::mt19937_64 rng(3);
  const CMat h = random_hermitian(6, rng);
  const CMat u6 = expm_antihermitian(cplx(0.0, -1.0) * h);
  CHECK(maxabs(u6 * u6.adjoint() - CMat::Identity(6, 6)) < 1e-12);

  CHECK_THROWS_AS(expm_antihermitian(sx), std::invalid_argument);
}
