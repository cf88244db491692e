#pragma once

// Small dense complex-matrix algebra for Hermitian/density matrices:
// Pauli operators, commutators, a hand-rolled complex Jacobi eigensolver,
// and matrix exponentials of anti-Hermitian generators. Everything here is
// sized for N <= 16; no sparsity, no general non-Hermitian eigenproblems.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace qid {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using cplx = std::complex<double>;

inline constexpr double kHermTol = 1e-12;

enum class Axis { X, Y, Z, I };

// 2x2 Pauli matrix. Axis::I returns the identity.
CMat pauli(Axis axis);

// Generalized Pauli matrix on the (l,k) transition, 1-based, l < k <= dim:
//   x -> |l><k| + |k><l|, y -> -i|l><k| + i|k><l|,
//   z -> P_l - P_k,       I -> P_l + P_k.
CMat generalized_pauli(int l, int k, Axis axis, int dim);

// AB - BA. Throws std::invalid_argument on dimension mismatch.
CMat commutator(const CMat& A, const CMat& B);

// max_ij |M - M^dag|
double hermiticity_defect(const CMat& M);
bool is_hermitian(const CMat& M, double tol = kHermTol);

// Eigendecomposition of a Hermitian matrix, M = E^dag * diag(w) * E.
// Rows of E are the (conjugated) eigenvectors; eigenvalues ascend; each
// row's phase is fixed by making its first non-negligible entry real
// positive, so E is deterministic across runs.
struct EigenDecomposition {
  RVec eigenvalues;
  CMat eigenvectors;  // rows
  CMat reconstruct() const;
};

EigenDecomposition hermitian_eigendecompose(const CMat& M);

// e^{iGt} rho e^{-iGt} via eigendecomposition of Hermitian G.
// Throws std::logic_error if the trace moves by more than 1e-12.
CMat unitary_conjugate(const CMat& rho, const CMat& G, double t);

// exp(K) for anti-Hermitian K (K^dag = -K to 1e-12); result is unitary.
CMat expm_antihermitian(const CMat& K);

}  // namespace qid
