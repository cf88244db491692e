#include "qident/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qid {

CMat pauli(Axis axis) {
  CMat m = CMat::Zero(2, 2);
  const cplx i(0.0, 1.0);
  switch (axis) {
    case Axis::X:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case Axis::Y:
      m(0, 1) = -i;
      m(1, 0) = i;
      break;
    case Axis::Z:
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    case Axis::I:
      m.setIdentity();
      break;
  }
  return m;
}

CMat generalized_pauli(int l, int k, Axis axis, int dim) {
  if (dim < 2) throw std::invalid_argument("generalized_pauli: dim < 2");
  if (l < 1 || k <= l || k > dim)
    throw std::invalid_argument("generalized_pauli: need 1 <= l < k <= dim");
  const int a = l - 1, b = k - 1;
  CMat m = CMat::Zero(dim, dim);
  const cplx i(0.0, 1.0);
  switch (axis) {
    case Axis::X:
      m(a, b) = 1.0;
      m(b, a) = 1.0;
      break;
    case Axis::Y:
      m(a, b) = -i;
      m(b, a) = i;
      break;
    case Axis::Z:
      m(a, a) = 1.0;
      m(b, b) = -1.0;
      break;
    case Axis::I:
      m(a, a) = 1.0;
      m(b, b) = 1.0;
      break;
  }
  return m;
}

CMat commutator(const CMat& A, const CMat& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() != A.cols())
    throw std::invalid_argument("commutator: dimension mismatch");
  return A * B - B * A;
}

double hermiticity_defect(const CMat& M) {
  return (M - M.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const CMat& M, double tol) {
  return M.rows() == M.cols() && hermiticity_defect(M) <= tol;
}

CMat EigenDecomposition::reconstruct() const {
  return eigenvectors.adjoint() * eigenvalues.asDiagonal() * eigenvectors;
}

namespace {

// One cyclic sweep of complex Jacobi rotations. A is overwritten in place
// and V accumulates the (column) eigenvector basis, A_in = V A V^dag ...
// more precisely A stays similar to the input under A <- U^dag A U, V <- V U.
void jacobi_sweep(CMat& A, CMat& V) {
  const int n = static_cast<int>(A.rows());
  for (int p = 0; p < n - 1; ++p) {
    for (int q = p + 1; q < n; ++q) {
      const cplx g = A(p, q);
      const double ag = std::abs(g);
      if (ag == 0.0) continue;
      const double app = A(p, p).real();
      const double aqq = A(q, q).real();
      // Absorb the phase of A_pq, then do a real Jacobi rotation.
      const cplx phase = g / ag;  // e^{i phi}
      const double tau = (aqq - app) / (2.0 * ag);
      // Stable root of t^2 - 2 tau t - 1 = 0 (the annihilation condition for
      // this U convention).
      const double t = (tau >= 0.0 ? -1.0 : 1.0) /
                       (std::abs(tau) + std::sqrt(1.0 + tau * tau));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double s = t * c;
      // U restricted to (p,q): [[c, -s],[conj(phase) s, conj(phase) c]]
      const cplx upp = c;
      const cplx upq = -s;
      const cplx uqp = std::conj(phase) * s;
      const cplx uqq = std::conj(phase) * c;
      for (int r = 0; r < n; ++r) {  // A <- A U on columns p,q
        const cplx arp = A(r, p), arq = A(r, q);
        A(r, p) = arp * upp + arq * uqp;
        A(r, q) = arp * upq + arq * uqq;
      }
      for (int r = 0; r < n; ++r) {  // A <- U^dag A on rows p,q
        const cplx apr = A(p, r), aqr = A(q, r);
        A(p, r) = std::conj(upp) * apr + std::conj(uqp) * aqr;
        A(q, r) = std::conj(upq) * apr + std::conj(uqq) * aqr;
      }
      A(p, q) = 0.0;  // rotation zeroes this entry by construction
      A(q, p) = 0.0;
      for (int r = 0; r < n; ++r) {
        const cplx vrp = V(r, p), vrq = V(r, q);
        V(r, p) = vrp * upp + vrq * uqp;
        V(r, q) = vrp * upq + vrq * uqq;
      }
    }
  }
}

double offdiag_norm(const CMat& A) {
  double s = 0.0;
  const int n = static_cast<int>(A.rows());
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      if (p != q) s += std::norm(A(p, q));
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition hermitian_eigendecompose(const CMat& M) {
  if (M.rows() != M.cols())
    throw std::invalid_argument("hermitian_eigendecompose: not square");
  if (!is_hermitian(M, kHermTol))
    throw std::invalid_argument("hermitian_eigendecompose: not Hermitian");
  const int n = static_cast<int>(M.rows());
  CMat A = (M + M.adjoint()) / 2.0;
  CMat V = CMat::Identity(n, n);
  const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    if (offdiag_norm(A) <= 1e-15 * scale * n) break;
    jacobi_sweep(A, V);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  RVec w(n);
  for (int j = 0; j < n; ++j) w[j] = A(j, j).real();
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return w[a] < w[b]; });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    out.eigenvalues[j] = w[order[j]];
    CVec col = V.col(order[j]);
    // Fix the global phase: first non-negligible entry real positive.
    for (int r = 0; r < n; ++r) {
      const double a = std::abs(col[r]);
      if (a > 1e-12) {
        col *= std::conj(col[r]) / a;
        break;
      }
    }
    out.eigenvectors.row(j) = col.adjoint();
  }
  return out;
}

CMat unitary_conjugate(const CMat& rho, const CMat& G, double t) {
  if (rho.rows() != G.rows() || rho.cols() != G.cols())
    throw std::invalid_argument("unitary_conjugate: dimension mismatch");
  const EigenDecomposition ed = hermitian_eigendecompose(G);
  const int n = static_cast<int>(G.rows());
  CVec ph(n);
  for (int j = 0; j < n; ++j)
    ph[j] = std::exp(cplx(0.0, ed.eigenvalues[j] * t));
  const CMat W = ed.eigenvectors.adjoint() * ph.asDiagonal() * ed.eigenvectors;
  CMat out = W * rho * W.adjoint();
  if (std::abs(out.trace() - rho.trace()) > 1e-12)
    throw std::logic_error("unitary_conjugate: trace not preserved");
  return out;
}

CMat expm_antihermitian(const CMat& K) {
  if (K.rows() != K.cols())
    throw std::invalid_argument("expm_antihermitian: not square");
  if ((K + K.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
    throw std::invalid_argument("expm_antihermitian: input not anti-Hermitian");
  const cplx i(0.0, 1.0);
  const CMat Hk = -i * K;  // Hermitian, K = i Hk
  const EigenDecomposition ed = hermitian_eigendecompose(Hk);
  const int n = static_cast<int>(K.rows());
  CVec ph(n);
  for (int j = 0; j < n; ++j)
    ph[j] = std::exp(cplx(0.0, ed.eigenvalues[j]));
  return ed.eigenvectors.adjoint() * ph.asDiagonal() * ed.eigenvectors;
}

}  // namespace qid
