#pragma once

// Dense brute-force references built from Kronecker products and explicit
// index loops, sharing no code paths with the library under test.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat pauli(char c) {
  Mat m(2, 2);
  switch (c) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Mat identity(int n_qubits) { return Mat::Identity(1 << n_qubits, 1 << n_qubits); }

/// Pauli word on sites [offset, offset + len) of an n-qubit register.
inline Mat pauli_string(const std::string& word, int offset, int n) {
  Mat out = Mat::Identity(1, 1);
  for (int s = 0; s < n; ++s) {
    const int j = s - offset;
    out = kron(out, (j >= 0 && j < static_cast<int>(word.size())) ? pauli(word[static_cast<std::size_t>(j)]) : pauli('I'));
  }
  return out;
}

/// Single-qubit operator on site `site` of n.
inline Mat site_op(const Mat& op, int site, int n) {
  return kron(kron(identity(site), op), identity(n - site - 1));
}

inline Vec basis(int n, const std::string& bits) {
  Vec v = Vec::Zero(1 << n);
  int idx = 0;
  for (char b : bits) idx = 2 * idx + (b - '0');
  v(idx) = 1.0;
  return v;
}

inline Vec w_state(int n) {
  Vec v = Vec::Zero(1 << n);
  for (int i = 0; i < n; ++i) v(1 << (n - 1 - i)) = 1.0 / std::sqrt(static_cast<double>(n));
  return v;
}

inline Vec ghz_state(int n, double phase) {
  Vec v = Vec::Zero(1 << n);
  v(0) = 1.0 / std::sqrt(2.0);
  v((1 << n) - 1) = std::polar(1.0 / std::sqrt(2.0), phase);
  return v;
}

/// |+>^N followed by CZ on every neighbouring pair.
inline Vec cluster_state(int n) {
  const int dim = 1 << n;
  Vec v = Vec::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (int i = 0; i + 1 < n; ++i) {
    Mat cz = Mat::Identity(4, 4);
    cz(3, 3) = -1.0;
    v = kron(kron(identity(i), cz), identity(n - i - 2)) * v;
  }
  return v;
}

/// Reduced density of sites [start, start + w), by explicit index sums.
inline Mat reduce(const Vec& psi, int n, int start, int w) {
  const int dw = 1 << w, right = n - start - w;
  const int dl = 1 << start, dr = 1 << right;
  Mat rho = Mat::Zero(dw, dw);
  for (int l = 0; l < dl; ++l)
    for (int r = 0; r < dr; ++r)
      for (int a = 0; a < dw; ++a)
        for (int b = 0; b < dw; ++b)
          rho(a, b) += psi((l << (w + right)) | (a << right) | r) * std::conj(psi((l << (w + right)) | (b << right) | r));
  return rho;
}

inline Mat reduce_mixed(const Mat& rho_full, int n, int start, int w) {
  const int dw = 1 << w, right = n - start - w;
  const int dl = 1 << start, dr = 1 << right;
  Mat rho = Mat::Zero(dw, dw);
  for (int l = 0; l < dl; ++l)
    for (int r = 0; r < dr; ++r)
      for (int a = 0; a < dw; ++a)
        for (int b = 0; b < dw; ++b)
          rho(a, b) += rho_full((l << (w + right)) | (a << right) | r, (l << (w + right)) | (b << right) | r);
  return rho;
}

inline double trace_norm(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  return es.eigenvalues().cwiseAbs().sum();
}

/// Ising H = -sum X X - sum Z from Kronecker products.
inline Mat ising(int n) {
  Mat h = Mat::Zero(1 << n, 1 << n);
  for (int i = 0; i + 1 < n; ++i) h -= pauli_string("XX", i, n);
  for (int i = 0; i < n; ++i) h -= pauli_string("Z", i, n);
  return h;
}

/// Smallest eigenvalue by shifted power iteration, an eigensolver independent
/// of the Hermitian QR route.
inline double power_min_eigenvalue(const Mat& h, int iters = 20000) {
  const double shift = h.cwiseAbs().rowwise().sum().maxCoeff();
  const Mat m = shift * Mat::Identity(h.rows(), h.cols()) - h;
  Vec v = Vec::Ones(h.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 0.01 * static_cast<double>(i % 7);
  v.normalize();
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vec w = m * v;
    lambda = v.dot(w).real();
    v = w.normalized();
  }
  return shift - lambda;
}

}  // namespace oracle
