#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "mpstomo/core.hpp"
#include "mpstomo/mps.hpp"
#include "mpstomo/pauli.hpp"
#include "mpstomo/rng.hpp"

namespace mpstomo {

/// Dense state vector (oracle representation), big-endian basis.
struct DenseState {
  int n_sites = 0;
  int d = 2;
  Vector amplitudes;

  double norm() const { return amplitudes.norm(); }
};

inline DenseState to_dense(const MPS& mps) {
  const int d = mps.phys_dim(0);
  for (int di : mps.phys_dims())
    if (di != d) throw dimension_error("to_dense: non-uniform physical dimension");
  Vector amps = mps_amplitudes(mps);
  amps /= amps.norm();
  return DenseState{static_cast<int>(mps.size()), d, std::move(amps)};
}

inline MPS from_dense(const DenseState& s) { return canonicalize_left(mps_from_amplitudes(s.amplitudes, s.n_sites, s.d)); }

/// (|10...0> + |010...0> + ... + |0...01>) / sqrt(N), bond dimension 2.
/// The bond index counts whether the excitation has already been placed.
inline MPS w_state(int n) {
  if (n < 2) throw dimension_error("w_state: N must be >= 2");
  const double a = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<SiteTensor> sites;
  for (int i = 0; i < n; ++i) {
    const Eigen::Index dl = i == 0 ? 1 : 2, dr = i == n - 1 ? 1 : 2;
    SiteTensor t(2, Matrix::Zero(dl, dr));
    if (i == 0) {
      t[0](0, 0) = 1.0;
      t[1](0, 1) = 1.0;
    } else if (i == n - 1) {
      t[0](1, 0) = 1.0;
      t[1](0, 0) = 1.0;
    } else {
      t[0](0, 0) = 1.0;
      t[0](1, 1) = 1.0;
      t[1](0, 1) = 1.0;
    }
    if (i == 0) t[0] *= a, t[1] *= a;
    sites.push_back(std::move(t));
  }
  return canonicalize_left(MPS(std::move(sites)));
}

/// (|0...0> + e^{i phase} |1...1>) / sqrt(2).
inline MPS ghz_state(int n, double phase = 0.0) {
  if (n < 2) throw dimension_error("ghz_state: N must be >= 2");
  std::vector<SiteTensor> sites;
  for (int i = 0; i < n; ++i) {
    const Eigen::Index dl = i == 0 ? 1 : 2, dr = i == n - 1 ? 1 : 2;
    SiteTensor t(2, Matrix::Zero(dl, dr));
    if (i == 0) {
      t[0](0, 0) = 1.0 / std::numbers::sqrt2;
      t[1](0, 1) = 1.0 / std::numbers::sqrt2;
    } else if (i == n - 1) {
      t[0](0, 0) = 1.0;
      t[1](1, 0) = std::polar(1.0, phase);
    } else {
      t[0](0, 0) = 1.0;
      t[1](1, 1) = 1.0;
    }
    sites.push_back(std::move(t));
  }
  return canonicalize_left(MPS(std::move(sites)));
}

/// Linear cluster state: CZ on every neighbouring pair applied to |+>^N.
/// Amplitude of |s> is 2^{-N/2} prod_i (-1)^{s_i s_{i+1}}; the bond carries s_i.
inline MPS cluster_state(int n) {
  if (n < 3) throw dimension_error("cluster_state: N must be >= 3");
  const double h = 1.0 / std::numbers::sqrt2;
  std::vector<SiteTensor> sites;
  for (int i = 0; i < n; ++i) {
    const Eigen::Index dl = i == 0 ? 1 : 2, dr = i == n - 1 ? 1 : 2;
    SiteTensor t(2, Matrix::Zero(dl, dr));
    for (int s = 0; s < 2; ++s)
      for (Eigen::Index a = 0; a < dl; ++a) {
        const double sign = (i > 0 && a == 1 && s == 1) ? -1.0 : 1.0;
        const Eigen::Index b = i == n - 1 ? 0 : s;
        t[static_cast<std::size_t>(s)](a, b) = sign * h;
      }
    sites.push_back(std::move(t));
  }
  return canonicalize_left(MPS(std::move(sites)));
}

/// Random MPS with complex Gaussian entries and bond dimension min(D, d^i, d^{N-i}).
inline MPS random_mps(int n, int bond, std::uint64_t seed, int d = 2) {
  if (n < 1 || bond < 1) throw dimension_error("random_mps: need N >= 1 and D >= 1");
  Rng rng(seed);
  std::vector<int> dims(static_cast<std::size_t>(n + 1), 1);
  for (int i = 1; i < n; ++i) {
    const double left = std::pow(static_cast<double>(d), i), right = std::pow(static_cast<double>(d), n - i);
    dims[static_cast<std::size_t>(i)] = static_cast<int>(std::min<double>({static_cast<double>(bond), left, right}));
  }
  std::vector<SiteTensor> sites;
  for (int i = 0; i < n; ++i) {
    SiteTensor t;
    for (int s = 0; s < d; ++s) {
      Matrix m(dims[static_cast<std::size_t>(i)], dims[static_cast<std::size_t>(i + 1)]);
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = cplx(rng.normal(), rng.normal());
      t.push_back(std::move(m));
    }
    sites.push_back(std::move(t));
  }
  return canonicalize_left(MPS(std::move(sites)));
}

/// Critical transverse-field Ising chain, open boundaries:
///   H = - sum_{i<N} X_i X_{i+1} - sum_i Z_i
/// as a window-2 sum. Z_i sits in window i (as "ZI"); Z_N in the last window ("IZ").
inline WindowOperatorSum ising_hamiltonian(int n) {
  if (n < 2) throw dimension_error("ising_hamiltonian: N must be >= 2");
  WindowOperatorSum h(n, 2);
  for (int i = 0; i + 1 < n; ++i) {
    h.add(i, "XX", -1.0);
    h.add(i, "ZI", -1.0);
  }
  h.add(n - 2, "IZ", -1.0);
  return h;
}

/// Hermitian 2x2 factor: complex entries with real and imaginary parts drawn
/// uniform on [-1, 1] (row-major, real part first), then (A + A^dagger) / 2.
inline Matrix random_hermitian_factor(Rng& rng) {
  Matrix a(2, 2);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double re = rng.uniform(-1.0, 1.0);
      const double im = rng.uniform(-1.0, 1.0);
      a(r, c) = cplx(re, im);
    }
  return 0.5 * (a + a.adjoint());
}

/// H = sum_i r^{(i)}_i r^{(i)}_{i+1}, with both factors of every bond drawn
/// independently (left factor first) from Rng(seed), bond by bond.
inline WindowOperatorSum random_nn_hamiltonian(int n, std::uint64_t seed) {
  if (n < 2) throw dimension_error("random_nn_hamiltonian: N must be >= 2");
  Rng rng(seed);
  WindowOperatorSum h(n, 2);
  for (int i = 0; i + 1 < n; ++i) {
    const RealVector left = pauli_coefficients(random_hermitian_factor(rng)) / 2.0;
    const RealVector right = pauli_coefficients(random_hermitian_factor(rng)) / 2.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) h.window(i)(a * 4 + b) = left(a) * right(b);
  }
  return h;
}

struct DenseEigen {
  DenseState state;
  double energy = 0.0;
  double gap = 0.0;  ///< distance to the next distinct level (0 if degenerate)
  RealVector spectrum;
};

/// Exact extremal eigenvector by full diagonalization. `lowest` selects the
/// ground state; otherwise the top of the spectrum.
inline DenseEigen dense_ground_state(const WindowOperatorSum& h, bool lowest = true) {
  const Matrix m = apply_opsum_dense(h);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Eigen::Index dim = m.rows();
  const Eigen::Index pick = lowest ? 0 : dim - 1;
  DenseEigen out;
  out.spectrum = es.eigenvalues();
  out.energy = es.eigenvalues()(pick);
  if (dim > 1) {
    const double next = lowest ? es.eigenvalues()(1) : es.eigenvalues()(dim - 2);
    out.gap = std::abs(next - out.energy);
  }
  out.state = DenseState{h.n_sites(), 2, es.eigenvectors().col(pick)};
  return out;
}

}  // namespace mpstomo
