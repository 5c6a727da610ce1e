#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mpstomo/core.hpp"
#include "mpstomo/mps.hpp"

namespace mpstomo {

struct DisentangleCircuit {
  int n_sites = 0;
  int d = 2;
  int kappa = 2;
  /// unitaries[i] acts on sites [anchors[i], anchors[i] + kappa).
  std::vector<Matrix> unitaries;
  std::vector<int> anchors;
  /// State of the last kappa - 1 sites once everything else is |0>.
  Vector eta;
  /// Population of the first window site outside |0> after each unitary.
  std::vector<double> eps;
  /// Discarded eigenvalue weight of each window reduction.
  std::vector<double> truncation_weights;
};

struct DisentanglingUnitary {
  Matrix unitary;
  double truncation_weight = 0.0;
};

namespace detail {

// Fix the global phase so the first entry above 1e-12 in modulus is real positive.
inline Vector phase_fixed(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-12) return v * std::polar(1.0, -std::arg(v(i)));
  return v;
}

inline bool lexicographic_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a(i).real() - b(i).real()) > 1e-12) return a(i).real() > b(i).real();
    if (std::abs(a(i).imag() - b(i).imag()) > 1e-12) return a(i).imag() > b(i).imag();
  }
  return false;
}

}  // namespace detail

/// Unitary that rotates the top d^{kappa-1} eigenvectors of sigma onto
/// |0> (x) |j>; the remaining rows complete the basis by orthonormalizing the
/// standard basis vectors, in index order, against the kept eigenvectors.
inline DisentanglingUnitary disentangling_unitary(const Matrix& sigma, int d = 2, double psd_tol = 1e-8) {
  const Eigen::Index dim = sigma.rows();
  int kappa = 0;
  for (Eigen::Index p = 1; p < dim; p *= d) ++kappa;
  if (sigma.cols() != dim || static_cast<std::size_t>(dim) != ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(kappa)) ||
      kappa < 1)
    throw dimension_error("disentangling_unitary: sigma is not d^kappa x d^kappa");
  if (hermiticity_defect(sigma) > psd_tol) throw numeric_error("disentangling_unitary: sigma is not Hermitian");
  const EigenPairs eig = eigh_descending(0.5 * (sigma + sigma.adjoint()));
  if (eig.values(dim - 1) < -psd_tol) throw numeric_error("disentangling_unitary: sigma is not positive semidefinite");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), 0);
  std::vector<Vector> vecs;
  for (Eigen::Index j = 0; j < dim; ++j) vecs.push_back(detail::phase_fixed(eig.vectors.col(j)));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (std::abs(eig.values(a) - eig.values(b)) > 1e-12) return eig.values(a) > eig.values(b);
    return detail::lexicographic_less(vecs[static_cast<std::size_t>(a)], vecs[static_cast<std::size_t>(b)]);
  });

  const Eigen::Index keep = dim / d;
  Matrix basis(dim, dim);
  double weight = 0.0;
  for (Eigen::Index j = 0; j < keep; ++j) basis.col(j) = vecs[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
  for (Eigen::Index j = keep; j < dim; ++j) weight += std::max(0.0, eig.values(order[static_cast<std::size_t>(j)]));

  Eigen::Index filled = keep;
  for (Eigen::Index e = 0; e < dim && filled < dim; ++e) {
    Vector v = Vector::Unit(dim, e);
    for (int pass = 0; pass < 2; ++pass) v -= basis.leftCols(filled) * (basis.leftCols(filled).adjoint() * v);
    const double nv = v.norm();
    if (nv < 1e-8) continue;
    basis.col(filled++) = v / nv;
  }
  return {basis.adjoint(), weight};
}

/// Runs the sequential scheme on a simulated state: at step i the reduction
/// of sites [i, i + kappa) of the current state defines U_i, which is applied;
/// site i is then post-selected on |0> and the state renormalized.
inline DisentangleCircuit run_disentangle(const MPS& state, int kappa) {
  const int n = static_cast<int>(state.size());
  if (kappa < 2) throw dimension_error("run_disentangle: kappa must be >= 2");
  if (kappa > n) throw dimension_error("run_disentangle: kappa exceeds chain length");
  const int d = state.phys_dim(0);
  for (int di : state.phys_dims())
    if (di != d) throw dimension_error("run_disentangle: non-uniform physical dimension");
  require_dense(ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(kappa)) *
                    ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(kappa)),
                "run_disentangle window");

  DisentangleCircuit circ;
  circ.n_sites = n;
  circ.d = d;
  circ.kappa = kappa;
  MPS rest = canonicalize_left(state);
  for (int i = 0; i + kappa <= n; ++i) {
    const auto dm = reduced_density(rest, 0, kappa);
    auto du = disentangling_unitary(dm.rho, d);
    MPS rotated = apply_gate(rest, 0, du.unitary);

    // Keep the |0> component of the first site and fold it into the next one.
    std::vector<SiteTensor> sites(rotated.sites().begin() + 1, rotated.sites().end());
    const Matrix head = rotated.site(0)[0];
    for (auto& m : sites.front()) m = head * m;
    MPS kept(std::move(sites));
    const double p0 = overlap(kept, kept).real() / overlap(rotated, rotated).real();

    circ.unitaries.push_back(std::move(du.unitary));
    circ.anchors.push_back(i);
    circ.truncation_weights.push_back(du.truncation_weight);
    circ.eps.push_back(std::clamp(1.0 - p0, 0.0, 1.0));
    if (p0 < 1e-300) throw numeric_error("run_disentangle: post-selection has zero probability");
    rest = canonicalize_left(kept);
  }
  circ.eta = mps_amplitudes(rest);
  circ.eta.normalize();
  return circ;
}

/// U_1^dagger ... U_L^dagger (|0>^{N-kappa+1} (x) |eta>) as an MPS.
inline MPS circuit_to_mps(const DisentangleCircuit& circ) {
  const int tail = circ.kappa - 1;
  const int head = circ.n_sites - tail;
  if (circ.unitaries.size() != circ.anchors.size()) throw structural_error("circuit: anchor count mismatch");
  if (static_cast<std::size_t>(circ.eta.size()) != ipow(static_cast<std::size_t>(circ.d), static_cast<std::size_t>(tail)))
    throw structural_error("circuit: eta has the wrong dimension");
  std::vector<SiteTensor> sites = product_state(std::vector<int>(static_cast<std::size_t>(head), 0), circ.d).sites();
  const MPS eta = mps_from_amplitudes(circ.eta, tail, circ.d);
  for (const auto& t : eta.sites()) sites.push_back(t);
  MPS psi(std::move(sites));
  for (std::size_t j = circ.unitaries.size(); j-- > 0;) psi = apply_gate(psi, circ.anchors[j], circ.unitaries[j].adjoint());
  return canonicalize_left(psi);
}

/// Norm-distance bound ||phi - psi|| <= sum_i sqrt(2 - 2 sqrt(1 - eps_i)).
/// Each post-selection moves the state by exactly that distance, and the
/// unitaries are isometries, so the per-step distances add.
inline double error_bound(const std::vector<double>& eps) {
  double b = 0.0;
  for (double e : eps) b += std::sqrt(std::max(0.0, 2.0 - 2.0 * std::sqrt(1.0 - std::clamp(e, 0.0, 1.0))));
  return b;
}

inline double error_bound(const DisentangleCircuit& circ) { return error_bound(circ.eps); }

}  // namespace mpstomo
