#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "mpstomo/core.hpp"
#include "mpstomo/mps.hpp"
#include "mpstomo/tomo.hpp"

namespace mpstomo {

/// Kronecker product a (x) b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Places an operator acting on `op_len` sites starting `offset` sites into a
/// register of `total` sites (identity elsewhere).
inline Matrix embed(const Matrix& op, int offset, int op_len, int total, int d = 2) {
  if (offset < 0 || offset + op_len > total) throw dimension_error("embed: operator outside register");
  const auto left = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(offset)));
  const auto right = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(total - offset - op_len)));
  return kron(kron(Matrix::Identity(left, left), op), Matrix::Identity(right, right));
}

/// Partial trace of a window operator (on `len` sites) onto [offset, offset + keep).
inline Matrix partial_trace_window(const Matrix& rho, int len, int offset, int keep, int d = 2) {
  const auto left = ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(offset));
  const auto mid = ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(keep));
  const auto right = ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(len - offset - keep));
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(mid), static_cast<Eigen::Index>(mid));
  for (std::size_t l = 0; l < left; ++l)
    for (std::size_t r = 0; r < right; ++r)
      for (std::size_t a = 0; a < mid; ++a)
        for (std::size_t b = 0; b < mid; ++b)
          out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
              rho(static_cast<Eigen::Index>((l * mid + a) * right + r), static_cast<Eigen::Index>((l * mid + b) * right + r));
  return out;
}

struct InjectivityReport {
  int k = 0;
  std::vector<int> block_starts;
  std::vector<int> ranks;
  std::vector<int> full_ranks;  ///< D_left * D_right of each block
  std::vector<bool> injective;
  bool all_injective = true;
};

namespace detail {

// Block anchors 0, k, 2k, ... plus a final block flush with the chain end.
inline std::vector<int> block_anchors(int n, int len, int step) {
  std::vector<int> out;
  for (int s = 0; s + len <= n; s += step) out.push_back(s);
  if (out.empty()) throw dimension_error("chain shorter than one block");
  if (out.back() + len < n) out.push_back(n - len);
  return out;
}

// Rows: physical configurations; columns: the D_l * D_r matrix entries.
inline Matrix coefficient_matrix(const std::vector<Matrix>& prods) {
  const auto dl = prods.front().rows(), dr = prods.front().cols();
  Matrix g(static_cast<Eigen::Index>(prods.size()), dl * dr);
  for (std::size_t s = 0; s < prods.size(); ++s)
    g.row(static_cast<Eigen::Index>(s)) = Eigen::Map<const Vector>(prods[s].data(), dl * dr).transpose();
  return g;
}

inline int numerical_rank(const RealVector& sv, double rel) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int r = 0;
  while (r < sv.size() && sv(r) > rel * sv(0)) ++r;
  return r;
}

inline void require_canonical(const MPS& mps, const char* what) {
  if (mps.gauge() != Gauge::left_canonical || gauge_defect(mps) > 1e-8)
    throw structural_error(std::string(what) + ": input MPS must be in the left-canonical gauge");
}

}  // namespace detail

/// Whether the products M[s_1]...M[s_k] of each k-site block span the full
/// D_l x D_r matrix space.
inline InjectivityReport injectivity_check(const MPS& mps, int k, double rel_tol = 1e-10) {
  if (k < 1) throw dimension_error("injectivity_check: k must be >= 1");
  InjectivityReport rep;
  rep.k = k;
  for (int s : detail::block_anchors(static_cast<int>(mps.size()), k, k)) {
    const Matrix g = detail::coefficient_matrix(window_products(mps, s, k));
    Eigen::BDCSVD<Matrix> svd(g);
    const int rank = detail::numerical_rank(svd.singularValues(), rel_tol);
    const int full = static_cast<int>(g.cols());
    rep.block_starts.push_back(s);
    rep.ranks.push_back(rank);
    rep.full_ranks.push_back(full);
    rep.injective.push_back(rank == full);
    rep.all_injective = rep.all_injective && rank == full;
  }
  return rep;
}

/// H = sum_n P_n with P_n the projector onto the orthocomplement of the range
/// of Gamma_n: X -> sum_s tr[X M[s_1]...M[s_2k]] |s_1...s_2k> on window n.
struct ParentHamiltonian {
  int n_sites = 0;
  int d = 2;
  int k = 0;
  std::vector<int> starts;  ///< window n covers sites [starts[n], starts[n] + 2k)
  std::vector<Matrix> projectors;
  std::vector<int> range_dims;
  InjectivityReport injectivity;

  int window_length() const { return 2 * k; }
};

inline ParentHamiltonian parent_hamiltonian(const MPS& mps, int k, double rel_tol = 1e-10) {
  detail::require_canonical(mps, "parent_hamiltonian");
  const int n = static_cast<int>(mps.size());
  if (k < 1 || 2 * k > n) throw dimension_error("parent_hamiltonian: need 1 <= k and 2k <= N");
  ParentHamiltonian ph;
  ph.n_sites = n;
  ph.d = mps.phys_dim(0);
  ph.k = k;
  const auto dim = ipow(static_cast<std::size_t>(ph.d), static_cast<std::size_t>(2 * k));
  require_dense(dim * dim, "parent_hamiltonian window");
  ph.injectivity = injectivity_check(mps, k, rel_tol);
  for (int s : detail::block_anchors(n, 2 * k, k)) {
    const Matrix g = detail::coefficient_matrix(window_products(mps, s, 2 * k));
    Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU);
    const int rank = detail::numerical_rank(svd.singularValues(), rel_tol);
    const Matrix q = svd.matrixU().leftCols(rank);
    Matrix p = Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)) - q * q.adjoint();
    ph.starts.push_back(s);
    ph.projectors.push_back(0.5 * (p + p.adjoint()));
    ph.range_dims.push_back(rank);
  }
  return ph;
}

/// Dense 2^N matrix of sum_n P_n (oracle support).
inline Matrix dense_hamiltonian(const ParentHamiltonian& ph) {
  const auto dim = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(ph.d), static_cast<std::size_t>(ph.n_sites)));
  require_dense(static_cast<std::size_t>(dim), "dense_hamiltonian");
  Matrix h = Matrix::Zero(dim, dim);
  for (std::size_t n = 0; n < ph.projectors.size(); ++n)
    h += embed(ph.projectors[n], ph.starts[n], ph.window_length(), ph.n_sites, ph.d);
  return h;
}

/// <psi|H|psi> = sum_n tr[P_n rho_n].
inline double parent_energy(const ParentHamiltonian& ph, const MPS& mps) {
  double e = 0.0;
  for (std::size_t n = 0; n < ph.projectors.size(); ++n)
    e += (ph.projectors[n] * reduced_density(mps, ph.starts[n], ph.window_length()).rho).trace().real();
  return e;
}

struct GammaPair {
  int n = 0;
  int m = 0;
  double gamma = 0.0;
};

struct GapCertificate {
  double gamma = 0.0;
  std::vector<GammaPair> pairs;
  double bound = 1.0;  ///< 1 - gamma; vacuous when <= 0
  bool vacuous = false;
};

/// Gap lower bound 1 - gamma, gamma = max_n sum_m gamma_{n,m}, where
/// gamma_{n,m} = 1 - (smallest eigenvalue of P_n + P_m above `zero_tol`)
/// for every pair of windows that overlap or touch.
inline GapCertificate gap_lower_bound(const ParentHamiltonian& ph, double zero_tol = 1e-8) {
  const int len = ph.window_length();
  const int count = static_cast<int>(ph.projectors.size());
  GapCertificate cert;
  std::vector<double> row(static_cast<std::size_t>(count), 0.0);
  for (int n = 0; n < count; ++n)
    for (int m = n + 1; m < count; ++m) {
      const int a = ph.starts[static_cast<std::size_t>(n)], b = ph.starts[static_cast<std::size_t>(m)];
      const int lo = std::min(a, b), hi = std::max(a, b) + len;
      if (hi - lo > 2 * len) continue;
      require_dense(ipow(static_cast<std::size_t>(ph.d), static_cast<std::size_t>(hi - lo)), "gap_lower_bound joint support");
      const Matrix sum = embed(ph.projectors[static_cast<std::size_t>(n)], a - lo, len, hi - lo, ph.d) +
                         embed(ph.projectors[static_cast<std::size_t>(m)], b - lo, len, hi - lo, ph.d);
      Eigen::SelfAdjointEigenSolver<Matrix> es(sum, Eigen::EigenvaluesOnly);
      double smallest = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
        if (es.eigenvalues()(j) > zero_tol) smallest = std::min(smallest, es.eigenvalues()(j));
      const double g = std::isfinite(smallest) ? std::clamp(1.0 - smallest, 0.0, 1.0) : 0.0;
      cert.pairs.push_back({n, m, g});
      row[static_cast<std::size_t>(n)] += g;
      row[static_cast<std::size_t>(m)] += g;
    }
  cert.gamma = row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
  cert.bound = 1.0 - cert.gamma;
  cert.vacuous = !(cert.bound > 0.0);
  return cert;
}

struct FidelityBound {
  double value = 0.0;     ///< 1 - sum_n (eps_n + tr[P_n sigma_n]) / gap bound (may be negative)
  double reported = 0.0;  ///< value clamped to [0, 1]
  bool vacuous = false;
  /// False when some block is not injective: the bound then covers the
  /// overlap with the ground space rather than with the state itself.
  bool unique_ground_state = true;
  std::vector<double> energies;  ///< tr[P_n sigma_n]
  std::vector<double> eps;       ///< eps_n attributed to window n
};

/// Fidelity witness <psi|rho|psi> >= 1 - sum_n (eps_n + tr[P_n sigma_n]) / DeltaE,
/// with sigma_n the dataset estimate restricted to the support of P_n and eps_n
/// the error radius of the dataset window it came from.
inline FidelityBound fidelity_bound(const ParentHamiltonian& ph, const GapCertificate& gap, const TomographyDataset& ds,
                                    const std::optional<std::vector<double>>& eps = std::nullopt) {
  const int len = ph.window_length();
  if (ds.n_sites != ph.n_sites) throw dimension_error("fidelity_bound: chain length mismatch");
  if (ds.window_size < len)
    throw data_support_error("fidelity_bound: dataset window size " + std::to_string(ds.window_size) +
                             " is smaller than the projector support " + std::to_string(len));
  const std::vector<double>& radii = eps ? *eps : ds.eps;
  if (static_cast<int>(radii.size()) != ds.n_windows()) throw dimension_error("fidelity_bound: eps list length mismatch");

  FidelityBound out;
  out.unique_ground_state = ph.injectivity.all_injective;
  double total = 0.0;
  for (std::size_t n = 0; n < ph.projectors.size(); ++n) {
    const int s = ph.starts[n];
    const int a = std::min(s, ds.n_sites - ds.window_size);
    const Matrix sigma = partial_trace_window(ds.sigma(a), ds.window_size, s - a, len, ph.d);
    const double e = (ph.projectors[n] * sigma).trace().real();
    out.energies.push_back(e);
    out.eps.push_back(radii[static_cast<std::size_t>(a)]);
    total += e + radii[static_cast<std::size_t>(a)];
  }
  if (gap.vacuous) {
    out.value = -std::numeric_limits<double>::infinity();
    out.vacuous = true;
  } else {
    out.value = 1.0 - total / gap.bound;
    out.vacuous = !(out.value > 0.0);
  }
  out.reported = std::clamp(out.value, 0.0, 1.0);
  return out;
}

struct PhaseEstimate {
  double phi = 0.0;
  double expectation = 0.0;  ///< clamped to [-1, 1]
  std::optional<double> ground_space_overlap;
};

/// Relative phase of a GHZ-type state from the X-string expectation cos(phi).
inline PhaseEstimate ghz_phase_certify(double string_expectation, std::optional<double> ground_space_overlap = std::nullopt,
                                       double tol = 1e-6) {
  if (!(std::abs(string_expectation) <= 1.0 + tol))
    throw numeric_error("ghz_phase_certify: string expectation outside [-1, 1]");
  PhaseEstimate p;
  p.expectation = std::clamp(string_expectation, -1.0, 1.0);
  p.phi = std::acos(p.expectation);
  p.ground_space_overlap = ground_space_overlap;
  return p;
}

}  // namespace mpstomo
