#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "mpstomo/core.hpp"

namespace mpstomo {

enum class Gauge { none, left_canonical };

inline const char* to_string(Gauge g) { return g == Gauge::left_canonical ? "left_canonical" : "none"; }

/// One site of an MPS: tensor[s] is the D_left x D_right matrix M[s].
using SiteTensor = std::vector<Matrix>;

/// Open-boundary matrix product state
///   |psi> = sum_s M_1[s_1] ... M_N[s_N] |s_1 ... s_N>
/// with D_1 = D_{N+1} = 1. Basis ordering is big-endian: site 0 is the most
/// significant digit of a dense index.
///
/// Gauge::left_canonical means sum_s M[s] M[s]^dagger = 1 at every site,
/// which also fixes <psi|psi> = 1.
class MPS {
 public:
  MPS() = default;

  explicit MPS(std::vector<SiteTensor> sites, Gauge gauge = Gauge::none)
      : sites_(std::move(sites)), gauge_(gauge) {
    validate();
  }

  std::size_t size() const { return sites_.size(); }
  const SiteTensor& site(std::size_t i) const { return sites_.at(i); }
  const std::vector<SiteTensor>& sites() const { return sites_; }
  Gauge gauge() const { return gauge_; }

  int phys_dim(std::size_t i) const { return static_cast<int>(sites_.at(i).size()); }
  /// Bond i sits to the left of site i; bond N is the right boundary.
  int bond_dim(std::size_t i) const {
    if (i == sites_.size()) return static_cast<int>(sites_.back().front().cols());
    return static_cast<int>(sites_.at(i).front().rows());
  }

  std::vector<int> phys_dims() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(phys_dim(i));
    return out;
  }
  std::vector<int> bond_dims() const {
    std::vector<int> out;
    for (std::size_t i = 0; i <= size(); ++i) out.push_back(bond_dim(i));
    return out;
  }
  int max_bond() const {
    auto b = bond_dims();
    return *std::max_element(b.begin(), b.end());
  }

  /// Product of d_i; callers compare this against dense_limit().
  std::size_t hilbert_dim() const {
    std::size_t dim = 1;
    for (const auto& s : sites_) dim *= s.size();
    return dim;
  }

 private:
  void validate() const {
    if (sites_.empty()) throw structural_error("MPS must have at least one site");
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      const auto& t = sites_[i];
      if (t.empty()) throw structural_error("site " + std::to_string(i) + " has zero physical dimension");
      for (const auto& m : t) {
        if (m.rows() != t.front().rows() || m.cols() != t.front().cols()) {
          throw structural_error("site " + std::to_string(i) + " has inconsistent matrix shapes");
        }
      }
      if (i > 0 && sites_[i - 1].front().cols() != t.front().rows()) {
        throw structural_error("bond mismatch between sites " + std::to_string(i - 1) + " and " +
                               std::to_string(i));
      }
    }
    if (sites_.front().front().rows() != 1 || sites_.back().front().cols() != 1) {
      throw structural_error("boundary bond dimensions must be 1");
    }
  }

  std::vector<SiteTensor> sites_;
  Gauge gauge_ = Gauge::none;
};

/// Reduced density matrix of a contiguous window [start, start + length).
struct DensityMatrix {
  int start = 0;
  int length = 0;
  int d = 2;
  Matrix rho;
};

namespace detail {

// [M[0] M[1] ... M[d-1]] as one D_l x (d D_r) matrix.
inline Matrix hstack(const SiteTensor& t) {
  const auto rows = t.front().rows(), cols = t.front().cols();
  Matrix out(rows, cols * static_cast<Eigen::Index>(t.size()));
  for (std::size_t s = 0; s < t.size(); ++s) out.middleCols(static_cast<Eigen::Index>(s) * cols, cols) = t[s];
  return out;
}

inline SiteTensor hsplit(const Matrix& m, int d) {
  const auto cols = m.cols() / d;
  SiteTensor out(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) out[static_cast<std::size_t>(s)] = m.middleCols(s * cols, cols);
  return out;
}

// Rows ordered (s, alpha): row index s * D_l + alpha.
inline Matrix vstack(const SiteTensor& t) {
  const auto rows = t.front().rows(), cols = t.front().cols();
  Matrix out(rows * static_cast<Eigen::Index>(t.size()), cols);
  for (std::size_t s = 0; s < t.size(); ++s) out.middleRows(static_cast<Eigen::Index>(s) * rows, rows) = t[s];
  return out;
}

inline SiteTensor vsplit(const Matrix& m, int d) {
  const auto rows = m.rows() / d;
  SiteTensor out(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) out[static_cast<std::size_t>(s)] = m.middleRows(s * rows, rows);
  return out;
}

// Square-root factor F with E = F F^dagger for a Hermitian PSD environment.
inline Matrix psd_factor(const Matrix& e) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(e);
  RealVector sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * sq.asDiagonal();
}

inline bool is_identity(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace detail

/// Brings an MPS into the gauge sum_s M[s] M[s]^dagger = 1 by a right-to-left
/// sweep of LQ factorizations, then normalizes the first site.
inline MPS canonicalize_left(const MPS& mps) {
  std::vector<SiteTensor> sites = mps.sites();
  const std::size_t n = sites.size();
  for (std::size_t i = n - 1; i >= 1; --i) {
    const int d = static_cast<int>(sites[i].size());
    const Matrix m = detail::hstack(sites[i]);
    Eigen::HouseholderQR<Matrix> qr(m.adjoint());
    const Eigen::Index r = std::min(m.rows(), m.cols());
    Matrix q = qr.householderQ() * Matrix::Identity(m.cols(), r);
    Matrix rfac = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    sites[i] = detail::hsplit(q.adjoint(), d);
    const Matrix carry = rfac.adjoint();
    for (auto& prev : sites[i - 1]) prev = prev * carry;
  }
  const Matrix first = detail::hstack(sites[0]);
  const double nrm = first.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw numeric_error("cannot canonicalize a zero-norm MPS");
  for (auto& m : sites[0]) m /= nrm;
  return MPS(std::move(sites), Gauge::left_canonical);
}

/// Largest deviation of sum_s M[s] M[s]^dagger from identity over all sites.
inline double gauge_defect(const MPS& mps) {
  double worst = 0.0;
  for (const auto& t : mps.sites()) {
    Matrix acc = Matrix::Zero(t.front().rows(), t.front().rows());
    for (const auto& m : t) acc += m * m.adjoint();
    worst = std::max(worst, (acc - Matrix::Identity(acc.rows(), acc.cols())).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// <a|b> by left-to-right transfer contraction.
inline cplx overlap(const MPS& a, const MPS& b) {
  if (a.phys_dims() != b.phys_dims()) throw dimension_error("overlap: chain lengths or physical dimensions differ");
  Matrix e = Matrix::Ones(1, 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ta = a.site(i);
    const auto& tb = b.site(i);
    Matrix next = Matrix::Zero(ta.front().cols(), tb.front().cols());
    for (std::size_t s = 0; s < ta.size(); ++s) next.noalias() += ta[s].adjoint() * e * tb[s];
    e = std::move(next);
  }
  return e(0, 0);
}

inline double norm(const MPS& a) { return std::sqrt(std::max(0.0, overlap(a, a).real())); }

inline double fidelity(const MPS& a, const MPS& b) {
  return std::norm(overlap(a, b)) / (overlap(a, a).real() * overlap(b, b).real());
}

/// Left environments E_L[i] = sum_prefix P^dagger P for bonds 0..N.
inline std::vector<Matrix> left_environments(const MPS& mps) {
  std::vector<Matrix> env(mps.size() + 1);
  env[0] = Matrix::Ones(1, 1);
  for (std::size_t i = 0; i < mps.size(); ++i) {
    const auto& t = mps.site(i);
    Matrix next = Matrix::Zero(t.front().cols(), t.front().cols());
    for (const auto& m : t) next.noalias() += m.adjoint() * env[i] * m;
    env[i + 1] = std::move(next);
  }
  return env;
}

/// Right environments E_R[i] = sum_suffix Q Q^dagger for bonds 0..N.
inline std::vector<Matrix> right_environments(const MPS& mps) {
  std::vector<Matrix> env(mps.size() + 1);
  env[mps.size()] = Matrix::Ones(1, 1);
  for (std::size_t i = mps.size(); i-- > 0;) {
    const auto& t = mps.site(i);
    Matrix next = Matrix::Zero(t.front().rows(), t.front().rows());
    for (const auto& m : t) next.noalias() += m * env[i + 1] * m.adjoint();
    env[i] = std::move(next);
  }
  return env;
}

/// Products M_start[s_1] ... M_{start+len-1}[s_len] for every configuration,
/// indexed big-endian. Optionally left-multiplied by `left`.
inline std::vector<Matrix> window_products(const MPS& mps, int start, int len) {
  std::vector<Matrix> prods{Matrix::Identity(mps.bond_dim(static_cast<std::size_t>(start)),
                                             mps.bond_dim(static_cast<std::size_t>(start)))};
  for (int j = start; j < start + len; ++j) {
    const auto& t = mps.site(static_cast<std::size_t>(j));
    std::vector<Matrix> next;
    next.reserve(prods.size() * t.size());
    for (const auto& p : prods)
      for (const auto& m : t) next.push_back(p * m);
    prods = std::move(next);
  }
  return prods;
}

namespace detail {

inline DensityMatrix window_density(const MPS& mps, int start, int len, const Matrix& left_env,
                                    const Matrix& right_env) {
  const int d = mps.phys_dim(static_cast<std::size_t>(start));
  const auto prods = window_products(mps, start, len);
  const bool left_id = is_identity(left_env, 1e-13);
  const bool right_id = is_identity(right_env, 1e-13);
  const Matrix fl = left_id ? Matrix() : psd_factor(left_env);
  const Matrix gr = right_id ? Matrix() : psd_factor(right_env);

  const auto dim = static_cast<Eigen::Index>(prods.size());
  Eigen::Index width = 0;
  Matrix v;
  for (Eigen::Index k = 0; k < dim; ++k) {
    Matrix w = prods[static_cast<std::size_t>(k)];
    if (!left_id) w = fl.adjoint() * w;
    if (!right_id) w = w * gr;
    if (k == 0) {
      width = w.size();
      v.resize(dim, width);
    }
    v.row(k) = Eigen::Map<const Eigen::RowVectorXcd>(w.data(), width);
  }
  Matrix rho = v * v.adjoint();
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) throw numeric_error("reduced density has zero trace");
  rho /= tr;
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix{start, len, d, std::move(rho)};
}

inline void check_window(const MPS& mps, int start, int len) {
  if (len < 1 || start < 0 || static_cast<std::size_t>(start + len) > mps.size()) {
    throw dimension_error("window (" + std::to_string(start) + ", " + std::to_string(len) + ") outside chain of " +
                          std::to_string(mps.size()) + " sites");
  }
  std::size_t dim = 1;
  for (int j = start; j < start + len; ++j) dim *= static_cast<std::size_t>(mps.phys_dim(static_cast<std::size_t>(j)));
  require_dense(dim, "reduced_density");
}

}  // namespace detail

/// Partial trace of |psi><psi| onto the window [start, start+len), trace-normalized.
inline DensityMatrix reduced_density(const MPS& mps, int start, int len) {
  detail::check_window(mps, start, len);
  Matrix left = Matrix::Ones(1, 1);
  for (int i = 0; i < start; ++i) {
    const auto& t = mps.site(static_cast<std::size_t>(i));
    Matrix next = Matrix::Zero(t.front().cols(), t.front().cols());
    for (const auto& m : t) next.noalias() += m.adjoint() * left * m;
    left = std::move(next);
  }
  Matrix right;
  if (mps.gauge() == Gauge::left_canonical) {
    right = Matrix::Identity(mps.bond_dim(static_cast<std::size_t>(start + len)),
                             mps.bond_dim(static_cast<std::size_t>(start + len)));
  } else {
    right = Matrix::Ones(1, 1);
    for (auto i = static_cast<int>(mps.size()) - 1; i >= start + len; --i) {
      const auto& t = mps.site(static_cast<std::size_t>(i));
      Matrix next = Matrix::Zero(t.front().rows(), t.front().rows());
      for (const auto& m : t) next.noalias() += m * right * m.adjoint();
      right = std::move(next);
    }
  }
  return detail::window_density(mps, start, len, left, right);
}

/// Reduced densities of every length-`len` window, in order of start site.
/// Environments are shared, so the cost is linear in N.
inline std::vector<DensityMatrix> reduced_densities(const MPS& mps, int len) {
  if (len < 1 || static_cast<std::size_t>(len) > mps.size()) throw dimension_error("window length outside chain");
  detail::check_window(mps, 0, len);
  const auto left = left_environments(mps);
  std::vector<Matrix> right;
  if (mps.gauge() != Gauge::left_canonical) right = right_environments(mps);
  std::vector<DensityMatrix> out;
  const int count = static_cast<int>(mps.size()) - len + 1;
  out.reserve(static_cast<std::size_t>(count));
  for (int a = 0; a < count; ++a) {
    detail::check_window(mps, a, len);
    const auto b = static_cast<std::size_t>(a + len);
    const Matrix r = right.empty() ? Matrix::Identity(mps.bond_dim(b), mps.bond_dim(b)) : right[b];
    out.push_back(detail::window_density(mps, a, len, left[static_cast<std::size_t>(a)], r));
  }
  return out;
}

struct CompressResult {
  MPS state;
  double truncation_weight = 0.0;
};

/// SVD truncation to bond dimension `max_bond`. Singular values are kept
/// largest-first; beyond the cap, further trailing values are dropped while
/// their cumulative squared weight stays within `tol`. The reported weight is
/// the total discarded squared Schmidt weight of the (unnormalized) state, so
/// the fidelity with the input is exactly 1 - truncation_weight.
inline CompressResult compress(const MPS& input, int max_bond, double tol = 0.0) {
  if (max_bond < 1) throw dimension_error("compress: max_bond must be >= 1");
  const MPS mps = input.gauge() == Gauge::left_canonical ? input : canonicalize_left(input);
  std::vector<SiteTensor> sites = mps.sites();
  double discarded = 0.0;
  Matrix carry = Matrix::Identity(1, 1);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const int d = static_cast<int>(sites[i].size());
    for (auto& m : sites[i]) m = carry * m;
    if (i + 1 == sites.size()) break;
    const Matrix stacked = detail::vstack(sites[i]);
    Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();
    const auto full = sv.size();
    Eigen::Index keep = std::min<Eigen::Index>(full, max_bond);
    double dropped = 0.0;
    for (Eigen::Index j = keep; j < full; ++j) dropped += sv(j) * sv(j);
    const double total = sv.squaredNorm();
    while (keep > 1 && dropped + sv(keep - 1) * sv(keep - 1) <= tol * total) {
      --keep;
      dropped += sv(keep) * sv(keep);
    }
    discarded += dropped;
    sites[i] = detail::vsplit(svd.matrixU().leftCols(keep), d);
    carry = sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
  }
  return CompressResult{canonicalize_left(MPS(std::move(sites))), discarded};
}

/// Applies a dense operator on sites [start, start + k) (k = log_d of its size)
/// and splits the block back into sites with exact SVDs; singular values below
/// `cutoff` relative to the largest are dropped.
inline MPS apply_gate(const MPS& mps, int start, const Matrix& gate, double cutoff = 1e-14) {
  const int d = mps.phys_dim(static_cast<std::size_t>(start));
  int k = 0;
  for (Eigen::Index dim = 1; dim < gate.rows(); dim *= d) ++k;
  if (gate.rows() != gate.cols() || static_cast<std::size_t>(gate.rows()) != ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(k))) {
    throw dimension_error("apply_gate: operator is not d^k x d^k");
  }
  if (start < 0 || static_cast<std::size_t>(start + k) > mps.size()) throw dimension_error("apply_gate: window outside chain");
  const auto blocks = window_products(mps, start, k);
  std::vector<Matrix> rotated(blocks.size(), Matrix::Zero(blocks[0].rows(), blocks[0].cols()));
  for (std::size_t t = 0; t < blocks.size(); ++t)
    for (std::size_t s = 0; s < blocks.size(); ++s) {
      const cplx g = gate(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s));
      if (g != cplx(0.0)) rotated[t] += g * blocks[s];
    }

  std::vector<SiteTensor> sites = mps.sites();
  const auto dl0 = blocks[0].rows();
  const auto dr = blocks[0].cols();
  // rest[sigma] is a (current left bond) x dr matrix for the remaining digits.
  std::vector<Matrix> rest = std::move(rotated);
  Eigen::Index dl = dl0;
  for (int j = 0; j < k - 1; ++j) {
    const std::size_t tail = rest.size() / static_cast<std::size_t>(d);
    Matrix theta(dl * d, static_cast<Eigen::Index>(tail) * dr);
    for (int s = 0; s < d; ++s)
      for (std::size_t r = 0; r < tail; ++r)
        theta.block(s * dl, static_cast<Eigen::Index>(r) * dr, dl, dr) = rest[static_cast<std::size_t>(s) * tail + r];
    Eigen::BDCSVD<Matrix> svd(theta, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();
    Eigen::Index keep = 1;
    while (keep < sv.size() && sv(keep) > cutoff * sv(0)) ++keep;
    sites[static_cast<std::size_t>(start + j)] = detail::vsplit(svd.matrixU().leftCols(keep), d);
    const Matrix c = sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
    std::vector<Matrix> next(tail);
    for (std::size_t r = 0; r < tail; ++r) next[r] = c.middleCols(static_cast<Eigen::Index>(r) * dr, dr);
    rest = std::move(next);
    dl = keep;
  }
  sites[static_cast<std::size_t>(start + k - 1)] = SiteTensor(rest.begin(), rest.end());
  return MPS(std::move(sites));
}

/// Exact MPS of a dense amplitude vector (big-endian, uniform local dimension d).
inline MPS mps_from_amplitudes(const Vector& amps, int n_sites, int d, double cutoff = 1e-14) {
  if (n_sites < 1 || static_cast<std::size_t>(amps.size()) != ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(n_sites))) {
    throw dimension_error("mps_from_amplitudes: vector length is not d^N");
  }
  std::vector<SiteTensor> sites;
  Matrix rest = amps.transpose();  // 1 x d^N
  Eigen::Index dl = 1;
  for (int j = 0; j < n_sites - 1; ++j) {
    const Eigen::Index tail = rest.cols() / d;
    Matrix theta(dl * d, tail);
    for (int s = 0; s < d; ++s) theta.middleRows(s * dl, dl) = rest.middleCols(s * tail, tail);
    Eigen::BDCSVD<Matrix> svd(theta, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();
    Eigen::Index keep = 1;
    while (keep < sv.size() && sv(keep) > cutoff * sv(0)) ++keep;
    sites.push_back(detail::vsplit(svd.matrixU().leftCols(keep), d));
    const Matrix c = sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
    rest = c;
    dl = keep;
  }
  SiteTensor last(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) last[static_cast<std::size_t>(s)] = rest.col(s);
  sites.push_back(std::move(last));
  return MPS(std::move(sites));
}

/// Amplitudes of an MPS (big-endian). Throws if d^N exceeds the dense limit.
inline Vector mps_amplitudes(const MPS& mps) {
  require_dense(mps.hilbert_dim(), "mps_amplitudes");
  const auto prods = window_products(mps, 0, static_cast<int>(mps.size()));
  Vector out(static_cast<Eigen::Index>(prods.size()));
  for (std::size_t i = 0; i < prods.size(); ++i) out(static_cast<Eigen::Index>(i)) = prods[i](0, 0);
  return out;
}

/// Computational-basis product state, e.g. {0,0,1} -> |001>.
inline MPS product_state(const std::vector<int>& digits, int d = 2) {
  std::vector<SiteTensor> sites;
  for (int s : digits) {
    if (s < 0 || s >= d) throw dimension_error("product_state: digit outside [0, d)");
    SiteTensor t(static_cast<std::size_t>(d), Matrix::Zero(1, 1));
    t[static_cast<std::size_t>(s)](0, 0) = 1.0;
    sites.push_back(std::move(t));
  }
  return MPS(std::move(sites), Gauge::left_canonical);
}

}  // namespace mpstomo
