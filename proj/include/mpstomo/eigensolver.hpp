#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "mpstomo/core.hpp"
#include "mpstomo/mpo.hpp"
#include "mpstomo/mps.hpp"
#include "mpstomo/pauli.hpp"
#include "mpstomo/states.hpp"

namespace mpstomo {

enum class Extremum { max, min };

struct SweepConfig {
  int bond_dim = 16;
  int max_sweeps = 20;
  double tol = 1e-10;  ///< convergence threshold on the change of the objective per sweep
  Extremum extremum = Extremum::min;
  std::uint64_t seed = 1;
  bool two_site = true;
  /// Local problems up to this dimension are diagonalized densely; larger ones use Lanczos.
  int dense_local_max = 48;
  int krylov_dim = 24;
  int krylov_restarts = 8;
  /// Singular values below this fraction of the largest are dropped when splitting.
  double svd_cutoff = 1e-13;
};

struct EigenResult {
  MPS state;
  double eigenvalue = 0.0;
  /// Objective after every half-sweep.
  std::vector<double> sweep_trace;
  bool converged = false;
  int sweeps = 0;
};

namespace detail {

using ApplyFn = std::function<Vector(const Vector&)>;

struct LocalSolution {
  double value;
  Vector vector;
};

// Extremal eigenpair of a Hermitian linear map. `sign` = +1 for the largest,
// -1 for the smallest eigenvalue. Small problems are assembled densely;
// larger ones use restarted Lanczos with full reorthogonalization.
inline LocalSolution local_extremal(const ApplyFn& apply, Vector start, double sign, const SweepConfig& cfg) {
  const Eigen::Index n = start.size();
  if (start.norm() < 1e-300) start = Vector::Ones(n);
  start.normalize();
  if (n <= cfg.dense_local_max) {
    Matrix h(n, n);
    for (Eigen::Index j = 0; j < n; ++j) h.col(j) = apply(Vector::Unit(n, j));
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Eigen::Index pick = sign > 0 ? n - 1 : 0;
    return {es.eigenvalues()(pick), es.eigenvectors().col(pick)};
  }

  Vector x = start;
  double theta = 0.0;
  const int m = static_cast<int>(std::min<Eigen::Index>(cfg.krylov_dim, n));
  for (int restart = 0; restart <= cfg.krylov_restarts; ++restart) {
    Matrix basis(n, m);
    RealVector alpha(m), beta(m);
    basis.col(0) = x;
    int used = 0;
    Vector w;
    for (int j = 0; j < m; ++j) {
      w = apply(basis.col(j));
      alpha(j) = basis.col(j).dot(w).real();
      // Full reorthogonalization (twice) against the whole basis.
      for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * w);
      used = j + 1;
      const double b = w.norm();
      if (j + 1 == m || b < 1e-13) break;
      beta(j) = b;
      basis.col(j + 1) = w / b;
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
    for (int j = 0; j < used; ++j) {
      t(j, j) = alpha(j);
      if (j + 1 < used) t(j, j + 1) = t(j + 1, j) = beta(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const int pick = sign > 0 ? used - 1 : 0;
    theta = es.eigenvalues()(pick);
    x = basis.leftCols(used) * es.eigenvectors().col(pick).cast<cplx>();
    x.normalize();
    const double residual = (apply(x) - theta * x).norm();
    if (residual < 1e-10 * std::max(1.0, std::abs(theta)) || used < m) break;
  }
  return {theta, x};
}

struct SplitResult {
  SiteTensor left;
  SiteTensor right;
};

// theta[s1 * d + s2] is D_l x D_r. Returns left-orthonormal `left` and the
// remainder in `right` (move_right) or right-orthonormal `right` and the
// remainder in `left`.
inline SplitResult split_two_site(const std::vector<Matrix>& theta, int d, int max_bond, double cutoff,
                                  bool move_right) {
  const auto dl = theta.front().rows(), dr = theta.front().cols();
  Matrix big(dl * d, d * dr);
  for (int s1 = 0; s1 < d; ++s1)
    for (int s2 = 0; s2 < d; ++s2) big.block(s1 * dl, s2 * dr, dl, dr) = theta[static_cast<std::size_t>(s1 * d + s2)];
  Eigen::BDCSVD<Matrix> svd(big, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  Eigen::Index keep = 1;
  const Eigen::Index cap = std::min<Eigen::Index>(sv.size(), max_bond);
  while (keep < cap && sv(keep) > cutoff * sv(0)) ++keep;
  Matrix u = svd.matrixU().leftCols(keep);
  Matrix vh = svd.matrixV().leftCols(keep).adjoint();
  if (move_right)
    vh = sv.head(keep).asDiagonal() * vh;
  else
    u = u * sv.head(keep).asDiagonal();
  return {vsplit(u, d), hsplit(vh, d)};
}

class SweepEngine {
 public:
  SweepEngine(const Mpo& mpo, std::vector<SiteTensor> sites, const SweepConfig& cfg)
      : mpo_(mpo), sites_(std::move(sites)), cfg_(cfg), sign_(cfg.extremum == Extremum::max ? 1.0 : -1.0) {
    const std::size_t n = sites_.size();
    left_.resize(n + 1);
    right_.resize(n + 1);
    left_[0] = left_boundary(mpo_.sites.front().left_dim);
    right_[n] = right_boundary(mpo_.sites.back().right_dim);
    // Sites are right-orthonormal except site 0.
    for (std::size_t i = n; i-- > 1;) right_[i] = extend_right(right_[i + 1], sites_[i], mpo_.sites[i]);
  }

  double right_half_sweep() {
    const std::size_t n = sites_.size();
    double value = 0.0;
    if (cfg_.two_site) {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        value = optimize_pair(i, true);
        left_[i + 1] = extend_left(left_[i], sites_[i], mpo_.sites[i]);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        value = optimize_single(i);
        if (i + 1 < n) {
          move_center_right(i);
          left_[i + 1] = extend_left(left_[i], sites_[i], mpo_.sites[i]);
        }
      }
    }
    return value;
  }

  double left_half_sweep() {
    const std::size_t n = sites_.size();
    double value = 0.0;
    if (cfg_.two_site) {
      for (std::size_t i = n - 1; i-- > 0;) {
        value = optimize_pair(i, false);
        right_[i + 1] = extend_right(right_[i + 2], sites_[i + 1], mpo_.sites[i + 1]);
      }
    } else {
      for (std::size_t i = n; i-- > 0;) {
        value = optimize_single(i);
        if (i > 0) {
          move_center_left(i);
          right_[i] = extend_right(right_[i + 1], sites_[i], mpo_.sites[i]);
        }
      }
    }
    return value;
  }

  const std::vector<SiteTensor>& sites() const { return sites_; }

 private:
  // H_eff theta for sites (i, i+1).
  std::vector<Matrix> apply_pair(std::size_t i, const std::vector<Matrix>& theta) const {
    const int d = static_cast<int>(sites_[i].size());
    const auto& w1 = mpo_.sites[i];
    const auto& w2 = mpo_.sites[i + 1];
    const MpoEnv& l = left_[i];
    const MpoEnv& r = right_[i + 2];
    const auto dl = theta.front().rows(), dr = theta.front().cols();
    std::vector<Matrix> out(theta.size(), Matrix::Zero(dl, dr));

    // lt[left state][s1 * d + s2] = L_state * theta[s1, s2], built on demand.
    std::vector<std::vector<Matrix>> lt(static_cast<std::size_t>(w1.left_dim));
    // mid[mid state][t1 * d + s2] = sum_{l, s1} W1[l, mid][t1, s1] L_l theta[s1, s2]
    std::vector<std::vector<Matrix>> mid(static_cast<std::size_t>(w1.right_dim));
    for (const auto& e : w1.entries) {
      const Matrix& lm = l[static_cast<std::size_t>(e.left)];
      if (lm.isZero(0.0)) continue;
      auto& cache = lt[static_cast<std::size_t>(e.left)];
      if (cache.empty()) {
        cache.resize(theta.size());
        for (std::size_t q = 0; q < theta.size(); ++q) cache[q].noalias() = lm * theta[q];
      }
      auto& acc = mid[static_cast<std::size_t>(e.right)];
      if (acc.empty()) acc.assign(theta.size(), Matrix::Zero(dl, dr));
      for (int t1 = 0; t1 < d; ++t1)
        for (int s1 = 0; s1 < d; ++s1) {
          const cplx o = e.op(t1, s1);
          if (o == cplx(0.0)) continue;
          for (int s2 = 0; s2 < d; ++s2)
            acc[static_cast<std::size_t>(t1 * d + s2)] += o * cache[static_cast<std::size_t>(s1 * d + s2)];
        }
    }
    Matrix tmp(dl, dr);
    for (const auto& e : w2.entries) {
      const auto& acc = mid[static_cast<std::size_t>(e.left)];
      const Matrix& rm = r[static_cast<std::size_t>(e.right)];
      if (acc.empty() || rm.isZero(0.0)) continue;
      for (int t1 = 0; t1 < d; ++t1)
        for (int t2 = 0; t2 < d; ++t2) {
          tmp.setZero();
          bool any = false;
          for (int s2 = 0; s2 < d; ++s2) {
            const cplx o = e.op(t2, s2);
            if (o == cplx(0.0)) continue;
            tmp += o * acc[static_cast<std::size_t>(t1 * d + s2)];
            any = true;
          }
          if (any) out[static_cast<std::size_t>(t1 * d + t2)].noalias() += tmp * rm;
        }
    }
    return out;
  }

  std::vector<Matrix> apply_single(std::size_t i, const std::vector<Matrix>& theta) const {
    const int d = static_cast<int>(sites_[i].size());
    const auto& w = mpo_.sites[i];
    const MpoEnv& l = left_[i];
    const MpoEnv& r = right_[i + 1];
    const auto dl = theta.front().rows(), dr = theta.front().cols();
    std::vector<Matrix> out(theta.size(), Matrix::Zero(dl, dr));
    for (const auto& e : w.entries) {
      const Matrix& lm = l[static_cast<std::size_t>(e.left)];
      const Matrix& rm = r[static_cast<std::size_t>(e.right)];
      if (lm.isZero(0.0) || rm.isZero(0.0)) continue;
      for (int s = 0; s < d; ++s) {
        bool any = false;
        for (int t = 0; t < d; ++t) any = any || e.op(t, s) != cplx(0.0);
        if (!any) continue;
        const Matrix v = lm * theta[static_cast<std::size_t>(s)] * rm;
        for (int t = 0; t < d; ++t) {
          const cplx o = e.op(t, s);
          if (o != cplx(0.0)) out[static_cast<std::size_t>(t)] += o * v;
        }
      }
    }
    return out;
  }

  static Vector flatten(const std::vector<Matrix>& parts) {
    const auto block = parts.front().size();
    Vector v(block * static_cast<Eigen::Index>(parts.size()));
    for (std::size_t q = 0; q < parts.size(); ++q)
      v.segment(static_cast<Eigen::Index>(q) * block, block) = Eigen::Map<const Vector>(parts[q].data(), block);
    return v;
  }

  static std::vector<Matrix> unflatten(const Vector& v, std::size_t count, Eigen::Index rows, Eigen::Index cols) {
    std::vector<Matrix> parts(count);
    const auto block = rows * cols;
    for (std::size_t q = 0; q < count; ++q)
      parts[q] = Eigen::Map<const Matrix>(v.data() + static_cast<Eigen::Index>(q) * block, rows, cols);
    return parts;
  }

  double optimize_pair(std::size_t i, bool move_right) {
    const int d = static_cast<int>(sites_[i].size());
    const auto dl = sites_[i].front().rows(), dr = sites_[i + 1].front().cols();
    std::vector<Matrix> theta;
    theta.reserve(static_cast<std::size_t>(d * d));
    for (int s1 = 0; s1 < d; ++s1)
      for (int s2 = 0; s2 < d; ++s2)
        theta.push_back(sites_[i][static_cast<std::size_t>(s1)] * sites_[i + 1][static_cast<std::size_t>(s2)]);
    const auto count = theta.size();
    ApplyFn fn = [&](const Vector& x) { return flatten(apply_pair(i, unflatten(x, count, dl, dr))); };
    const auto sol = local_extremal(fn, flatten(theta), sign_, cfg_);
    auto split = split_two_site(unflatten(sol.vector, count, dl, dr), d, cfg_.bond_dim, cfg_.svd_cutoff, move_right);
    sites_[i] = std::move(split.left);
    sites_[i + 1] = std::move(split.right);
    return sol.value;
  }

  double optimize_single(std::size_t i) {
    const auto& t = sites_[i];
    const auto dl = t.front().rows(), dr = t.front().cols();
    ApplyFn fn = [&](const Vector& x) { return flatten(apply_single(i, unflatten(x, t.size(), dl, dr))); };
    const auto sol = local_extremal(fn, flatten(t), sign_, cfg_);
    sites_[i] = unflatten(sol.vector, t.size(), dl, dr);
    return sol.value;
  }

  void move_center_right(std::size_t i) {
    const int d = static_cast<int>(sites_[i].size());
    const Matrix stacked = vstack(sites_[i]);
    Eigen::HouseholderQR<Matrix> qr(stacked);
    const Eigen::Index r = std::min(stacked.rows(), stacked.cols());
    const Matrix q = qr.householderQ() * Matrix::Identity(stacked.rows(), r);
    const Matrix rf = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    sites_[i] = vsplit(q, d);
    for (auto& m : sites_[i + 1]) m = rf * m;
  }

  void move_center_left(std::size_t i) {
    const int d = static_cast<int>(sites_[i].size());
    const Matrix row = hstack(sites_[i]);
    Eigen::HouseholderQR<Matrix> qr(row.adjoint());
    const Eigen::Index r = std::min(row.rows(), row.cols());
    const Matrix q = qr.householderQ() * Matrix::Identity(row.cols(), r);
    const Matrix rf = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    sites_[i] = hsplit(q.adjoint(), d);
    const Matrix carry = rf.adjoint();
    for (auto& m : sites_[i - 1]) m = m * carry;
  }

  const Mpo& mpo_;
  std::vector<SiteTensor> sites_;
  SweepConfig cfg_;
  double sign_;
  std::vector<MpoEnv> left_;
  std::vector<MpoEnv> right_;
};

}  // namespace detail

/// Extremal eigenstate of a window operator sum within the MPS manifold of
/// bond dimension cfg.bond_dim, by DMRG-style sweeps. Starts from `warm` if
/// given (its bonds may exceed cfg.bond_dim; they are truncated as the sweep
/// passes), else from random_mps(N, D, cfg.seed).
///
/// Non-convergence is reported through `converged`, not thrown.
inline EigenResult extremal_eigenstate(const WindowOperatorSum& opsum, const SweepConfig& cfg,
                                       const std::optional<MPS>& warm = std::nullopt) {
  if (cfg.bond_dim < 1) throw dimension_error("SweepConfig: bond_dim must be >= 1");
  if (!(cfg.tol > 0.0)) throw dimension_error("SweepConfig: tol must be > 0");
  const int n = opsum.n_sites();
  const Mpo mpo = build_mpo(opsum);
  const double sign = cfg.extremum == Extremum::max ? 1.0 : -1.0;

  MPS start;
  if (warm) {
    if (static_cast<int>(warm->size()) != n) throw dimension_error("warm start has wrong chain length");
    for (int d : warm->phys_dims())
      if (d != 2) throw dimension_error("warm start must be a qubit chain");
    start = warm->gauge() == Gauge::left_canonical ? *warm : canonicalize_left(*warm);
  } else {
    start = random_mps(n, cfg.two_site ? std::min(cfg.bond_dim, 2) : cfg.bond_dim, cfg.seed);
  }

  EigenResult result;
  if (n == 1) {
    const Matrix h = apply_opsum_dense(opsum);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Eigen::Index pick = sign > 0 ? 1 : 0;
    SiteTensor t(2, Matrix::Zero(1, 1));
    for (int s = 0; s < 2; ++s) t[static_cast<std::size_t>(s)](0, 0) = es.eigenvectors()(s, pick);
    result.state = canonicalize_left(MPS({t}));
    result.eigenvalue = es.eigenvalues()(pick);
    result.sweep_trace = {result.eigenvalue};
    result.converged = true;
    return result;
  }

  detail::SweepEngine engine(mpo, start.sites(), cfg);
  double previous = warm ? mpo_expectation(start, mpo) : std::nan("");
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    result.sweep_trace.push_back(engine.right_half_sweep());
    result.sweep_trace.push_back(engine.left_half_sweep());
    result.sweeps = sweep;
    const double current = result.sweep_trace.back();
    if (std::isfinite(previous) && std::abs(current - previous) < cfg.tol) {
      result.converged = true;
      break;
    }
    previous = current;
  }
  result.state = canonicalize_left(MPS(engine.sites()));
  result.eigenvalue = mpo_expectation(result.state, mpo);
  return result;
}

}  // namespace mpstomo
