#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpstomo/core.hpp"
#include "mpstomo/mps.hpp"

namespace mpstomo {

// Pauli words over {I, X, Y, Z} with Z|0> = |0>. A word of length k is
// indexed base 4 (I=0, X=1, Y=2, Z=3), first letter most significant, so
// index order is lexicographic with the identity word first.

inline constexpr char kPauliLetters[4] = {'I', 'X', 'Y', 'Z'};

inline int pauli_digit(char c) {
  switch (c) {
    case 'I': return 0;
    case 'X': return 1;
    case 'Y': return 2;
    case 'Z': return 3;
    default: throw structural_error(std::string("invalid Pauli letter '") + c + "'");
  }
}

struct PauliLabel {
  int window_start = 0;
  std::string word;

  friend bool operator==(const PauliLabel&, const PauliLabel&) = default;
};

inline std::size_t word_index(std::string_view word) {
  std::size_t idx = 0;
  for (char c : word) idx = idx * 4 + static_cast<std::size_t>(pauli_digit(c));
  return idx;
}

inline std::string word_from_index(std::size_t idx, int k) {
  std::string w(static_cast<std::size_t>(k), 'I');
  for (int j = k - 1; j >= 0; --j) {
    w[static_cast<std::size_t>(j)] = kPauliLetters[idx % 4];
    idx /= 4;
  }
  return w;
}

/// All 4^k words on one window, identity first.
inline std::vector<PauliLabel> enumerate_window_basis(int k, int window_start = 0) {
  if (k < 1) throw dimension_error("enumerate_window_basis: k must be >= 1");
  const std::size_t count = ipow(4, static_cast<std::size_t>(k));
  std::vector<PauliLabel> out;
  out.reserve(count);
  for (std::size_t m = 0; m < count; ++m) out.push_back({window_start, word_from_index(m, k)});
  return out;
}

inline Matrix pauli_matrix(char c) {
  Matrix p(2, 2);
  switch (pauli_digit(c)) {
    case 0: p << 1, 0, 0, 1; break;
    case 1: p << 0, 1, 1, 0; break;
    case 2: p << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: p << 1, 0, 0, -1; break;
  }
  return p;
}

/// Bit-mask form of a Pauli word: P|r> = phase(r) |r ^ flip>, with
/// phase(r) = i^{#Y} (-1)^{popcount(r & sign)}. Bit k-1-j belongs to letter j.
struct PauliMask {
  std::uint64_t flip = 0;
  std::uint64_t sign = 0;
  int n_y = 0;

  cplx phase(std::uint64_t r) const {
    static constexpr cplx ipow4[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    const int parity = __builtin_popcountll(r & sign) & 1;
    const cplx base = ipow4[n_y & 3];
    return parity ? -base : base;
  }
};

/// Mask for `word` placed on sites [offset, offset + len(word)) of an n-site register.
inline PauliMask pauli_mask(std::string_view word, int n_sites, int offset = 0) {
  PauliMask m;
  const int k = static_cast<int>(word.size());
  for (int j = 0; j < k; ++j) {
    const std::uint64_t bit = std::uint64_t{1} << (n_sites - 1 - (offset + j));
    switch (pauli_digit(word[static_cast<std::size_t>(j)])) {
      case 1: m.flip |= bit; break;
      case 2: m.flip |= bit; m.sign |= bit; ++m.n_y; break;
      case 3: m.sign |= bit; break;
      default: break;
    }
  }
  return m;
}

/// Real coefficients tr[rho P_m] for every word on a qubit window matrix.
inline RealVector pauli_coefficients(const Matrix& rho) {
  int k = 0;
  while ((Eigen::Index{1} << k) < rho.rows()) ++k;
  if (rho.rows() != (Eigen::Index{1} << k) || rho.cols() != rho.rows())
    throw dimension_error("pauli_coefficients: matrix is not 2^k x 2^k");
  const std::size_t count = ipow(4, static_cast<std::size_t>(k));
  RealVector out(static_cast<Eigen::Index>(count));
  const auto dim = static_cast<std::uint64_t>(rho.rows());
  for (std::size_t m = 0; m < count; ++m) {
    const auto mask = pauli_mask(word_from_index(m, k), k);
    cplx acc = 0.0;
    for (std::uint64_t r = 0; r < dim; ++r)
      acc += mask.phase(r) * rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r ^ mask.flip));
    out(static_cast<Eigen::Index>(m)) = acc.real();
  }
  return out;
}

/// sigma = 2^-k sum_m c_m P_m.
inline Matrix reassemble(const RealVector& coeffs) {
  int k = 0;
  while (ipow(4, static_cast<std::size_t>(k)) < static_cast<std::size_t>(coeffs.size())) ++k;
  if (ipow(4, static_cast<std::size_t>(k)) != static_cast<std::size_t>(coeffs.size()))
    throw dimension_error("reassemble: coefficient count is not 4^k");
  const auto dim = std::uint64_t{1} << k;
  Matrix sigma = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const double scale = 1.0 / static_cast<double>(dim);
  for (Eigen::Index m = 0; m < coeffs.size(); ++m) {
    const double c = coeffs(m);
    if (c == 0.0) continue;
    const auto mask = pauli_mask(word_from_index(static_cast<std::size_t>(m), k), k);
    for (std::uint64_t r = 0; r < dim; ++r)
      sigma(static_cast<Eigen::Index>(r ^ mask.flip), static_cast<Eigen::Index>(r)) += scale * c * mask.phase(r);
  }
  return sigma;
}

/// Pauli expansion of a qubit window density: (label, tr[sigma P_m]) pairs.
inline std::vector<std::pair<PauliLabel, double>> expand_density(const DensityMatrix& dm, double tol = 1e-10) {
  if (dm.d != 2) throw dimension_error("expand_density: Pauli bases are implemented for qubits only");
  if (hermiticity_defect(dm.rho) > tol) throw numeric_error("expand_density: input is not Hermitian");
  const RealVector c = pauli_coefficients(dm.rho);
  std::vector<std::pair<PauliLabel, double>> out;
  out.reserve(static_cast<std::size_t>(c.size()));
  for (Eigen::Index m = 0; m < c.size(); ++m)
    out.emplace_back(PauliLabel{dm.start, word_from_index(static_cast<std::size_t>(m), dm.length)}, c(m));
  return out;
}

/// Real-coefficient operator sum over every length-k window of an N-site chain:
///   O = sum_{i, m} c_{i,m} P_m^{(i)},   P_m^{(i)} acting on sites i .. i+k-1.
/// Storage is dense: one 4^k coefficient vector per window. Addition and
/// scaling keep the operator window-local.
class WindowOperatorSum {
 public:
  WindowOperatorSum() = default;
  WindowOperatorSum(int n_sites, int window_size) : n_(n_sites), k_(window_size) {
    if (window_size < 1 || n_sites < window_size)
      throw dimension_error("WindowOperatorSum: need 1 <= k <= N");
    if (window_size > 16) throw limit_error("WindowOperatorSum: window size too large");
    coeffs_.assign(static_cast<std::size_t>(n_ - k_ + 1),
                   RealVector::Zero(static_cast<Eigen::Index>(ipow(4, static_cast<std::size_t>(k_)))));
  }

  int n_sites() const { return n_; }
  int window_size() const { return k_; }
  int n_windows() const { return static_cast<int>(coeffs_.size()); }
  int n_labels() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.front().size()); }

  const RealVector& window(int i) const { return coeffs_.at(static_cast<std::size_t>(i)); }
  RealVector& window(int i) { return coeffs_.at(static_cast<std::size_t>(i)); }
  const std::vector<RealVector>& windows() const { return coeffs_; }

  double coeff(int i, std::string_view word) const { return window(i)(static_cast<Eigen::Index>(checked_index(word))); }
  void set(int i, std::string_view word, double value) { window(i)(static_cast<Eigen::Index>(checked_index(word))) = value; }
  void add(int i, std::string_view word, double value) { window(i)(static_cast<Eigen::Index>(checked_index(word))) += value; }

  WindowOperatorSum& operator+=(const WindowOperatorSum& o) {
    check_shape(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  WindowOperatorSum& operator-=(const WindowOperatorSum& o) {
    check_shape(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  WindowOperatorSum& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  /// this += alpha * o
  WindowOperatorSum& axpy(double alpha, const WindowOperatorSum& o) {
    check_shape(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += alpha * o.coeffs_[i];
    return *this;
  }

  friend WindowOperatorSum operator+(WindowOperatorSum a, const WindowOperatorSum& b) { return a += b; }
  friend WindowOperatorSum operator-(WindowOperatorSum a, const WindowOperatorSum& b) { return a -= b; }
  friend WindowOperatorSum operator*(double s, WindowOperatorSum a) { return a *= s; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, c.cwiseAbs().maxCoeff());
    return m;
  }

  bool same_shape(const WindowOperatorSum& o) const { return n_ == o.n_ && k_ == o.k_; }

  friend bool operator==(const WindowOperatorSum& a, const WindowOperatorSum& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      if (a.coeffs_[i] != b.coeffs_[i]) return false;
    return true;
  }

 private:
  std::size_t checked_index(std::string_view word) const {
    if (static_cast<int>(word.size()) != k_)
      throw dimension_error("Pauli word length " + std::to_string(word.size()) + " != window size " + std::to_string(k_));
    return word_index(word);
  }
  void check_shape(const WindowOperatorSum& o) const {
    if (!same_shape(o)) throw dimension_error("WindowOperatorSum shapes differ");
  }

  int n_ = 0;
  int k_ = 0;
  std::vector<RealVector> coeffs_;
};

/// Per-window expectation values, laid out like WindowOperatorSum coefficients.
using WindowTable = std::vector<RealVector>;

/// tr[|psi><psi| P_m^{(i)}] for every window i and every word m, computed from
/// the window reductions (linear in N).
inline WindowTable window_expectations(const MPS& mps, int k) {
  for (int d : mps.phys_dims())
    if (d != 2) throw dimension_error("window_expectations: Pauli bases are implemented for qubits only");
  WindowTable out;
  for (const auto& dm : reduced_densities(mps, k)) out.push_back(pauli_coefficients(dm.rho));
  return out;
}

inline WindowTable expectations(const MPS& mps, const WindowOperatorSum& opsum) {
  if (static_cast<int>(mps.size()) != opsum.n_sites()) throw dimension_error("expectations: chain length mismatch");
  return window_expectations(mps, opsum.window_size());
}

/// <psi|O|psi> for a window operator sum, from precomputed expectations.
inline double operator_value(const WindowOperatorSum& opsum, const WindowTable& table) {
  double v = 0.0;
  for (int i = 0; i < opsum.n_windows(); ++i) v += opsum.window(i).dot(table.at(static_cast<std::size_t>(i)));
  return v;
}

/// Dense 2^N x 2^N matrix of a window operator sum (oracle support).
inline Matrix apply_opsum_dense(const WindowOperatorSum& opsum) {
  const int n = opsum.n_sites();
  if (n >= 62) throw limit_error("apply_opsum_dense: chain too long");
  const auto dim = std::uint64_t{1} << n;
  require_dense(static_cast<std::size_t>(dim), "apply_opsum_dense");
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const int k = opsum.window_size();
  for (int i = 0; i < opsum.n_windows(); ++i) {
    const RealVector& c = opsum.window(i);
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      if (c(m) == 0.0) continue;
      const auto mask = pauli_mask(word_from_index(static_cast<std::size_t>(m), k), n, i);
      for (std::uint64_t r = 0; r < dim; ++r)
        h(static_cast<Eigen::Index>(r ^ mask.flip), static_cast<Eigen::Index>(r)) += c(m) * mask.phase(r);
    }
  }
  return h;
}

/// <psi| op^{(x) N} |psi> for a single-site operator applied on every site
/// (e.g. the X string), by transfer contraction.
inline cplx string_expectation(const MPS& mps, const Matrix& op) {
  Matrix e = Matrix::Ones(1, 1);
  for (const auto& t : mps.sites()) {
    if (static_cast<Eigen::Index>(t.size()) != op.rows()) throw dimension_error("string_expectation: operator size");
    Matrix next = Matrix::Zero(t.front().cols(), t.front().cols());
    for (std::size_t a = 0; a < t.size(); ++a)
      for (std::size_t b = 0; b < t.size(); ++b) {
        const cplx o = op(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (o != cplx(0.0)) next.noalias() += o * (t[a].adjoint() * e * t[b]);
      }
    e = std::move(next);
  }
  return e(0, 0) / overlap(mps, mps);
}

}  // namespace mpstomo
