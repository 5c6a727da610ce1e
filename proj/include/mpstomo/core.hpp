#pragma once

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mpstomo {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Error hierarchy. Everything derives from mpstomo::error so callers can
// catch a single type; the CLI maps the concrete kind to its JSON error code.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class structural_error : public error {
 public:
  using error::error;
  const char* kind() const noexcept override { return "structural"; }
};

class dimension_error : public error {
 public:
  using error::error;
  const char* kind() const noexcept override { return "dimension"; }
};

class limit_error : public error {
 public:
  using error::error;
  const char* kind() const noexcept override { return "limit"; }
};

class schema_error : public error {
 public:
  using error::error;
  const char* kind() const noexcept override { return "schema"; }
};

class numeric_error : public error {
 public:
  using error::error;
  const char* kind() const noexcept override { return "numeric"; }
};

class data_support_error : public error {
 public:
  using error::error;
  const char* kind() const noexcept override { return "insufficient_data_support"; }
};

namespace detail {
inline std::size_t& dense_limit_storage() {
  static std::size_t limit = [] {
    if (const char* env = std::getenv("MPSTOMO_DENSE_LIMIT")) {
      char* end = nullptr;
      auto v = std::strtoull(env, &end, 10);
      if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return static_cast<std::size_t>(1) << 12;
  }();
  return limit;
}
}  // namespace detail

/// Maximum number of amplitudes (d^w) a dense window or state may have.
/// Defaults to 2^12, overridable through MPSTOMO_DENSE_LIMIT or at runtime.
inline std::size_t dense_limit() { return detail::dense_limit_storage(); }
inline void set_dense_limit(std::size_t limit) { detail::dense_limit_storage() = limit; }

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp--) r *= base;
  return r;
}

inline void require_dense(std::size_t dim, const char* what) {
  if (dim > dense_limit()) {
    throw limit_error(std::string(what) + ": dimension " + std::to_string(dim) +
                      " exceeds dense limit " + std::to_string(dense_limit()));
  }
}

/// Hermitian eigen-decomposition with eigenvalues sorted descending.
struct EigenPairs {
  RealVector values;
  Matrix vectors;
};

inline EigenPairs eigh_descending(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Eigen::Index n = m.rows();
  EigenPairs out{RealVector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

inline double trace_norm_hermitian(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

inline double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace mpstomo
