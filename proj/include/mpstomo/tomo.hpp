#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpstomo/core.hpp"
#include "mpstomo/mps.hpp"
#include "mpstomo/pauli.hpp"
#include "mpstomo/rng.hpp"
#include "mpstomo/states.hpp"

namespace mpstomo {

inline constexpr int kDatasetSchemaVersion = 1;

struct DatasetMetadata {
  std::string source;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
};

/// Local tomographic data: for every window i of w sites the expectations
/// p_{m,i} = tr[sigma_i P_m] over all 4^w words (identity first), plus a
/// trace-norm error radius eps_i per window.
struct TomographyDataset {
  int n_sites = 0;
  int d = 2;
  int window_size = 0;
  std::vector<RealVector> coeffs;
  std::vector<double> eps;
  DatasetMetadata meta;

  int n_windows() const { return static_cast<int>(coeffs.size()); }

  /// Reassembled window estimate sigma_i = 2^-w sum_m p_{m,i} P_m.
  Matrix sigma(int i) const { return reassemble(coeffs.at(static_cast<std::size_t>(i))); }

  void validate() const {
    if (d != 2) throw structural_error("dataset: only qubit chains are supported");
    if (window_size < 1 || window_size > n_sites) throw structural_error("dataset: window size outside [1, N]");
    if (n_windows() != n_sites - window_size + 1)
      throw structural_error("dataset: expected " + std::to_string(n_sites - window_size + 1) + " windows, found " +
                             std::to_string(n_windows()));
    if (eps.size() != coeffs.size()) throw structural_error("dataset: eps list length differs from window count");
    const auto labels = static_cast<Eigen::Index>(ipow(4, static_cast<std::size_t>(window_size)));
    const double norm_tol = 1e-9 + 6.0 * meta.noise_sigma;
    for (int i = 0; i < n_windows(); ++i) {
      const RealVector& c = coeffs[static_cast<std::size_t>(i)];
      if (c.size() != labels)
        throw structural_error("dataset: window " + std::to_string(i) + " has " + std::to_string(c.size()) +
                               " coefficients, expected " + std::to_string(labels));
      if (!c.allFinite()) throw structural_error("dataset: non-finite coefficient in window " + std::to_string(i));
      if (std::abs(c(0) - 1.0) > norm_tol)
        throw structural_error("dataset: identity coefficient of window " + std::to_string(i) + " is not 1");
      if (!(eps[static_cast<std::size_t>(i)] >= 0.0)) throw structural_error("dataset: negative error radius");
    }
  }
};

inline TomographyDataset dataset_from_densities(const std::vector<Matrix>& windows, int n_sites, int w,
                                                std::string source) {
  TomographyDataset ds;
  ds.n_sites = n_sites;
  ds.window_size = w;
  ds.meta.source = std::move(source);
  for (const auto& rho : windows) ds.coeffs.push_back(pauli_coefficients(rho));
  ds.eps.assign(ds.coeffs.size(), 0.0);
  ds.validate();
  return ds;
}

/// Exact window expectations of a pure MPS target; all eps are 0.
inline TomographyDataset simulate_reductions(const MPS& target, int w, std::string source = "mps") {
  if (w < 1 || static_cast<std::size_t>(w) > target.size()) throw dimension_error("simulate_reductions: need 1 <= w <= N");
  std::vector<Matrix> windows;
  for (auto& dm : reduced_densities(target, w)) windows.push_back(std::move(dm.rho));
  auto ds = dataset_from_densities(windows, static_cast<int>(target.size()), w, std::move(source));
  ds.meta.params = {{"window_size", w}};
  return ds;
}

/// Partial trace of a dense pure state onto [start, start + w).
inline Matrix partial_trace(const DenseState& s, int start, int w) {
  const auto left = ipow(2, static_cast<std::size_t>(start));
  const auto mid = ipow(2, static_cast<std::size_t>(w));
  const auto right = ipow(2, static_cast<std::size_t>(s.n_sites - start - w));
  Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(mid), static_cast<Eigen::Index>(mid));
  for (std::size_t l = 0; l < left; ++l) {
    Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> block(
        s.amplitudes.data() + static_cast<Eigen::Index>(l * mid * right), static_cast<Eigen::Index>(right),
        static_cast<Eigen::Index>(mid), Eigen::OuterStride<>(static_cast<Eigen::Index>(right)));
    // block(r, sigma) = psi[l, sigma, r]
    rho.noalias() += block.transpose() * block.conjugate();
  }
  return rho / rho.trace().real();
}

/// Partial trace of a dense (possibly mixed) N-qubit density matrix.
inline Matrix partial_trace(const Matrix& rho_full, int n_sites, int start, int w) {
  const auto left = ipow(2, static_cast<std::size_t>(start));
  const auto mid = ipow(2, static_cast<std::size_t>(w));
  const auto right = ipow(2, static_cast<std::size_t>(n_sites - start - w));
  Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(mid), static_cast<Eigen::Index>(mid));
  for (std::size_t l = 0; l < left; ++l)
    for (std::size_t r = 0; r < right; ++r)
      for (std::size_t a = 0; a < mid; ++a)
        for (std::size_t b = 0; b < mid; ++b)
          rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
              rho_full(static_cast<Eigen::Index>((l * mid + a) * right + r), static_cast<Eigen::Index>((l * mid + b) * right + r));
  return rho;
}

inline TomographyDataset simulate_reductions(const DenseState& target, int w, std::string source = "dense") {
  if (w < 1 || w > target.n_sites) throw dimension_error("simulate_reductions: need 1 <= w <= N");
  std::vector<Matrix> windows;
  for (int a = 0; a + w <= target.n_sites; ++a) windows.push_back(partial_trace(target, a, w));
  auto ds = dataset_from_densities(windows, target.n_sites, w, std::move(source));
  ds.meta.params = {{"window_size", w}};
  return ds;
}

inline TomographyDataset simulate_reductions(const Matrix& rho_full, int n_sites, int w, std::string source = "dense-mixed") {
  std::vector<Matrix> windows;
  for (int a = 0; a + w <= n_sites; ++a) windows.push_back(partial_trace(rho_full, n_sites, a, w));
  auto ds = dataset_from_densities(windows, n_sites, w, std::move(source));
  ds.meta.params = {{"window_size", w}};
  return ds;
}

/// Adds independent N(0, sigma^2) draws to every non-identity coefficient,
/// window by window and label by label from one Rng(seed). Each eps_i grows by
/// the trace norm of the perturbation it received.
inline TomographyDataset add_noise(const TomographyDataset& ds, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw dimension_error("add_noise: sigma must be >= 0");
  TomographyDataset out = ds;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (int i = 0; i < out.n_windows(); ++i) {
    RealVector& c = out.coeffs[static_cast<std::size_t>(i)];
    RealVector delta = RealVector::Zero(c.size());
    for (Eigen::Index m = 1; m < c.size(); ++m) delta(m) = sigma * rng.normal();
    c += delta;
    out.eps[static_cast<std::size_t>(i)] += trace_norm_hermitian(reassemble(delta));
  }
  out.meta.noise_sigma = std::hypot(ds.meta.noise_sigma, sigma);
  out.meta.seed = seed;
  out.meta.params["noise"] = {{"sigma", sigma}, {"seed", seed}};
  return out;
}

/// eps_i = || sigma_i - rho_i ||_tr against the exact reductions of `target`.
inline std::vector<double> epsilon_against_oracle(const TomographyDataset& ds, const MPS& target) {
  if (static_cast<int>(target.size()) != ds.n_sites) throw dimension_error("epsilon_against_oracle: chain length mismatch");
  const auto exact = reduced_densities(target, ds.window_size);
  std::vector<double> out;
  for (int i = 0; i < ds.n_windows(); ++i)
    out.push_back(trace_norm_hermitian(ds.sigma(i) - exact[static_cast<std::size_t>(i)].rho));
  return out;
}

inline std::vector<double> epsilon_against_oracle(const TomographyDataset& ds, const DenseState& target) {
  if (target.n_sites != ds.n_sites) throw dimension_error("epsilon_against_oracle: chain length mismatch");
  std::vector<double> out;
  for (int i = 0; i < ds.n_windows(); ++i)
    out.push_back(trace_norm_hermitian(ds.sigma(i) - partial_trace(target, i, ds.window_size)));
  return out;
}

// ---- JSON -----------------------------------------------------------------

inline nlohmann::json to_json(const TomographyDataset& ds) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& l : enumerate_window_basis(ds.window_size)) labels.push_back(l.word);
  nlohmann::json windows = nlohmann::json::array();
  for (int i = 0; i < ds.n_windows(); ++i) {
    const auto& c = ds.coeffs[static_cast<std::size_t>(i)];
    windows.push_back({{"start", i},
                       {"coefficients", std::vector<double>(c.data(), c.data() + c.size())},
                       {"epsilon", ds.eps[static_cast<std::size_t>(i)]}});
  }
  return {{"schema", "mpstomo.dataset"},
          {"version", kDatasetSchemaVersion},
          {"N", ds.n_sites},
          {"d", ds.d},
          {"window_size", ds.window_size},
          {"labels", labels},
          {"windows", windows},
          {"metadata",
           {{"source", ds.meta.source},
            {"noise_sigma", ds.meta.noise_sigma},
            {"seed", ds.meta.seed},
            {"params", ds.meta.params}}}};
}

inline TomographyDataset dataset_from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema", "") != "mpstomo.dataset") throw schema_error("not a dataset file (schema field)");
    const int version = j.at("version").get<int>();
    if (version != kDatasetSchemaVersion)
      throw schema_error("unsupported dataset schema version " + std::to_string(version) + " (expected " +
                         std::to_string(kDatasetSchemaVersion) + ")");
    TomographyDataset ds;
    ds.n_sites = j.at("N").get<int>();
    ds.d = j.at("d").get<int>();
    ds.window_size = j.at("window_size").get<int>();
    int expected_start = 0;
    for (const auto& w : j.at("windows")) {
      if (w.at("start").get<int>() != expected_start++) throw structural_error("dataset: windows out of order");
      const auto c = w.at("coefficients").get<std::vector<double>>();
      ds.coeffs.push_back(Eigen::Map<const RealVector>(c.data(), static_cast<Eigen::Index>(c.size())));
      ds.eps.push_back(w.at("epsilon").get<double>());
    }
    const auto& meta = j.at("metadata");
    ds.meta.source = meta.value("source", "");
    ds.meta.noise_sigma = meta.value("noise_sigma", 0.0);
    ds.meta.seed = meta.value("seed", std::uint64_t{0});
    ds.meta.params = meta.value("params", nlohmann::json::object());
    ds.validate();
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw schema_error(std::string("malformed dataset: ") + e.what());
  }
}

inline void save(const TomographyDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot open " + path + " for writing");
  out << to_json(ds).dump(1) << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw schema_error(path + ": " + e.what());
  }
}

inline TomographyDataset load_dataset(const std::string& path) { return dataset_from_json(read_json_file(path)); }

}  // namespace mpstomo
