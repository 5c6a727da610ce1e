#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpstomo/certify.hpp"
#include "mpstomo/core.hpp"
#include "mpstomo/disentangle.hpp"
#include "mpstomo/mps.hpp"
#include "mpstomo/svt.hpp"
#include "mpstomo/tomo.hpp"

namespace mpstomo {

using json = nlohmann::json;

inline constexpr int kMpsSchemaVersion = 1;
inline constexpr int kCircuitSchemaVersion = 1;
inline constexpr int kCertificateSchemaVersion = 1;
inline constexpr int kResultSchemaVersion = 1;

namespace detail {

inline json complex_list(const cplx* data, Eigen::Index count) {
  json out = json::array();
  for (Eigen::Index i = 0; i < count; ++i) out.push_back({data[i].real(), data[i].imag()});
  return out;
}

inline cplx complex_entry(const json& j) {
  if (!j.is_array() || j.size() != 2) throw schema_error("complex entries must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

// Row-major [re, im] list of a matrix.
inline json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back({m(r, c).real(), m(r, c).imag()});
  return out;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols)
    throw schema_error("matrix entry count does not match its shape");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_entry(j[static_cast<std::size_t>(r * cols + c)]);
  return m;
}

inline void check_header(const json& j, const char* schema, int version) {
  if (!j.is_object() || j.value("schema", "") != schema)
    throw schema_error(std::string("expected a ") + schema + " document");
  const int v = j.at("version").get<int>();
  if (v != version)
    throw schema_error(std::string("unsupported ") + schema + " schema version " + std::to_string(v) + " (expected " +
                       std::to_string(version) + ")");
}

template <class F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw schema_error(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace detail

// ---- MPS --------------------------------------------------------------------

/// Site tensors are D_l x d x D_r, flattened row-major as [re, im] pairs.
inline json to_json(const MPS& mps) {
  json tensors = json::array();
  for (const auto& t : mps.sites()) {
    const auto dl = t.front().rows(), dr = t.front().cols();
    json flat = json::array();
    for (Eigen::Index a = 0; a < dl; ++a)
      for (const auto& m : t)
        for (Eigen::Index b = 0; b < dr; ++b) flat.push_back({m(a, b).real(), m(a, b).imag()});
    tensors.push_back(std::move(flat));
  }
  return {{"schema", "mpstomo.mps"},  {"version", kMpsSchemaVersion}, {"N", mps.size()},
          {"phys_dims", mps.phys_dims()}, {"bond_dims", mps.bond_dims()}, {"gauge", to_string(mps.gauge())},
          {"tensors", tensors}};
}

inline MPS mps_from_json(const json& j) {
  return detail::parse_guard("MPS", [&] {
    detail::check_header(j, "mpstomo.mps", kMpsSchemaVersion);
    const auto n = j.at("N").get<std::size_t>();
    const auto phys = j.at("phys_dims").get<std::vector<int>>();
    const auto bonds = j.at("bond_dims").get<std::vector<int>>();
    const auto& tensors = j.at("tensors");
    if (phys.size() != n || bonds.size() != n + 1 || tensors.size() != n)
      throw structural_error("MPS document: list lengths disagree with N");
    std::vector<SiteTensor> sites;
    for (std::size_t i = 0; i < n; ++i) {
      const int dl = bonds[i], d = phys[i], dr = bonds[i + 1];
      const auto& flat = tensors[i];
      if (static_cast<long>(flat.size()) != static_cast<long>(dl) * d * dr)
        throw structural_error("MPS document: site " + std::to_string(i) + " has the wrong entry count");
      SiteTensor t(static_cast<std::size_t>(d), Matrix(dl, dr));
      std::size_t idx = 0;
      for (int a = 0; a < dl; ++a)
        for (int s = 0; s < d; ++s)
          for (int b = 0; b < dr; ++b) t[static_cast<std::size_t>(s)](a, b) = detail::complex_entry(flat[idx++]);
      sites.push_back(std::move(t));
    }
    const std::string gauge = j.at("gauge").get<std::string>();
    if (gauge != "none" && gauge != "left_canonical") throw schema_error("unknown gauge '" + gauge + "'");
    MPS mps(std::move(sites));
    if (gauge == "left_canonical") {
      if (gauge_defect(mps) > 1e-10) throw structural_error("MPS document claims left_canonical but is not");
      return MPS(mps.sites(), Gauge::left_canonical);
    }
    return mps;
  });
}

// ---- disentangling circuit --------------------------------------------------------

inline json to_json(const DisentangleCircuit& c) {
  json unitaries = json::array();
  for (const auto& u : c.unitaries) unitaries.push_back(detail::matrix_to_json(u));
  return {{"schema", "mpstomo.circuit"},
          {"version", kCircuitSchemaVersion},
          {"N", c.n_sites},
          {"d", c.d},
          {"kappa", c.kappa},
          {"anchors", c.anchors},
          {"unitaries", unitaries},
          {"eta", detail::complex_list(c.eta.data(), c.eta.size())},
          {"eps", c.eps},
          {"truncation_weights", c.truncation_weights},
          {"error_bound", error_bound(c)}};
}

inline DisentangleCircuit circuit_from_json(const json& j) {
  return detail::parse_guard("circuit", [&] {
    detail::check_header(j, "mpstomo.circuit", kCircuitSchemaVersion);
    DisentangleCircuit c;
    c.n_sites = j.at("N").get<int>();
    c.d = j.at("d").get<int>();
    c.kappa = j.at("kappa").get<int>();
    c.anchors = j.at("anchors").get<std::vector<int>>();
    c.eps = j.at("eps").get<std::vector<double>>();
    c.truncation_weights = j.value("truncation_weights", std::vector<double>{});
    const auto dim = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(c.d), static_cast<std::size_t>(c.kappa)));
    for (const auto& u : j.at("unitaries")) c.unitaries.push_back(detail::matrix_from_json(u, dim, dim));
    const auto& eta = j.at("eta");
    c.eta.resize(static_cast<Eigen::Index>(eta.size()));
    for (std::size_t i = 0; i < eta.size(); ++i) c.eta(static_cast<Eigen::Index>(i)) = detail::complex_entry(eta[i]);
    if (c.unitaries.size() != c.anchors.size() || c.eps.size() != c.anchors.size())
      throw structural_error("circuit document: unitary, anchor and eps counts differ");
    return c;
  });
}

// ---- certificate --------------------------------------------------------------

inline json to_json(const InjectivityReport& r) {
  return {{"k", r.k}, {"block_starts", r.block_starts}, {"ranks", r.ranks}, {"full_ranks", r.full_ranks},
          {"injective", r.injective}, {"all_injective", r.all_injective}};
}

inline json certificate_json(const ParentHamiltonian& ph, const GapCertificate& gap, const FidelityBound& fb) {
  json windows = json::array();
  for (std::size_t n = 0; n < ph.starts.size(); ++n)
    windows.push_back({{"start", ph.starts[n]},
                       {"range_dim", ph.range_dims[n]},
                       {"energy", fb.energies.empty() ? 0.0 : fb.energies[n]},
                       {"eps", fb.eps.empty() ? 0.0 : fb.eps[n]}});
  json pairs = json::array();
  for (const auto& p : gap.pairs) pairs.push_back({{"n", p.n}, {"m", p.m}, {"gamma", p.gamma}});
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"schema", "mpstomo.certificate"},
          {"version", kCertificateSchemaVersion},
          {"N", ph.n_sites},
          {"k", ph.k},
          {"window_length", ph.window_length()},
          {"injectivity", to_json(ph.injectivity)},
          {"windows", windows},
          {"gamma_table", pairs},
          {"gamma", gap.gamma},
          {"gap_bound", gap.bound},
          {"gap_vacuous", gap.vacuous},
          {"fidelity_bound", finite_or_null(fb.value)},
          {"fidelity_bound_reported", fb.reported},
          {"vacuous", fb.vacuous},
          {"unique_ground_state", fb.unique_ground_state}};
}

// ---- SVT result ---------------------------------------------------------------------

inline json to_json(const WindowOperatorSum& op) {
  json windows = json::array();
  for (const auto& c : op.windows()) windows.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  return {{"N", op.n_sites()}, {"window_size", op.window_size()}, {"coefficients", windows}};
}

inline json to_json(const SVTConfig& cfg) {
  json delta = cfg.delta.sequence.empty() ? json(cfg.delta.constant) : json(cfg.delta.sequence);
  return {{"bond_dim", cfg.bond_dim},
          {"n_iters", cfg.n_iters},
          {"delta", delta},
          {"init", to_string(cfg.init)},
          {"record_stride", cfg.record_stride},
          {"eigensolver",
           {{"max_sweeps", cfg.eigensolver.max_sweeps},
            {"tol", cfg.eigensolver.tol},
            {"seed", cfg.eigensolver.seed},
            {"two_site", cfg.eigensolver.two_site}}}};
}

inline json to_json(const ReconstructionResult& r, const SVTConfig& cfg) {
  json trace = json::array();
  for (const auto& e : r.trace) {
    json row = {{"n", e.iteration}, {"eigenvalue", e.eigenvalue}, {"merit", e.merit}, {"converged", e.converged}};
    if (e.fidelity) row["fidelity"] = *e.fidelity;
    trace.push_back(std::move(row));
  }
  json out = {{"schema", "mpstomo.svt_result"},
              {"version", kResultSchemaVersion},
              {"config", to_json(cfg)},
              {"best_iteration", r.best_iteration},
              {"best_merit", r.best_merit},
              {"unconverged_solves", r.unconverged_solves},
              {"trace", trace},
              {"final_Y", to_json(r.final_Y)},
              {"best_state", to_json(r.best_state)}};
  if (r.best_fidelity) out["best_fidelity"] = *r.best_fidelity;
  return out;
}

// ---- files --------------------------------------------------------------------------

inline void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot open " + path + " for writing");
  out << j.dump(1) << '\n';
  if (!out) throw error("failed writing " + path);
}

inline MPS load_mps(const std::string& path) { return mps_from_json(read_json_file(path)); }
inline DisentangleCircuit load_circuit(const std::string& path) { return circuit_from_json(read_json_file(path)); }

}  // namespace mpstomo
