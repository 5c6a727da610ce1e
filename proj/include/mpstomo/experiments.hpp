#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mpstomo/core.hpp"
#include "mpstomo/eigensolver.hpp"
#include "mpstomo/io.hpp"
#include "mpstomo/rng.hpp"
#include "mpstomo/states.hpp"
#include "mpstomo/svt.hpp"
#include "mpstomo/tomo.hpp"

namespace mpstomo {

enum class ExperimentKind { ising, random, wstate, custom };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ising: return "ising";
    case ExperimentKind::random: return "random";
    case ExperimentKind::wstate: return "wstate";
    case ExperimentKind::custom: return "custom";
  }
  return "?";
}

inline ExperimentKind experiment_kind(const std::string& s) {
  if (s == "ising") return ExperimentKind::ising;
  if (s == "random") return ExperimentKind::random;
  if (s == "wstate") return ExperimentKind::wstate;
  if (s == "custom") return ExperimentKind::custom;
  throw schema_error("unknown experiment '" + s + "'");
}

/// Seed tags mixed into derive_seed so the three protocols never share streams.
enum class SeedTag : std::uint64_t { ising = 0x15, random = 0x2A, wstate = 0x3F, custom = 0x54 };

/// Constant step used when none is configured: 0.25 / (N - w + 1)^3.
/// The stable step of the iteration shrinks with the cube of the window count.
inline double default_delta(int n_sites, int window_size = 2) {
  const double windows = std::max(1, n_sites - window_size + 1);
  return 0.25 / (windows * windows * windows);
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::ising;
  std::vector<int> sizes;
  int iterations = 0;
  int record_stride = 0;
  int bond_dim = 0;
  std::vector<double> sigmas;
  int trials = 0;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  std::optional<double> delta;
  std::optional<std::string> init;
  int window_size = 2;
  int threads = 1;
  int max_sweeps = 2;
  std::string dataset;  ///< custom only

  void validate() const {
    if (sizes.empty() && experiment != ExperimentKind::custom) throw schema_error("experiment: N list is empty");
    for (int n : sizes)
      if (n < window_size + 1) throw schema_error("experiment: every N must exceed the window size");
    if (iterations < 1 || record_stride < 1 || bond_dim < 1 || trials < 1 || threads < 1 || max_sweeps < 1)
      throw schema_error("experiment: all counts must be >= 1");
    if (window_size < 1) throw schema_error("experiment: window_size must be >= 1");
    for (double s : sigmas)
      if (!(s >= 0.0)) throw schema_error("experiment: noise sigmas must be >= 0");
    if (delta && !(*delta > 0.0)) throw schema_error("experiment: delta must be > 0");
    if (init && *init != "zero" && *init != "R") throw schema_error("experiment: init must be 'zero' or 'R'");
    if (experiment == ExperimentKind::custom && dataset.empty()) throw schema_error("experiment custom: 'dataset' is required");
  }

  SvtInit svt_init() const {
    if (init) return *init == "R" ? SvtInit::R : SvtInit::zero;
    return experiment == ExperimentKind::wstate ? SvtInit::R : SvtInit::zero;
  }

  double step(int n_sites) const { return delta ? *delta : default_delta(n_sites, window_size); }
};

/// Desk-scale defaults for each protocol.
inline ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::ising:
      c.sizes = {6, 8, 10};
      c.iterations = 2000;
      c.record_stride = 50;
      c.bond_dim = 8;
      c.sigmas = {0.0};
      c.trials = 1;
      break;
    case ExperimentKind::random:
      c.sizes = {6, 8, 10, 12};
      c.iterations = 5;
      c.record_stride = 1;
      c.bond_dim = 8;
      c.sigmas = {0.0};
      c.trials = 100;
      break;
    case ExperimentKind::wstate:
      c.sizes = {4, 6, 8, 10, 12, 14, 16, 18, 20};
      c.iterations = 4000;
      c.record_stride = 100;
      c.bond_dim = 2;
      c.sigmas = {0.0, 0.005, 0.01};
      c.trials = 30;
      break;
    case ExperimentKind::custom:
      c.iterations = 1000;
      c.record_stride = 10;
      c.bond_dim = 8;
      c.sigmas = {0.0};
      c.trials = 1;
      break;
  }
  return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"experiment", to_string(c.experiment)},
                      {"N", c.sizes},
                      {"iterations", c.iterations},
                      {"record_stride", c.record_stride},
                      {"bond_dim", c.bond_dim},
                      {"sigmas", c.sigmas},
                      {"trials", c.trials},
                      {"seed", c.seed},
                      {"output_dir", c.output_dir},
                      {"window_size", c.window_size},
                      {"threads", c.threads},
                      {"max_sweeps", c.max_sweeps},
                      {"init", to_string(c.svt_init())}};
  j["delta"] = c.delta ? nlohmann::json(*c.delta) : nlohmann::json("default");
  if (!c.dataset.empty()) j["dataset"] = c.dataset;
  return j;
}

/// Reads a config document; absent fields take the protocol defaults and
/// unknown fields are rejected.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  return detail::parse_guard("experiment config", [&] {
    if (!j.is_object()) throw schema_error("experiment config must be a JSON object");
    static const std::vector<std::string> known = {"experiment", "N",       "iterations", "record_stride", "bond_dim",
                                                   "sigmas",     "trials",  "seed",       "output_dir",    "delta",
                                                   "init",       "window_size", "threads", "max_sweeps",   "dataset"};
    for (const auto& [key, _] : j.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw schema_error("experiment config: unknown field '" + key + "'");
    ExperimentConfig c = default_config(experiment_kind(j.at("experiment").get<std::string>()));
    if (j.contains("N")) c.sizes = j["N"].get<std::vector<int>>();
    if (j.contains("iterations")) c.iterations = j["iterations"].get<int>();
    if (j.contains("record_stride")) c.record_stride = j["record_stride"].get<int>();
    if (j.contains("bond_dim")) c.bond_dim = j["bond_dim"].get<int>();
    if (j.contains("sigmas")) c.sigmas = j["sigmas"].get<std::vector<double>>();
    if (j.contains("trials")) c.trials = j["trials"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("delta") && !(j["delta"].is_string() && j["delta"] == "default")) c.delta = j["delta"].get<double>();
    if (j.contains("init")) c.init = j["init"].get<std::string>();
    if (j.contains("window_size")) c.window_size = j["window_size"].get<int>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("max_sweeps")) c.max_sweeps = j["max_sweeps"].get<int>();
    if (j.contains("dataset")) c.dataset = j["dataset"].get<std::string>();
    c.validate();
    return c;
  });
}

// ---- table output -------------------------------------------------------------

/// A CSV table with a frozen header. Numbers are written with fixed formats so
/// equal inputs give equal bytes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string str() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
  }
};

inline std::string fmt_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline std::string fmt_int(long long v) { return std::to_string(v); }

// ---- work pool ----------------------------------------------------------------

/// Runs job(i) for i in [0, count) on `threads` workers. Callers write results
/// into slot i, so output order never depends on completion order.
inline void parallel_for(int count, int threads, const std::function<void(int)>& job) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) job(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---- shared pieces ------------------------------------------------------------

struct GroundState {
  MPS state;
  double energy = 0.0;
  bool converged = false;
  std::optional<double> oracle_energy;
};

/// Variational ground state; for dense-reachable N the energy is checked
/// against exact diagonalization.
inline GroundState variational_ground_state(const WindowOperatorSum& h, std::uint64_t seed) {
  SweepConfig sc;
  sc.bond_dim = 16;
  sc.max_sweeps = 40;
  sc.tol = 1e-12;
  sc.extremum = Extremum::min;
  sc.seed = seed;
  auto r = extremal_eigenstate(h, sc);
  GroundState g{r.state, r.eigenvalue, r.converged, std::nullopt};
  if (ipow(2, static_cast<std::size_t>(h.n_sites())) <= 1024) g.oracle_energy = dense_ground_state(h).energy;
  return g;
}

inline SVTConfig svt_config_for(const ExperimentConfig& c, int n_sites, std::uint64_t seed) {
  SVTConfig s;
  s.bond_dim = c.bond_dim;
  s.n_iters = c.iterations;
  s.delta.constant = c.step(n_sites);
  s.init = c.svt_init();
  s.eigensolver = default_svt_sweeps(c.bond_dim);
  s.eigensolver.max_sweeps = c.max_sweeps;
  s.eigensolver.seed = seed;
  s.record_stride = c.record_stride;
  return s;
}

struct ExperimentOutput {
  CsvTable table;
  nlohmann::json summary;
};

inline double clamp01(double f) { return std::clamp(f, 0.0, 1.0); }

// ---- Ising ---------------------------------------------------------------------

/// Transverse-field Ising chains: one SVT run per N on noiseless data, the
/// recorded trace becomes the rows.
inline ExperimentOutput run_ising_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Job {
    GroundState ground;
    ReconstructionResult result;
    double delta = 0.0;
  };
  std::vector<Job> jobs(cfg.sizes.size());
  parallel_for(static_cast<int>(jobs.size()), cfg.threads, [&](int idx) {
    const int n = cfg.sizes[static_cast<std::size_t>(idx)];
    const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedTag::ising), n, 0, 0);
    Job& job = jobs[static_cast<std::size_t>(idx)];
    job.ground = variational_ground_state(ising_hamiltonian(n), seed);
    const auto ds = simulate_reductions(job.ground.state, cfg.window_size, "ising");
    const auto svt = svt_config_for(cfg, n, seed);
    job.delta = svt.delta.constant;
    job.result = run(ds, svt, job.ground.state);
  });

  ExperimentOutput out;
  out.table.header = {"N", "n", "fidelity", "infidelity", "merit", "eigenvalue", "converged"};
  nlohmann::json per_n = nlohmann::json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const int n = cfg.sizes[i];
    const auto& job = jobs[i];
    for (const auto& e : job.result.trace) {
      const double f = clamp01(e.fidelity.value_or(0.0));
      out.table.rows.push_back({fmt_int(n), fmt_int(e.iteration), fmt_real(f), fmt_real(1.0 - f), fmt_real(e.merit),
                                fmt_real(e.eigenvalue), e.converged ? "1" : "0"});
    }
    const auto& last = job.result.trace.back();
    nlohmann::json s = {{"N", n},
                        {"delta", job.delta},
                        {"ground_energy", job.ground.energy},
                        {"ground_converged", job.ground.converged},
                        {"final_fidelity", clamp01(last.fidelity.value_or(0.0))},
                        {"best_iteration", job.result.best_iteration},
                        {"best_fidelity", clamp01(job.result.best_fidelity.value_or(0.0))},
                        {"unconverged_solves", job.result.unconverged_solves}};
    if (job.ground.oracle_energy) s["oracle_energy_error"] = std::abs(job.ground.energy - *job.ground.oracle_energy);
    per_n.push_back(std::move(s));
  }
  out.summary = {{"experiment", "ising"}, {"config", to_json(cfg)}, {"per_N", per_n}};
  return out;
}

// ---- random nearest-neighbour Hamiltonians --------------------------------------

inline ExperimentOutput run_random_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Row {
    int n = 0, trial = 0;
    std::uint64_t seed = 0;
    double fidelity = std::nan(""), merit = std::nan("");
    bool converged = false;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  for (int n : cfg.sizes)
    for (int t = 0; t < cfg.trials; ++t)
      rows.push_back({n, t, derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedTag::random), n, 0, t)});

  parallel_for(static_cast<int>(rows.size()), cfg.threads, [&](int idx) {
    Row& row = rows[static_cast<std::size_t>(idx)];
    try {
      const auto ground = variational_ground_state(random_nn_hamiltonian(row.n, row.seed), row.seed);
      const auto ds = simulate_reductions(ground.state, cfg.window_size, "random");
      auto svt = svt_config_for(cfg, row.n, row.seed);
      const auto res = run(ds, svt, ground.state);
      const auto& last = res.trace.back();
      row.fidelity = clamp01(last.fidelity.value_or(0.0));
      row.merit = last.merit;
      row.converged = ground.converged && res.unconverged_solves == 0;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
      std::replace(row.status.begin(), row.status.end(), ',', ';');
    }
  });

  ExperimentOutput out;
  out.table.header = {"N", "trial", "seed", "fidelity", "infidelity", "merit", "converged", "status"};
  nlohmann::json per_n = nlohmann::json::array();
  for (int n : cfg.sizes) {
    double sum = 0.0;
    int ok = 0, failed = 0;
    for (const auto& r : rows) {
      if (r.n != n) continue;
      if (r.status == "ok") {
        sum += 1.0 - r.fidelity;
        ++ok;
      } else {
        ++failed;
      }
    }
    per_n.push_back({{"N", n},
                     {"trials", ok},
                     {"failed", failed},
                     {"mean_infidelity", ok ? nlohmann::json(sum / ok) : nlohmann::json(nullptr)}});
  }
  for (const auto& r : rows)
    out.table.rows.push_back({fmt_int(r.n), fmt_int(r.trial), std::to_string(r.seed), fmt_real(r.fidelity),
                              fmt_real(1.0 - r.fidelity), fmt_real(r.merit), r.converged ? "1" : "0", r.status});
  out.summary = {{"experiment", "random"}, {"config", to_json(cfg)}, {"per_N", per_n}};
  return out;
}

// ---- W states -------------------------------------------------------------------

inline ExperimentOutput run_wstate_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Row {
    int n = 0, trial = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    int best_iteration = -1, unconverged = 0;
    double fidelity = std::nan(""), merit = std::nan("");
    std::string status = "ok";
  };
  std::vector<Row> rows;
  for (int n : cfg.sizes)
    for (std::size_t si = 0; si < cfg.sigmas.size(); ++si) {
      const int trials = cfg.sigmas[si] == 0.0 ? 1 : cfg.trials;
      for (int t = 0; t < trials; ++t)
        rows.push_back({n, t, cfg.sigmas[si], derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedTag::wstate), n, si, t)});
    }

  parallel_for(static_cast<int>(rows.size()), cfg.threads, [&](int idx) {
    Row& row = rows[static_cast<std::size_t>(idx)];
    try {
      const MPS target = w_state(row.n);
      auto ds = simulate_reductions(target, cfg.window_size, "wstate");
      if (row.sigma > 0.0) ds = add_noise(ds, row.sigma, row.seed);
      const auto res = run(ds, svt_config_for(cfg, row.n, row.seed), target);
      row.best_iteration = res.best_iteration;
      row.fidelity = clamp01(res.best_fidelity.value_or(0.0));
      row.merit = res.best_merit;
      row.unconverged = res.unconverged_solves;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
      std::replace(row.status.begin(), row.status.end(), ',', ';');
    }
  });

  ExperimentOutput out;
  out.table.header = {"N", "sigma", "trial", "seed", "best_iteration", "fidelity", "merit", "unconverged", "status"};
  for (const auto& r : rows)
    out.table.rows.push_back({fmt_int(r.n), fmt_real(r.sigma), fmt_int(r.trial), std::to_string(r.seed),
                              fmt_int(r.best_iteration), fmt_real(r.fidelity), fmt_real(r.merit), fmt_int(r.unconverged),
                              r.status});
  nlohmann::json groups = nlohmann::json::array();
  for (int n : cfg.sizes)
    for (double sigma : cfg.sigmas) {
      double sum = 0.0;
      int ok = 0, failed = 0;
      for (const auto& r : rows) {
        if (r.n != n || r.sigma != sigma) continue;
        if (r.status == "ok") {
          sum += r.fidelity;
          ++ok;
        } else {
          ++failed;
        }
      }
      groups.push_back({{"N", n},
                        {"sigma", sigma},
                        {"delta", cfg.step(n)},
                        {"trials", ok},
                        {"failed", failed},
                        {"mean_fidelity", ok ? nlohmann::json(sum / ok) : nlohmann::json(nullptr)}});
    }
  out.summary = {{"experiment", "wstate"}, {"config", to_json(cfg)}, {"groups", groups}};
  return out;
}

// ---- custom dataset -------------------------------------------------------------

inline ExperimentOutput run_custom_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto ds = load_dataset(cfg.dataset);
  const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedTag::custom), ds.n_sites, 0, 0);
  const auto res = run(ds, svt_config_for(cfg, ds.n_sites, seed));
  ExperimentOutput out;
  out.table.header = {"N", "n", "merit", "eigenvalue", "converged"};
  for (const auto& e : res.trace)
    out.table.rows.push_back(
        {fmt_int(ds.n_sites), fmt_int(e.iteration), fmt_real(e.merit), fmt_real(e.eigenvalue), e.converged ? "1" : "0"});
  out.summary = {{"experiment", "custom"},
                 {"config", to_json(cfg)},
                 {"best_iteration", res.best_iteration},
                 {"best_merit", res.best_merit},
                 {"best_state", to_json(res.best_state)}};
  return out;
}

inline ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::ising: return run_ising_experiment(cfg);
    case ExperimentKind::random: return run_random_experiment(cfg);
    case ExperimentKind::wstate: return run_wstate_experiment(cfg);
    case ExperimentKind::custom: return run_custom_experiment(cfg);
  }
  throw schema_error("unknown experiment");
}

struct WrittenFiles {
  std::string csv;
  std::string summary;
};

/// Writes <output_dir>/<experiment>.csv and <experiment>_summary.json.
inline WrittenFiles write_experiment(const ExperimentConfig& cfg, const ExperimentOutput& out) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const std::string stem = (fs::path(cfg.output_dir) / to_string(cfg.experiment)).string();
  WrittenFiles files{stem + ".csv", stem + "_summary.json"};
  std::ofstream csv(files.csv, std::ios::binary);
  if (!csv) throw error("cannot open " + files.csv + " for writing");
  csv << out.table.str();
  write_json_file(out.summary, files.summary);
  return files;
}

}  // namespace mpstomo
