// mpstomo command-line front end.
//
// Every subcommand reads and writes the JSON documents described in docs/.
// On failure a one-line JSON object {"error": kind, "message": ...} goes to
// stderr and the exit status is nonzero (2 for usage errors, 1 otherwise).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpstomo/certify.hpp"
#include "mpstomo/disentangle.hpp"
#include "mpstomo/experiments.hpp"
#include "mpstomo/io.hpp"
#include "mpstomo/states.hpp"
#include "mpstomo/svt.hpp"
#include "mpstomo/tomo.hpp"

using namespace mpstomo;
using nlohmann::json;

namespace {

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

void report_ok(json info) {
  info["status"] = "ok";
  std::cout << info.dump() << '\n';
}

struct GenStateOpts {
  std::string kind;
  int n = 0;
  double phase = 0.0;
  int bond = 2;
  std::uint64_t seed = 1;
  std::string digits;
  std::string out;
};

MPS generate_state(const GenStateOpts& o) {
  if (o.kind == "w") return w_state(o.n);
  if (o.kind == "ghz") return ghz_state(o.n, o.phase);
  if (o.kind == "cluster") return cluster_state(o.n);
  if (o.kind == "random") return random_mps(o.n, o.bond, o.seed);
  if (o.kind == "product") {
    std::vector<int> bits;
    for (char c : o.digits) {
      if (c != '0' && c != '1') throw dimension_error("gen-state: --digits must be a 0/1 string");
      bits.push_back(c - '0');
    }
    if (bits.empty()) bits.assign(static_cast<std::size_t>(o.n), 0);
    return canonicalize_left(product_state(bits));
  }
  if (o.kind == "ising-ground") return variational_ground_state(ising_hamiltonian(o.n), o.seed).state;
  if (o.kind == "random-ground") return variational_ground_state(random_nn_hamiltonian(o.n, o.seed), o.seed).state;
  throw dimension_error("gen-state: unknown kind '" + o.kind + "'");
}

struct SvtOpts {
  std::string data, out, reference;
  int bond_dim = 8;
  int iters = 1000;
  std::optional<double> delta;
  std::string init = "zero";
  std::uint64_t seed = 1;
  int stride = 10;
  int max_sweeps = 2;
};

struct ExperimentOpts {
  std::string kind, config, out_dir;
  std::vector<int> sizes;
  std::vector<double> sigmas;
  std::optional<int> iterations, trials, threads, bond_dim, stride;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpstomo: matrix product state tomography and certification"};
  app.require_subcommand(1);
  app.fallthrough(false);

  GenStateOpts gen;
  auto* gen_cmd = app.add_subcommand("gen-state", "write a factory state as MPS JSON");
  gen_cmd->add_option("--kind", gen.kind, "w | ghz | cluster | random | product | ising-ground | random-ground")->required();
  gen_cmd->add_option("-N,--sites", gen.n, "chain length")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--phase", gen.phase, "GHZ relative phase");
  gen_cmd->add_option("--bond-dim", gen.bond, "bond dimension of random states");
  gen_cmd->add_option("--seed", gen.seed, "seed of random states and Hamiltonians");
  gen_cmd->add_option("--digits", gen.digits, "product state bit string");
  gen_cmd->add_option("--out", gen.out, "output MPS JSON")->required();

  std::string sim_state, sim_out;
  int sim_w = 2;
  auto* sim_cmd = app.add_subcommand("simulate", "exact window reductions of an MPS");
  sim_cmd->add_option("--state", sim_state, "MPS JSON")->required();
  sim_cmd->add_option("--window-size", sim_w, "window size w")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", sim_out, "output dataset JSON")->required();

  std::string noise_data, noise_out;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 1;
  auto* noise_cmd = app.add_subcommand("noise", "add Gaussian noise to a dataset");
  noise_cmd->add_option("--data", noise_data, "dataset JSON")->required();
  noise_cmd->add_option("--sigma", noise_sigma, "standard deviation")->required()->check(CLI::NonNegativeNumber);
  noise_cmd->add_option("--seed", noise_seed, "noise seed");
  noise_cmd->add_option("--out", noise_out, "output dataset JSON")->required();

  SvtOpts svt;
  auto* svt_cmd = app.add_subcommand("reconstruct-svt", "MPS singular value thresholding reconstruction");
  svt_cmd->add_option("--data", svt.data, "dataset JSON")->required();
  svt_cmd->add_option("--bond-dim", svt.bond_dim, "bond dimension D")->check(CLI::PositiveNumber);
  svt_cmd->add_option("--iters", svt.iters, "iterations n")->check(CLI::PositiveNumber);
  svt_cmd->add_option("--delta", svt.delta, "constant step (default 0.25 / windows^3)");
  svt_cmd->add_option("--init", svt.init, "zero | R")->check(CLI::IsMember({"zero", "R"}));
  svt_cmd->add_option("--seed", svt.seed, "eigensolver seed");
  svt_cmd->add_option("--stride", svt.stride, "trace recording stride")->check(CLI::PositiveNumber);
  svt_cmd->add_option("--max-sweeps", svt.max_sweeps, "sweeps per eigensolve")->check(CLI::PositiveNumber);
  svt_cmd->add_option("--reference", svt.reference, "reference MPS JSON for fidelity tracking");
  svt_cmd->add_option("--out", svt.out, "output result JSON")->required();

  std::string dis_state, dis_out, dis_mps_out;
  int dis_kappa = 2;
  auto* dis_cmd = app.add_subcommand("reconstruct-disentangle", "sequential disentangling circuit of an MPS");
  dis_cmd->add_option("--state", dis_state, "MPS JSON")->required();
  dis_cmd->add_option("--kappa", dis_kappa, "unitary support kappa")->check(CLI::PositiveNumber);
  dis_cmd->add_option("--out", dis_out, "output circuit JSON")->required();
  dis_cmd->add_option("--mps-out", dis_mps_out, "optional MPS JSON of the reconstructed state");

  std::string cert_est, cert_data, cert_out;
  int cert_k = 2;
  double cert_rel_tol = 1e-10;
  auto* cert_cmd = app.add_subcommand("certify", "parent-Hamiltonian fidelity certificate");
  cert_cmd->add_option("--estimate", cert_est, "estimate MPS JSON")->required();
  cert_cmd->add_option("--data", cert_data, "dataset JSON")->required();
  cert_cmd->add_option("--k", cert_k, "injectivity block length k")->check(CLI::PositiveNumber);
  cert_cmd->add_option("--rel-tol", cert_rel_tol, "relative rank tolerance");
  cert_cmd->add_option("--out", cert_out, "output certificate JSON")->required();

  ExperimentOpts ex;
  auto* ex_cmd = app.add_subcommand("experiment", "run an experiment grid and emit CSV plus summary JSON");
  ex_cmd->add_option("kind", ex.kind, "ising | random | wstate | custom")
      ->required()
      ->check(CLI::IsMember({"ising", "random", "wstate", "custom"}));
  ex_cmd->add_option("--config", ex.config, "experiment config JSON");
  ex_cmd->add_option("--out-dir", ex.out_dir, "output directory");
  ex_cmd->add_option("--N", ex.sizes, "chain lengths");
  ex_cmd->add_option("--sigmas", ex.sigmas, "noise levels");
  ex_cmd->add_option("--iterations", ex.iterations, "SVT iterations");
  ex_cmd->add_option("--trials", ex.trials, "trials per grid point");
  ex_cmd->add_option("--threads", ex.threads, "worker threads");
  ex_cmd->add_option("--bond-dim", ex.bond_dim, "bond dimension");
  ex_cmd->add_option("--stride", ex.stride, "trace recording stride");
  ex_cmd->add_option("--seed", ex.seed, "master seed");
  ex_cmd->add_option("--delta", ex.delta, "constant step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << '\n';
    std::string message = e.what();
    if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr)
      message = std::string("unknown subcommand '") + argv[1] + "'";
    report_error("usage", message);
    return 2;
  }

  try {
    if (*gen_cmd) {
      const MPS state = generate_state(gen);
      write_json_file(to_json(state), gen.out);
      report_ok({{"out", gen.out}, {"N", state.size()}, {"max_bond", state.max_bond()}});
    } else if (*sim_cmd) {
      const auto ds = simulate_reductions(load_mps(sim_state), sim_w, sim_state);
      save(ds, sim_out);
      report_ok({{"out", sim_out}, {"windows", ds.n_windows()}});
    } else if (*noise_cmd) {
      const auto ds = add_noise(load_dataset(noise_data), noise_sigma, noise_seed);
      save(ds, noise_out);
      report_ok({{"out", noise_out}, {"noise_sigma", ds.meta.noise_sigma}});
    } else if (*svt_cmd) {
      const auto ds = load_dataset(svt.data);
      SVTConfig cfg;
      cfg.bond_dim = svt.bond_dim;
      cfg.n_iters = svt.iters;
      cfg.delta.constant = svt.delta ? *svt.delta : default_delta(ds.n_sites, ds.window_size);
      cfg.init = svt.init == "R" ? SvtInit::R : SvtInit::zero;
      cfg.eigensolver = default_svt_sweeps(svt.bond_dim);
      cfg.eigensolver.max_sweeps = svt.max_sweeps;
      cfg.eigensolver.seed = svt.seed;
      cfg.record_stride = svt.stride;
      std::optional<MPS> reference;
      if (!svt.reference.empty()) reference = load_mps(svt.reference);
      const auto res = run(ds, cfg, reference);
      write_json_file(to_json(res, cfg), svt.out);
      json info = {{"out", svt.out}, {"best_iteration", res.best_iteration}, {"best_merit", res.best_merit}};
      if (res.best_fidelity) info["best_fidelity"] = *res.best_fidelity;
      report_ok(info);
    } else if (*dis_cmd) {
      const auto circ = run_disentangle(load_mps(dis_state), dis_kappa);
      write_json_file(to_json(circ), dis_out);
      if (!dis_mps_out.empty()) write_json_file(to_json(circuit_to_mps(circ)), dis_mps_out);
      report_ok({{"out", dis_out}, {"error_bound", error_bound(circ)}});
    } else if (*cert_cmd) {
      const auto ph = parent_hamiltonian(load_mps(cert_est), cert_k, cert_rel_tol);
      const auto gap = gap_lower_bound(ph);
      const auto fb = fidelity_bound(ph, gap, load_dataset(cert_data));
      write_json_file(certificate_json(ph, gap, fb), cert_out);
      report_ok({{"out", cert_out}, {"gap_bound", gap.bound}, {"fidelity_bound", fb.reported}, {"vacuous", fb.vacuous}});
    } else if (*ex_cmd) {
      ExperimentConfig cfg = default_config(experiment_kind(ex.kind));
      if (!ex.config.empty()) {
        json j = read_json_file(ex.config);
        if (j.contains("experiment") && j["experiment"] != ex.kind)
          throw schema_error("config experiment '" + j["experiment"].get<std::string>() + "' does not match '" + ex.kind + "'");
        j["experiment"] = ex.kind;
        cfg = experiment_config_from_json(j);
      }
      if (!ex.out_dir.empty()) cfg.output_dir = ex.out_dir;
      if (!ex.sizes.empty()) cfg.sizes = ex.sizes;
      if (!ex.sigmas.empty()) cfg.sigmas = ex.sigmas;
      if (ex.iterations) cfg.iterations = *ex.iterations;
      if (ex.trials) cfg.trials = *ex.trials;
      if (ex.threads) cfg.threads = *ex.threads;
      if (ex.bond_dim) cfg.bond_dim = *ex.bond_dim;
      if (ex.stride) cfg.record_stride = *ex.stride;
      if (ex.seed) cfg.seed = *ex.seed;
      if (ex.delta) cfg.delta = *ex.delta;
      cfg.validate();
      const auto out = run_experiment(cfg);
      const auto files = write_experiment(cfg, out);
      report_ok({{"csv", files.csv}, {"summary", files.summary}, {"rows", out.table.rows.size()}});
    }
  } catch (const mpstomo::error& e) {
    report_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("error", e.what());
    return 1;
  }
  return 0;
}
