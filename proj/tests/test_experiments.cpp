#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mpstomo/experiments.hpp"
#include "mpstomo/io.hpp"

using namespace mpstomo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mpstomo_exp_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code(int status) {
#ifdef WEXITSTATUS
  return WEXITSTATUS(status);
#else
  return status;
#endif
}

int cli(const std::string& args, const fs::path& err = {}) {
  std::string cmd = std::string(MPSTOMO_CLI_PATH) + " " + args + " > /dev/null";
  cmd += err.empty() ? " 2> /dev/null" : " 2> " + err.string();
  return exit_code(std::system(cmd.c_str()));
}

ExperimentConfig small_random() {
  auto c = default_config(ExperimentKind::random);
  c.sizes = {4, 5};
  c.trials = 3;
  return c;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Config, DefaultsValidate) {
  for (auto k : {ExperimentKind::ising, ExperimentKind::random, ExperimentKind::wstate}) EXPECT_NO_THROW(default_config(k).validate());
}

TEST(Config, InvalidValuesRejected) {
  auto c = default_config(ExperimentKind::ising);
  c.sizes = {};
  EXPECT_THROW(c.validate(), schema_error);
  c = default_config(ExperimentKind::ising);
  c.sizes = {2};
  EXPECT_THROW(c.validate(), schema_error);
  c = default_config(ExperimentKind::wstate);
  c.sigmas = {-0.1};
  EXPECT_THROW(c.validate(), schema_error);
  c = default_config(ExperimentKind::custom);
  EXPECT_THROW(c.validate(), schema_error);
}

TEST(Config, JsonRoundTripAndUnknownField) {
  auto c = default_config(ExperimentKind::wstate);
  c.delta = 0.002;
  const auto j = to_json(c);
  const auto back = experiment_config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  auto bad = j;
  bad["bogus"] = 1;
  EXPECT_THROW(experiment_config_from_json(bad), schema_error);
}

TEST(Config, DefaultStepShrinksWithChainLength) {
  EXPECT_GT(default_delta(6), default_delta(10));
  EXPECT_NEAR(default_delta(6), 0.25 / 125.0, 1e-15);
}

TEST(Seeds, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 1, 6, 0, 0), derive_seed(1, 1, 6, 0, 1));
  EXPECT_NE(derive_seed(1, 1, 6, 0, 0), derive_seed(2, 1, 6, 0, 0));
  EXPECT_EQ(derive_seed(7, 3, 8, 1, 2), derive_seed(7, 3, 8, 1, 2));
}

TEST(ParallelFor, ThreadCountDoesNotChangeOutput) {
  auto c = small_random();
  const auto one = run_experiment(c);
  c.threads = 3;
  const auto three = run_experiment(c);
  EXPECT_EQ(one.table.str(), three.table.str());
}

TEST(Random, RowCountAndColumns) {
  const auto out = run_experiment(small_random());
  EXPECT_EQ(out.table.rows.size(), 6u);
  EXPECT_EQ(out.table.header.front(), "N");
  for (const auto& r : out.table.rows) EXPECT_EQ(r.back(), "ok");
}

TEST(Ising, TraceRowsPerSize) {
  auto c = default_config(ExperimentKind::ising);
  c.sizes = {4};
  c.iterations = 20;
  c.record_stride = 5;
  c.bond_dim = 4;
  const auto out = run_experiment(c);
  // From zero the iterations are numbered 1..20.
  EXPECT_EQ(out.table.rows.size(), 4u);
  EXPECT_EQ(out.table.rows.back()[1], "20");
  EXPECT_EQ(out.summary["per_N"].size(), 1u);
}

TEST(WState, NoiselessGetsOneTrial) {
  auto c = default_config(ExperimentKind::wstate);
  c.sizes = {4};
  c.iterations = 30;
  c.trials = 2;
  const auto out = run_experiment(c);
  EXPECT_EQ(out.table.rows.size(), 1u + 2u + 2u);
}

TEST(Determinism, RerunIsByteIdentical) {
  auto c = small_random();
  const auto a = scratch("det_a"), b = scratch("det_b");
  c.output_dir = a.string();
  write_experiment(c, run_experiment(c));
  c.output_dir = b.string();
  write_experiment(c, run_experiment(c));
  EXPECT_EQ(slurp(a / "random.csv"), slurp(b / "random.csv"));
  // The summary embeds the output directory; compare everything else.
  auto ja = read_json_file((a / "random_summary.json").string());
  auto jb = read_json_file((b / "random_summary.json").string());
  ja["config"].erase("output_dir");
  jb["config"].erase("output_dir");
  EXPECT_EQ(ja.dump(), jb.dump());
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const auto dir = scratch("cli_usage");
  EXPECT_EQ(cli("frobnicate", dir / "err.txt"), 2);
  const std::string err = slurp(dir / "err.txt");
  const auto line = err.substr(err.rfind('{'));
  const auto j = json::parse(line);
  EXPECT_EQ(j["error"], "usage");
}

TEST(Cli, MissingFileIsJsonError) {
  const auto dir = scratch("cli_missing");
  EXPECT_EQ(cli("simulate --state " + (dir / "nope.json").string() + " --out " + (dir / "o.json").string(), dir / "err.txt"), 1);
  const auto j = json::parse(slurp(dir / "err.txt"));
  EXPECT_TRUE(j.contains("error"));
  EXPECT_TRUE(j.contains("message"));
}

TEST(Cli, ClusterPipelineCertifies) {
  const auto dir = scratch("cli_pipeline");
  const auto p = [&](const char* f) { return (dir / f).string(); };
  ASSERT_EQ(cli("gen-state --kind cluster -N 8 --out " + p("cluster.json")), 0);
  ASSERT_EQ(cli("simulate --state " + p("cluster.json") + " --window-size 4 --out " + p("data4.json")), 0);
  ASSERT_EQ(cli("simulate --state " + p("cluster.json") + " --window-size 3 --out " + p("data3.json")), 0);
  ASSERT_EQ(cli("reconstruct-svt --data " + p("data3.json") + " --bond-dim 4 --iters 300 --stride 50 --reference " +
                p("cluster.json") + " --out " + p("svt.json")),
            0);
  const auto svt = read_json_file(p("svt.json"));
  write_json_file(svt["best_state"], p("estimate.json"));
  ASSERT_EQ(cli("certify --estimate " + p("estimate.json") + " --data " + p("data4.json") + " --k 2 --out " + p("cert.json")), 0);
  const auto cert = read_json_file(p("cert.json"));
  EXPECT_GE(cert["fidelity_bound"].get<double>(), 0.99);
  EXPECT_NEAR(cert["gap_bound"].get<double>(), 1.0, 1e-6);
}

TEST(Cli, DisentangleRoundTrip) {
  const auto dir = scratch("cli_dis");
  const auto p = [&](const char* f) { return (dir / f).string(); };
  ASSERT_EQ(cli("gen-state --kind random -N 6 --bond-dim 2 --seed 4 --out " + p("psi.json")), 0);
  ASSERT_EQ(cli("reconstruct-disentangle --state " + p("psi.json") + " --kappa 2 --out " + p("c.json") + " --mps-out " + p("phi.json")), 0);
  EXPECT_GE(fidelity(load_mps(p("phi.json")), load_mps(p("psi.json"))), 1.0 - 1e-8);
  EXPECT_LE(load_circuit(p("c.json")).eps.front(), 1e-10);
}

TEST(Cli, ExperimentOutputsMatchLibrary) {
  const auto dir = scratch("cli_exp");
  ASSERT_EQ(cli("experiment random --N 4 5 --trials 3 --out-dir " + dir.string()), 0);
  EXPECT_EQ(count_lines(slurp(dir / "random.csv")), 7u);
  EXPECT_EQ(slurp(dir / "random.csv"), run_experiment(small_random()).table.str());
}
