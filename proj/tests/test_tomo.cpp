#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "mpstomo/states.hpp"
#include "mpstomo/tomo.hpp"
#include "oracle.hpp"

using namespace mpstomo;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mpstomo_test_" + name)).string();
}

double coeff(const TomographyDataset& ds, int window, const std::string& word) {
  return ds.coeffs[static_cast<std::size_t>(window)](static_cast<Eigen::Index>(word_index(word)));
}

}  // namespace

TEST(Simulate, ProductStateSingleSiteWindows) {
  const auto ds = simulate_reductions(product_state({0, 0, 0, 0}), 1);
  ASSERT_EQ(ds.n_windows(), 4);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(coeff(ds, i, "I"), 1.0, 1e-15);
    EXPECT_NEAR(coeff(ds, i, "Z"), 1.0, 1e-15);
    EXPECT_NEAR(coeff(ds, i, "X"), 0.0, 1e-15);
    EXPECT_NEAR(coeff(ds, i, "Y"), 0.0, 1e-15);
    EXPECT_EQ(ds.eps[static_cast<std::size_t>(i)], 0.0);
  }
}

TEST(Simulate, IsingGroundCounts) {
  const auto g = dense_ground_state(ising_hamiltonian(8));
  const auto ds = simulate_reductions(g.state, 2);
  EXPECT_EQ(ds.n_windows(), 7);
  for (const auto& c : ds.coeffs) EXPECT_EQ(c.size(), 16);
  const Vector& v = g.state.amplitudes;
  for (int i = 0; i < 7; ++i)
    for (const auto& label : enumerate_window_basis(2))
      EXPECT_NEAR(coeff(ds, i, label.word), v.dot(oracle::pauli_string(label.word, i, 8) * v).real(), 1e-10);
}

TEST(Simulate, WStateXXCoefficient) {
  const auto ds = simulate_reductions(w_state(4), 2);
  EXPECT_NEAR(coeff(ds, 1, "XX"), 0.5, 1e-12);
}

TEST(Simulate, OracleEquivalenceAndPsdReassembly) {
  for (int n : {5, 8, 10}) {
    const MPS psi = random_mps(n, 3, 31 + static_cast<std::uint64_t>(n));
    const Vector v = mps_amplitudes(psi);
    const auto ds = simulate_reductions(psi, 3);
    for (int i = 0; i < ds.n_windows(); ++i) {
      const Matrix sigma = ds.sigma(i);
      EXPECT_LT((sigma - oracle::reduce(v, n, i, 3)).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_NEAR(sigma.trace().real(), 1.0, 1e-10);
      EXPECT_GT(eigh_descending(sigma).values.minCoeff(), -1e-10);
    }
  }
}

TEST(Simulate, MixedDenseStateMatchesOracle) {
  const Vector a = oracle::w_state(5), b = oracle::ghz_state(5, 0.2);
  const Matrix rho = 0.7 * a * a.adjoint() + 0.3 * b * b.adjoint();
  const auto ds = simulate_reductions(rho, 5, 2);
  for (int i = 0; i < 4; ++i) EXPECT_LT((ds.sigma(i) - oracle::reduce_mixed(rho, 5, i, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Noise, ZeroSigmaIsIdentity) {
  const auto ds = simulate_reductions(w_state(5), 2);
  const auto noisy = add_noise(ds, 0.0, 3);
  for (int i = 0; i < ds.n_windows(); ++i) EXPECT_EQ(noisy.coeffs[static_cast<std::size_t>(i)], ds.coeffs[static_cast<std::size_t>(i)]);
}

TEST(Noise, PerturbsNonIdentityOnlyAndReproducible) {
  const auto ds = simulate_reductions(w_state(6), 2);
  for (double sigma : {0.005, 0.01}) {
    const auto a = add_noise(ds, sigma, 17);
    const auto b = add_noise(ds, sigma, 17);
    const auto c = add_noise(ds, sigma, 18);
    EXPECT_EQ(a.meta.noise_sigma, sigma);
    double sum_sq = 0.0;
    int count = 0;
    for (int i = 0; i < ds.n_windows(); ++i) {
      const auto& ai = a.coeffs[static_cast<std::size_t>(i)];
      EXPECT_EQ(ai(0), ds.coeffs[static_cast<std::size_t>(i)](0));
      EXPECT_EQ(ai, b.coeffs[static_cast<std::size_t>(i)]);
      EXPECT_NE(ai, c.coeffs[static_cast<std::size_t>(i)]);
      const RealVector diff = ai - ds.coeffs[static_cast<std::size_t>(i)];
      sum_sq += diff.tail(15).squaredNorm();
      count += 15;
      EXPECT_GT(a.eps[static_cast<std::size_t>(i)], 0.0);
    }
    EXPECT_NEAR(std::sqrt(sum_sq / count), sigma, 0.35 * sigma);
  }
}

TEST(Epsilon, NoiselessIsZero) {
  const MPS psi = random_mps(6, 2, 8);
  for (double e : epsilon_against_oracle(simulate_reductions(psi, 2), psi)) EXPECT_LE(e, 1e-10);
}

TEST(Epsilon, SingleCoefficientPerturbation) {
  const MPS psi = w_state(4);
  auto ds = simulate_reductions(psi, 2);
  const double delta = 0.03;
  ds.coeffs[1](static_cast<Eigen::Index>(word_index("XZ"))) += delta;
  const auto eps = epsilon_against_oracle(ds, psi);
  // ||delta P / 2^w||_tr = delta * 2^w / 2^w = delta for a Pauli word.
  EXPECT_NEAR(eps[1], delta, 1e-12);
  EXPECT_NEAR(eps[1], oracle::trace_norm(delta * oracle::pauli_string("XZ", 0, 2) / 4.0), 1e-12);
  EXPECT_LE(eps[0], 1e-12);
}

TEST(Epsilon, NoisyDatasetMatchesDenseComputation) {
  const MPS psi = random_mps(8, 3, 2);
  const auto noisy = add_noise(simulate_reductions(psi, 2), 0.01, 5);
  const auto eps = epsilon_against_oracle(noisy, psi);
  const auto eps_dense = epsilon_against_oracle(noisy, to_dense(psi));
  const Vector v = mps_amplitudes(psi);
  for (int i = 0; i < noisy.n_windows(); ++i) {
    const double dense = oracle::trace_norm(noisy.sigma(i) - oracle::reduce(v, 8, i, 2));
    EXPECT_NEAR(eps[static_cast<std::size_t>(i)], dense, 1e-12);
    EXPECT_NEAR(eps_dense[static_cast<std::size_t>(i)], dense, 1e-12);
    EXPECT_NEAR(noisy.eps[static_cast<std::size_t>(i)], dense, 1e-12);
  }
}

TEST(DatasetIo, RoundTripIsBitExact) {
  const auto ds = add_noise(simulate_reductions(random_mps(6, 2, 4), 3), 0.01, 9);
  const std::string path = temp_path("roundtrip.json");
  save(ds, path);
  const auto back = load_dataset(path);
  EXPECT_EQ(back.n_sites, ds.n_sites);
  EXPECT_EQ(back.window_size, ds.window_size);
  EXPECT_EQ(back.eps, ds.eps);
  for (int i = 0; i < ds.n_windows(); ++i) EXPECT_EQ(back.coeffs[static_cast<std::size_t>(i)], ds.coeffs[static_cast<std::size_t>(i)]);
  EXPECT_EQ(back.meta.noise_sigma, ds.meta.noise_sigma);
  std::remove(path.c_str());
}

TEST(DatasetIo, WrongWindowCountIsStructuralError) {
  auto j = to_json(simulate_reductions(w_state(4), 2));
  j["windows"].erase(j["windows"].size() - 1);
  EXPECT_THROW(dataset_from_json(j), structural_error);
}

TEST(DatasetIo, FutureVersionIsExplicitError) {
  auto j = to_json(simulate_reductions(w_state(4), 2));
  j["version"] = 2;
  try {
    dataset_from_json(j);
    FAIL() << "expected a schema error";
  } catch (const schema_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(DatasetIo, MalformedFileIsSchemaError) {
  const std::string path = temp_path("malformed.json");
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_dataset(path), schema_error);
  std::remove(path.c_str());
}

TEST(DatasetValidation, Invariants) {
  auto ds = simulate_reductions(w_state(4), 2);
  ds.eps[0] = -1.0;
  EXPECT_THROW(ds.validate(), structural_error);
  ds = simulate_reductions(w_state(4), 2);
  ds.coeffs[0](0) = 1.5;
  EXPECT_THROW(ds.validate(), structural_error);
}
