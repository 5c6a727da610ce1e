#include <gtest/gtest.h>

#include "mpstomo/certify.hpp"
#include "mpstomo/io.hpp"
#include "mpstomo/states.hpp"
#include "oracle.hpp"

using namespace mpstomo;

namespace {

RealVector dense_spectrum(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double dense_gap(const Matrix& h) {
  const RealVector e = dense_spectrum(h);
  for (Eigen::Index i = 1; i < e.size(); ++i)
    if (e(i) > e(0) + 1e-8) return e(i) - e(0);
  return 0.0;
}

}  // namespace

TEST(Injectivity, RandomBondTwoIsInjective) {
  const auto rep = injectivity_check(random_mps(8, 2, 3), 2);
  EXPECT_TRUE(rep.all_injective);
  EXPECT_EQ(rep.block_starts.size(), rep.ranks.size());
}

TEST(Injectivity, WStateIsNotInjective) {
  // Products of I and |0><1| span only two of the four matrix directions.
  const auto rep = injectivity_check(canonicalize_left(w_state(8)), 2);
  EXPECT_FALSE(rep.all_injective);
}

TEST(Injectivity, GhzIsNotInjective) {
  const auto rep = injectivity_check(canonicalize_left(ghz_state(8, 0.0)), 2);
  EXPECT_FALSE(rep.all_injective);
}

TEST(Injectivity, ProductStateIsTrivial) {
  const auto rep = injectivity_check(canonicalize_left(product_state({0, 1, 0, 1})), 1);
  EXPECT_TRUE(rep.all_injective);
  for (int r : rep.full_ranks) EXPECT_EQ(r, 1);
}

TEST(ParentHamiltonian, ProductStateProjector) {
  const auto ph = parent_hamiltonian(canonicalize_left(product_state({0, 0, 0, 0})), 1);
  Matrix expected = Matrix::Identity(4, 4);
  expected(0, 0) = 0.0;
  for (const auto& p : ph.projectors) EXPECT_LT((p - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ParentHamiltonian, ProjectorAlgebraProperty) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ph = parent_hamiltonian(random_mps(8, 2, seed), 2);
    for (std::size_t n = 0; n < ph.projectors.size(); ++n) {
      const Matrix& p = ph.projectors[n];
      EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT(hermiticity_defect(p), 1e-12);
      EXPECT_NEAR(p.trace().real(), 16.0 - ph.range_dims[n], 1e-9);
    }
  }
}

TEST(ParentHamiltonian, AnnihilatesItsState) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MPS psi = random_mps(8, 2, 10 + seed);
    const auto ph = parent_hamiltonian(psi, 2);
    EXPECT_LT(std::abs(parent_energy(ph, psi)), 1e-10);
    const Vector v = mps_amplitudes(psi);
    EXPECT_LT((dense_hamiltonian(ph) * v).norm(), 1e-9);
  }
}

TEST(ParentHamiltonian, ClusterEightGapOne) {
  const auto ph = parent_hamiltonian(cluster_state(8), 2);
  const RealVector e = dense_spectrum(dense_hamiltonian(ph));
  EXPECT_NEAR(e(0), 0.0, 1e-10);
  EXPECT_NEAR(e(1), 1.0, 1e-9);
  EXPECT_TRUE(ph.injectivity.all_injective);
}

TEST(ParentHamiltonian, GhzHasTwoDimensionalGroundSpace) {
  const auto ph = parent_hamiltonian(canonicalize_left(ghz_state(8, 0.0)), 2);
  const RealVector e = dense_spectrum(dense_hamiltonian(ph));
  EXPECT_NEAR(e(0), 0.0, 1e-10);
  EXPECT_NEAR(e(1), 0.0, 1e-10);
  EXPECT_GT(e(2), 1e-3);
}

TEST(ParentHamiltonian, RejectsNonCanonicalAndBadK) {
  EXPECT_THROW(parent_hamiltonian(w_state(6), 4), dimension_error);
  EXPECT_THROW(parent_hamiltonian(canonicalize_left(w_state(6)), 0), dimension_error);
}

TEST(GapBound, ProductStateIsExact) {
  const auto ph = parent_hamiltonian(canonicalize_left(product_state({0, 0, 0, 0, 0})), 1);
  const auto gap = gap_lower_bound(ph);
  for (const auto& p : gap.pairs) EXPECT_NEAR(p.gamma, 0.0, 1e-12);
  EXPECT_NEAR(gap.bound, 1.0, 1e-12);
  EXPECT_FALSE(gap.vacuous);
}

TEST(GapBound, ClusterPositiveAndBelowDenseGap) {
  const auto ph = parent_hamiltonian(cluster_state(8), 2);
  const auto gap = gap_lower_bound(ph);
  EXPECT_GT(gap.bound, 0.0);
  EXPECT_LE(gap.bound, 1.0);
  EXPECT_LE(gap.bound, dense_gap(dense_hamiltonian(ph)) + 1e-9);
}

TEST(GapBound, NeverExceedsDenseGapProperty) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto ph = parent_hamiltonian(random_mps(8, 2, 100 + seed), 2);
    const auto gap = gap_lower_bound(ph);
    EXPECT_LE(gap.bound, dense_gap(dense_hamiltonian(ph)) + 1e-9) << seed;
    EXPECT_GE(gap.gamma, 0.0);
  }
}

TEST(FidelityBound, ExactDataGivesOne) {
  const MPS c = cluster_state(8);
  const auto ph = parent_hamiltonian(c, 2);
  const auto gap = gap_lower_bound(ph);
  const auto fb = fidelity_bound(ph, gap, simulate_reductions(c, 4), std::nullopt);
  EXPECT_GE(fb.value, 1.0 - 1e-6);
  EXPECT_TRUE(fb.unique_ground_state);
  EXPECT_FALSE(fb.vacuous);
}

TEST(FidelityBound, EpsilonsEnterLinearly) {
  const MPS c = cluster_state(8);
  const auto ph = parent_hamiltonian(c, 2);
  const auto gap = gap_lower_bound(ph);
  const auto ds = simulate_reductions(c, 4);
  const std::vector<double> eps(static_cast<std::size_t>(ds.n_windows()), 0.01);
  const auto base = fidelity_bound(ph, gap, ds, std::nullopt);
  const auto shifted = fidelity_bound(ph, gap, ds, eps);
  EXPECT_NEAR(base.value - shifted.value, 0.01 * static_cast<double>(ph.projectors.size()) / gap.bound, 1e-12);
}

TEST(FidelityBound, NarrowDataIsSupportError) {
  const MPS c = cluster_state(8);
  const auto ph = parent_hamiltonian(c, 2);
  EXPECT_THROW(fidelity_bound(ph, gap_lower_bound(ph), simulate_reductions(c, 3), std::nullopt), data_support_error);
}

TEST(FidelityBound, SoundAgainstMixedLabStatesProperty) {
  int informative = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const MPS est = cluster_state(6);
    const auto ph = parent_hamiltonian(est, 2);
    const auto gap = gap_lower_bound(ph);
    const Vector psi = mps_amplitudes(est);
    const Vector other = mps_amplitudes(random_mps(6, 2, 500 + seed));
    const double p = 0.02 * static_cast<double>(seed % 5);
    Vector mixed = psi + 0.05 * static_cast<double>(seed % 4) * other;
    mixed.normalize();
    const Matrix rho = (1.0 - p) * mixed * mixed.adjoint() + p * other * other.adjoint();
    const auto ds = simulate_reductions(rho, 6, 4);
    const auto fb = fidelity_bound(ph, gap, ds, std::nullopt);
    const double truth = psi.dot(rho * psi).real();
    EXPECT_LE(fb.value, truth + 1e-9) << seed;
    if (fb.value > 0.0) ++informative;
  }
  EXPECT_GT(informative, 0);
}

TEST(GhzPhase, Examples) {
  EXPECT_NEAR(ghz_phase_certify(1.0).phi, 0.0, 1e-12);
  EXPECT_NEAR(ghz_phase_certify(-1.0).phi, std::numbers::pi, 1e-12);
  const double e = string_expectation(ghz_state(6, std::numbers::pi / 3.0), oracle::pauli('X')).real();
  EXPECT_NEAR(e, 0.5, 1e-12);
  EXPECT_NEAR(ghz_phase_certify(e).phi, std::numbers::pi / 3.0, 1e-10);
  EXPECT_THROW(ghz_phase_certify(1.5), numeric_error);
}

TEST(CertificateJson, Fields) {
  const MPS c = cluster_state(8);
  const auto ph = parent_hamiltonian(c, 2);
  const auto gap = gap_lower_bound(ph);
  const auto fb = fidelity_bound(ph, gap, simulate_reductions(c, 4), std::nullopt);
  const auto j = certificate_json(ph, gap, fb);
  EXPECT_EQ(j["schema"], "mpstomo.certificate");
  EXPECT_EQ(j["windows"].size(), ph.projectors.size());
  EXPECT_EQ(j["gamma_table"].size(), gap.pairs.size());
  EXPECT_EQ(j["fidelity_bound"].get<double>(), fb.value);
  EXPECT_TRUE(j["injectivity"]["all_injective"].get<bool>());
}
