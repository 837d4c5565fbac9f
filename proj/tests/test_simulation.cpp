#include <gtest/gtest.h>

#include "hetcorr/simulation.hpp"

using namespace hetcorr;

TEST(Rng, KnownEngineOutputAndRanges) {
  // The 10000th draw of a default-seeded mt19937_64 is fixed by the standard.
  std::mt19937_64 ref;
  ref.discard(9999);
  EXPECT_EQ(ref(), 9981545732273789042ULL);

  Rng rng(11);
  double mean = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = rng.normal();
    mean += z;
    sq += z * z;
    ASSERT_LT(rng.below(7), 7u);
  }
  EXPECT_NEAR(mean / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Simulation, DeterministicPerSeed) {
  SimulationSpec spec;
  spec.N = 10;
  spec.T = 80;
  spec.seed = 3;
  const auto a = simulate_difference(spec);
  const auto b = simulate_difference(spec);
  EXPECT_EQ(a.D.values(), b.D.values());
  spec.seed = 4;
  EXPECT_NE(simulate_difference(spec).D.values(), a.D.values());
}

TEST(Simulation, ZeroNoiseIsExactSignal) {
  SimulationSpec spec;
  spec.noise_sigma = 0.0;
  spec.seed = 8;
  const auto inst = simulate_difference(spec);
  EXPECT_EQ(inst.D.values(), inst.C_true);
  EXPECT_LT((inst.A_true * inst.B_true.transpose() - inst.C_true).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulation, SignalIsNormalisedLowRankAndPiecewiseConstant) {
  for (std::uint64_t seed : {1, 2, 3}) {
    SimulationSpec spec;
    spec.seed = seed;
    const auto inst = simulate_difference(spec);
    const MatrixXd& C = inst.C_true;
    const double mean = C.mean();
    const double sd = std::sqrt((C.array() - mean).square().sum() / static_cast<double>(C.size()));
    EXPECT_NEAR(sd, 1.0, 1e-9);

    const VectorXd s = singular_values(C);
    EXPECT_LT(s(spec.true_rank) / s(0), 1e-10);

    for (Index k = 0; k < spec.true_rank; ++k) {
      Index plateaus = 1;
      for (Index t = 1; t < spec.T; ++t)
        if (inst.B_true(t, k) != inst.B_true(t - 1, k)) ++plateaus;
      EXPECT_EQ(plateaus, spec.pieces);
      EXPECT_GE(inst.B_true.col(k).minCoeff(), 0.0);
      EXPECT_LT(inst.B_true.col(k).maxCoeff(), 1.0);
    }

    const MatrixXd noise = inst.D.values() - C;
    const double nsd = std::sqrt(noise.squaredNorm() / static_cast<double>(noise.size()));
    EXPECT_NEAR(nsd, spec.noise_sigma, 0.05 * spec.noise_sigma);
  }
}

TEST(Simulation, SignalDominatesNoiseAtTrueRank) {
  SimulationSpec spec;
  spec.seed = 12;
  const auto inst = simulate_difference(spec);
  const auto [sig, noise] = signal_noise_singular_values(inst);
  // Noise spectrum edge is about sigma (sqrt(N) + sqrt(T)).
  const double edge = spec.noise_sigma * (std::sqrt(51.0) + std::sqrt(699.0));
  EXPECT_NEAR(noise(0), edge, 0.1 * edge);
  EXPECT_GT(sig(0), noise(0));
}

TEST(Simulation, LabelsAndValidation) {
  SimulationSpec spec;
  spec.N = 3;
  spec.T = 12;
  spec.pieces = 3;
  spec.true_rank = 2;
  const auto inst = simulate_difference(spec, *parse_date("2021-01-30"));
  EXPECT_EQ(inst.D.locations().front(), "loc1");
  EXPECT_EQ(format_date(inst.D.dates()[2]), "2021-02-01");

  SimulationSpec bad = spec;
  bad.pieces = 13;
  EXPECT_THROW(simulate_difference(bad), ArgumentError);
  bad = spec;
  bad.true_rank = 4;
  EXPECT_THROW(simulate_difference(bad), ArgumentError);
  bad = spec;
  bad.noise_sigma = -1;
  EXPECT_THROW(simulate_difference(bad), ArgumentError);
}
