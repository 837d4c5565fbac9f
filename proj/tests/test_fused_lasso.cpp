#include <gtest/gtest.h>

#include <random>

#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/fused_lasso.hpp"
#include "hetcorr/simulation.hpp"
#include "oracles.hpp"

using namespace hetcorr;

TEST(PmdComponent, RecoversRankOnePiecewiseConstant) {
  VectorXd u0 = (VectorXd(4) << 1, -2, 0.5, 3).finished();
  u0.normalize();
  VectorXd v0(12);
  for (Index t = 0; t < 12; ++t) v0(t) = t < 5 ? 1.0 : (t < 9 ? -0.5 : 2.0);
  v0.normalize();
  const double d0 = 7.5;
  PmdState state;
  state.Z = d0 * u0 * v0.transpose();
  const PmdState out = pmd_component(state, 0.0);
  EXPECT_TRUE(out.converged);
  EXPECT_NEAR(out.d, d0, 1e-6);
  EXPECT_NEAR(std::abs(out.u.dot(u0)), 1.0, 1e-6);
  EXPECT_NEAR(std::abs(out.v.dot(v0)), 1.0, 1e-6);
}

TEST(PmdComponent, ZeroMatrixIsNull) {
  PmdState state;
  state.Z = MatrixXd::Zero(3, 5);
  const PmdState out = pmd_component(state, 1.0);
  EXPECT_EQ(out.d, 0.0);
  EXPECT_TRUE(out.u.isZero(0.0));
  EXPECT_TRUE(out.converged);
}

TEST(PmdComponent, LargeLambdaGivesConstantV) {
  std::mt19937_64 rng(4);
  MatrixXd Z = oracle::random_matrix(5, 8, rng);
  Z.array() += 0.5;
  PmdState state;
  state.Z = Z;
  const PmdState out = pmd_component(state, 1e6);
  const VectorXd ones_unit = VectorXd::Ones(8) / std::sqrt(8.0);
  EXPECT_NEAR(std::abs(out.v.dot(ones_unit)), 1.0, 1e-12);
  // With v fixed at the normalised constant vector, u = Z v / ||Z v|| and d = ||Z 1|| / sqrt(T).
  const double expected = (Z * VectorXd::Ones(8)).norm() / std::sqrt(8.0);
  EXPECT_NEAR(out.d, expected, 1e-10);
  EXPECT_NEAR(out.d, out.u.dot(Z * out.v), 1e-10);
}

TEST(FusedLasso, LambdaZeroMatchesBoundedRank) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd d = oracle::random_matrix(7, 11, rng);
    for (Index k : {1, 3, 7}) {
      const CorrectionModel fl = fit_fused_lasso(d, k, 0.0);
      const CorrectionModel br = fit_bounded_rank(d, k);
      EXPECT_LT((fl.correction() - br.correction()).norm() / br.correction().norm(), 1e-6);
      EXPECT_NEAR(fl.objective_value, br.objective_value, 1e-6 * std::max(1.0, br.objective_value));
    }
  }
}

TEST(FusedLasso, RankZeroAndRange) {
  const MatrixXd d = MatrixXd::Ones(3, 4);
  const CorrectionModel m = fit_fused_lasso(d, 0, 1.0);
  EXPECT_TRUE(m.correction().isZero(0.0));
  EXPECT_THROW(fit_fused_lasso(d, 4, 1.0), ArgumentError);
  EXPECT_THROW(fit_fused_lasso(d, 1, -1.0), ArgumentError);
}

TEST(FusedLasso, RecoversSimulatedSignal) {
  SimulationSpec spec;
  spec.true_rank = 5;
  spec.noise_sigma = 0.1;
  spec.seed = 2024;
  const SimulatedInstance inst = simulate_difference(spec);
  const CorrectionModel m = fit_fused_lasso(inst.D, 5, 1.0);
  const double rel = (m.correction() - inst.C_true).norm() / inst.C_true.norm();
  EXPECT_LT(rel, 0.2);
  for (Index k = 0; k < m.rank(); ++k) EXPECT_TRUE(m.B.col(k).allFinite());
}

TEST(FusedLasso, DeflationIsMonotone) {
  std::mt19937_64 rng(31);
  const MatrixXd d = oracle::random_matrix(6, 40, rng);
  PmdState state;
  state.Z = d;
  for (int k = 0; k < 6; ++k) {
    const double before = state.Z.norm();
    state = pmd_component(std::move(state), 0.3);
    state.Z -= state.d * state.u * state.v.transpose();
    EXPECT_LE(state.Z.norm(), before + 1e-12);
  }
}

TEST(FusedLasso, AdmmInnerSolverGivesSameFit) {
  std::mt19937_64 rng(8);
  const MatrixXd d = oracle::random_matrix(5, 30, rng);
  FusedLassoOptions admm;
  admm.tv_solver = TvSolver::admm;
  const CorrectionModel a = fit_fused_lasso(d, 2, 0.5);
  const CorrectionModel b = fit_fused_lasso(d, 2, 0.5, admm);
  EXPECT_LT((a.correction() - b.correction()).norm(), 1e-4);
}

TEST(DofFusedLasso, CountsJumps) {
  CorrectionModel m;
  m.method = Method::fused_lasso;
  m.A = MatrixXd::Ones(51, 2);
  m.B = MatrixXd::Ones(10, 2);
  EXPECT_EQ(dof_fused_lasso(m), 100);

  m.A = MatrixXd::Ones(3, 1);
  m.B = (MatrixXd(5, 1) << 1, 1, 2, 2, 2).finished();
  EXPECT_EQ(dof_fused_lasso(m), 3);

  m.method = Method::bounded_rank;
  EXPECT_THROW(dof_fused_lasso(m), ArgumentError);
}

TEST(DofFusedLasso, MatchesDirectScanOnFit) {
  SimulationSpec spec;
  spec.N = 20;
  spec.T = 150;
  spec.true_rank = 3;
  spec.seed = 5;
  const SimulatedInstance inst = simulate_difference(spec);
  const CorrectionModel m = fit_fused_lasso(inst.D, 3, 1.0);
  std::int64_t scan = 0;
  for (Index k = 0; k < 3; ++k)
    for (Index t = 1; t < m.B.rows(); ++t)
      if (std::abs(m.B(t, k) - m.B(t - 1, k)) > 1e-8) ++scan;
  EXPECT_EQ(dof_fused_lasso(m), 3 * 19 + scan);
}
