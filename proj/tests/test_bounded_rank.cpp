#include <gtest/gtest.h>

#include <random>

#include "hetcorr/bounded_rank.hpp"
#include "oracles.hpp"

using namespace hetcorr;

TEST(BoundedRank, RankOneInputIsExact) {
  const MatrixXd d = (MatrixXd(2, 2) << 2, 4, 1, 2).finished();
  const CorrectionModel m = fit_bounded_rank(d, 1);
  EXPECT_LT((m.A * m.B.transpose() - d).norm(), 1e-12);
}

TEST(BoundedRank, RankZero) {
  const MatrixXd d = (MatrixXd(2, 3) << 1, 2, 3, 4, 5, 6).finished();
  const CorrectionModel m = fit_bounded_rank(d, 0);
  EXPECT_EQ(m.rank(), 0);
  EXPECT_TRUE(m.correction().isZero(0.0));
  EXPECT_DOUBLE_EQ(m.objective_value, d.squaredNorm());
}

TEST(BoundedRank, ObjectiveIsTailSingularEnergy) {
  std::mt19937_64 rng(7);
  const MatrixXd d = oracle::random_matrix(6, 9, rng);
  const CorrectionModel m = fit_bounded_rank(d, 3);
  // Oracle: full SVD via the Jacobi routine (independent of the BDC path).
  const VectorXd s = Eigen::JacobiSVD<MatrixXd>(d).singularValues();
  const double tail = s.tail(3).squaredNorm();
  EXPECT_NEAR((d - m.A * m.B.transpose()).squaredNorm(), tail, 1e-9);
  EXPECT_NEAR(m.objective_value, tail, 1e-9);
}

TEST(BoundedRank, RankOutOfRange) {
  EXPECT_THROW(fit_bounded_rank(MatrixXd::Zero(3, 4), 4), ArgumentError);
  EXPECT_THROW(fit_bounded_rank(MatrixXd::Zero(3, 4), -1), ArgumentError);
}

TEST(BoundedRank, Properties) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 25; ++rep) {
    const Index n = 2 + static_cast<Index>(rng() % 8);
    const Index t = 2 + static_cast<Index>(rng() % 10);
    const MatrixXd d = oracle::random_matrix(n, t, rng);
    const Index kmax = std::min(n, t);
    double prev = d.squaredNorm() + 1.0;
    for (Index k = 0; k <= kmax; ++k) {
      const CorrectionModel m = fit_bounded_rank(d, k);
      EXPECT_LE(m.objective_value, prev + 1e-12);
      prev = m.objective_value;
      if (k > 0) {
        EXPECT_LT((m.B.transpose() * m.B - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-9);
        // sign rule
        for (Index c = 0; c < k; ++c) {
          Index arg;
          m.B.col(c).cwiseAbs().maxCoeff(&arg);
          EXPECT_GE(m.B(arg, c), 0.0);
        }
      }
    }
    const CorrectionModel full = fit_bounded_rank(d, kmax);
    EXPECT_LT((full.correction() - d).norm() / d.norm(), 1e-8);
    // Deterministic across runs.
    const CorrectionModel again = fit_bounded_rank(d, kmax);
    EXPECT_EQ(full.A, again.A);
    EXPECT_EQ(full.B, again.B);
  }
}
