#include <gtest/gtest.h>

#include <random>

#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/spline.hpp"
#include "oracles.hpp"

using namespace hetcorr;

TEST(SplineBasis, DegreeZeroUnitKnotsIsIdentity) {
  for (Index T : {2, 5, 17}) {
    const SplineBasis b = build_spline_basis(T, 0, 1);
    EXPECT_EQ(b.C, MatrixXd::Identity(T, T));
  }
}

TEST(SplineBasis, DegreeZeroBlocks) {
  const SplineBasis b = build_spline_basis(4, 0, 2);
  EXPECT_EQ(b.C, (MatrixXd(2, 4) << 1, 1, 0, 0, 0, 0, 1, 1).finished());
}

TEST(SplineBasis, CubicPartitionOfUnityAndSize) {
  const SplineBasis b = build_spline_basis(699, 3, 10);
  EXPECT_EQ(b.size(), 73);
  EXPECT_LT((b.C.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_GE(b.C.minCoeff(), 0.0);
}

TEST(SplineBasis, LocalSupport) {
  for (int degree : {0, 1, 2, 3}) {
    for (int h : {3, 7}) {
      const SplineBasis b = build_spline_basis(60, degree, h);
      for (Index i = 0; i < b.size(); ++i) {
        // Support is inside [knots[i], knots[i + degree + 1]].
        const double lo = b.knots[static_cast<std::size_t>(i)];
        const double hi = b.knots[static_cast<std::size_t>(i + degree + 1)];
        for (Index t = 0; t < 60; ++t) {
          const double x = static_cast<double>(t + 1);
          if (x < lo || x > hi) { EXPECT_EQ(b.C(i, t), 0.0); }
        }
        EXPECT_GT(b.C.row(i).maxCoeff(), 0.0) << "basis function " << i << " vanishes on every day";
      }
      EXPECT_LT((b.C.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    }
  }
}

TEST(SplineBasis, CoxDeBoorMatchesClosedFormLinear) {
  // Degree 1 on uniform unit knots gives hat functions.
  const std::vector<double> knots = {0, 1, 2, 3};
  for (double x : {0.0, 0.25, 1.0, 1.5, 2.75}) {
    const auto v = bspline_values(knots, 1, x);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NEAR(v[0], x <= 1.0 ? x : (x <= 2.0 ? 2.0 - x : 0.0), 1e-15);
    EXPECT_NEAR(v[1], x <= 1.0 ? 0.0 : (x <= 2.0 ? x - 1.0 : 3.0 - x), 1e-15);
  }
}

TEST(SplineBasis, RightEndpointIncluded) {
  const std::vector<double> knots = {0, 0, 1, 2, 2};
  const auto v = bspline_values(knots, 1, 2.0);
  EXPECT_DOUBLE_EQ(v.back(), 1.0);
}

TEST(SplineBasis, Errors) {
  EXPECT_THROW(build_spline_basis(10, 3, 11), ArgumentError);
  EXPECT_THROW(build_spline_basis(1, 3, 1), ArgumentError);
  EXPECT_THROW(build_spline_basis(10, 3, 0), ArgumentError);
}

TEST(BasisSpline, IdentityBasisMatchesBoundedRank) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd d = oracle::random_matrix(6, 9, rng);
    const SplineBasis basis = build_spline_basis(9, 0, 1);
    for (Index k : {0, 1, 4, 6}) {
      const CorrectionModel bs = fit_basis_spline(d, basis, k);
      const CorrectionModel br = fit_bounded_rank(d, k);
      EXPECT_LT((bs.correction() - br.correction()).norm(), 1e-8);
    }
  }
}

TEST(BasisSpline, RecoversConstructedRankOne) {
  const SplineBasis basis = build_spline_basis(40, 3, 8);
  std::mt19937_64 rng(12);
  const MatrixXd a0 = oracle::random_matrix(5, 1, rng);
  const MatrixXd b0 = oracle::random_matrix(basis.size(), 1, rng);
  const MatrixXd d = a0 * b0.transpose() * basis.C;
  const CorrectionModel m = fit_basis_spline(d, basis, 1);
  EXPECT_LE((d - m.correction()).norm(), 1e-8);
}

TEST(BasisSpline, Properties) {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 20; ++rep) {
    const Index N = 2 + static_cast<Index>(rng() % 5);
    const Index T = 4 + static_cast<Index>(rng() % 3);
    const SplineBasis basis = build_spline_basis(T, 1, 2);  // L < T
    ASSERT_LT(basis.size(), T);
    const MatrixXd d = oracle::random_matrix(N, T, rng);
    const MatrixXd C = basis.C;
    const MatrixXd proj = C.transpose() * (C * C.transpose()).inverse() * C;
    const double floor = (d * (MatrixXd::Identity(T, T) - proj)).squaredNorm();

    double prev = std::numeric_limits<double>::infinity();
    const Index kmax = std::min(N, basis.size());
    for (Index k = 0; k <= kmax; ++k) {
      const CorrectionModel m = fit_basis_spline(d, basis, k);
      EXPECT_LE(m.objective_value, prev + 1e-12);
      prev = m.objective_value;
      EXPECT_GE(m.objective_value, floor - 1e-10);

      if (k == 0) continue;
      // Residual of the OLS fit outside span(U_K) is orthogonal to U_K.
      const MatrixXd F = d * proj;
      const MatrixXd& U = m.A;
      EXPECT_LT((U.transpose() * (F - U * U.transpose() * F)).cwiseAbs().maxCoeff(), 1e-8);

      // Monte Carlo lower bound: no random rank-k factor pair in the row space of C does better.
      for (int trial = 0; trial < 200; ++trial) {
        const MatrixXd a = oracle::random_matrix(N, k, rng);
        const MatrixXd b = oracle::random_matrix(basis.size(), k, rng);
        EXPECT_LE(m.objective_value, (d - a * b.transpose() * C).squaredNorm() + 1e-12);
      }
    }
  }
}

TEST(BasisSpline, SingularBasisIsReported) {
  // Degree 3 with one-day knots has more basis functions than days.
  const SplineBasis basis = build_spline_basis(6, 3, 1);
  EXPECT_THROW(fit_basis_spline(MatrixXd::Ones(2, 6), basis, 1), NumericalError);
  SplineFitOptions ridge;
  ridge.ridge = 1e-8;
  EXPECT_NO_THROW(fit_basis_spline(MatrixXd::Ones(2, 6), basis, 1, ridge));
}

TEST(DofBasisSpline, Formula) {
  CorrectionModel m;
  m.method = Method::basis_spline;
  m.A = MatrixXd::Zero(51, 1);
  SplineBasis b;
  b.C = MatrixXd::Zero(20, 100);
  m.spline = b;
  m.B = MatrixXd::Zero(20, 1);
  EXPECT_EQ(dof_basis_spline(m), 70);
  m.A = MatrixXd::Zero(51, 0);
  m.B = MatrixXd::Zero(20, 0);
  EXPECT_EQ(dof_basis_spline(m), 0);

  const SplineBasis built = build_spline_basis(699, 3, 10);
  m.spline = built;
  m.A = MatrixXd::Zero(51, 4);
  m.B = MatrixXd::Zero(built.size(), 4);
  EXPECT_EQ(dof_basis_spline(m), 4 * (51 + 73 - 1));
  m.method = Method::fused_lasso;
  EXPECT_THROW(dof_basis_spline(m), ArgumentError);
}
