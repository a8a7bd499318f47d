#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pdesign/errors.hpp"
#include "pdesign/spectra.hpp"
#include "test_support.hpp"

namespace pdesign {
namespace {

using testing::gaussian_matrix;
using testing::random_pd;

TEST(SymMatrix, ConstructionSymmetrizesExactly) {
  Rng rng(1);
  const SymMatrix m(gaussian_matrix(5, 5, rng));
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) EXPECT_EQ(m(i, j), m(j, i));
  }
}

TEST(SymMatrix, RejectsNonSquare) {
  EXPECT_THROW(SymMatrix(Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST(SymMatrix, AddOuterStaysSymmetric) {
  Rng rng(2);
  SymMatrix m = SymMatrix::identity(4);
  for (int r = 0; r < 50; ++r) m.add_outer(testing::gaussian_vector(4, rng), rng.normal());
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_EQ(m(i, j), m(j, i));
  }
}

TEST(EigSym, IdentityHasUnitEigenvalues) {
  const SpectralDecomposition s = eig_sym(SymMatrix::identity(2));
  EXPECT_DOUBLE_EQ(s.eigenvalues(0), 1.0);
  EXPECT_DOUBLE_EQ(s.eigenvalues(1), 1.0);
  EXPECT_LE((s.eigenvectors.transpose() * s.eigenvectors - Eigen::MatrixXd::Identity(2, 2)).norm(),
            1e-10);
}

TEST(EigSym, DiagonalIsAxisAligned) {
  const SpectralDecomposition s = eig_sym(SymMatrix::diagonal(Eigen::Vector2d(5.0, 2.0)));
  EXPECT_DOUBLE_EQ(s.eigenvalues(0), 2.0);
  EXPECT_DOUBLE_EQ(s.eigenvalues(1), 5.0);
  EXPECT_NEAR(std::abs(s.eigenvectors(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(s.eigenvectors(0, 1)), 1.0, 1e-14);
}

TEST(EigSym, RandomReconstruction) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMatrix m(gaussian_matrix(6, 6, rng));
    const SpectralDecomposition s = eig_sym(m);
    for (int i = 1; i < 6; ++i) EXPECT_LE(s.eigenvalues(i - 1), s.eigenvalues(i));
    const double scale = std::max(1.0, m.matrix().norm());
    EXPECT_LE((s.reconstruct().matrix() - m.matrix()).norm(), 1e-10 * scale);
    EXPECT_LE((s.eigenvectors.transpose() * s.eigenvectors - Eigen::MatrixXd::Identity(6, 6)).norm(),
              1e-10);
  }
}

TEST(EigSym, NonFiniteInputThrowsInvalidMatrix) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    eig_sym(SymMatrix(m));
    FAIL() << "expected InvalidMatrix";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidMatrix);
  }
}

TEST(TraceNegPower, Examples) {
  EXPECT_DOUBLE_EQ(trace_neg_power(SymMatrix::identity(3), 2.0), 3.0);
  EXPECT_DOUBLE_EQ(trace_neg_power(SymMatrix::diagonal(Eigen::Vector2d(1.0, 2.0)), 1.0), 1.5);
}

TEST(TraceNegPower, SingularThrows) {
  try {
    trace_neg_power(SymMatrix::diagonal(Eigen::Vector2d(1.0, 0.0)), 1.0);
    FAIL() << "expected SingularMatrix";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularMatrix);
  }
}

// Oracle: tr(M^{-p}) from p successive LU solves against the identity.
double trace_by_solves(const SymMatrix& m, int p) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.matrix());
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m.dim(), m.dim());
  for (int i = 0; i < p; ++i) power = lu.solve(power);
  return power.trace();
}

TEST(TraceNegPower, MatchesRepeatedSolves) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 5;
    const int p = 1 + trial % 4;
    const SymMatrix m = random_pd(d, rng, 0.2, 3.0);
    const double expected = trace_by_solves(m, p);
    EXPECT_LE(std::abs(trace_neg_power(m, p) - expected), 1e-8 * expected);
  }
  const SymMatrix m5 = random_pd(5, rng);
  EXPECT_NEAR(trace_neg_power(m5, 3.0), trace_by_solves(m5, 3), 1e-10 * trace_by_solves(m5, 3));
}

TEST(PdPower, InverseSquareRootSquaresToInverse) {
  Rng rng(5);
  const SymMatrix m = random_pd(4, rng);
  const Eigen::MatrixXd half = pd_power(m, -0.5).matrix();
  EXPECT_LE((half * m.matrix() * half - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-12);
}

TEST(ActionScalar, IdentityIsAnalytic) {
  for (int d : {1, 2, 5, 9}) {
    for (double alpha : {3.0, 10.0, 42.5}) {
      const ActionMatrix a = solve_action_scalar(SymMatrix::identity(d), alpha);
      EXPECT_NEAR(a.c, alpha - std::sqrt(static_cast<double>(d)), 1e-10 * alpha);
      EXPECT_NEAR(a.a_matrix.trace(), 1.0, 1e-10);
    }
  }
}

// Oracle: plain bisection on (10 - c)^{-2} + (40 - c)^{-2} = 1 over c < 10.
double bisect_diag_1_4() {
  double lo = -100.0;
  double hi = 10.0 - 1e-12;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = 1.0 / ((10.0 - mid) * (10.0 - mid)) + 1.0 / ((40.0 - mid) * (40.0 - mid));
    (f > 1.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(ActionScalar, DiagonalMatchesBisection) {
  const ActionMatrix a =
      solve_action_scalar(SymMatrix::diagonal(Eigen::Vector2d(1.0, 4.0)), 10.0);
  EXPECT_NEAR(a.c, bisect_diag_1_4(), 1e-10);
  const double trace = 1.0 / ((10.0 - a.c) * (10.0 - a.c)) + 1.0 / ((40.0 - a.c) * (40.0 - a.c));
  EXPECT_NEAR(trace, 1.0, 1e-10);
}

TEST(ActionScalar, RandomPostConditions) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 8;
    const double alpha = 1.0 + 50.0 * rng.uniform();
    const SymMatrix z = trial % 3 == 0 ? testing::random_psd_rank(d, std::max(1, d - 1), rng)
                                       : random_pd(d, rng, 0.01, 5.0);
    const SpectralDecomposition zs = eig_sym(z);
    const ActionMatrix a = solve_action_scalar(zs, alpha);
    EXPECT_LT(a.c, alpha * zs.lambda_min());
    // Independent trace: sum of (alpha lambda_j - c)^{-2} from the spectrum.
    double trace = 0.0;
    for (int j = 0; j < d; ++j) {
      const double g = alpha * zs.eigenvalues(j) - a.c;
      trace += 1.0 / (g * g);
    }
    EXPECT_NEAR(trace, 1.0, 1e-10);
    EXPECT_NEAR(a.a_matrix.trace(), 1.0, 1e-10);
    const Eigen::MatrixXd sq = a.a_sqrt.matrix() * a.a_sqrt.matrix();
    EXPECT_LE((sq - a.a_matrix.matrix()).norm(), 1e-10);
    EXPECT_TRUE(eig_sym(a.a_matrix).positive_definite());
    EXPECT_GE(a.gap, 1.0 - 1e-12);
    EXPECT_LE(a.gap, std::sqrt(static_cast<double>(d)) + 1e-12);
  }
}

// <vv^T, Z^{-1}> <= alpha <vv^T, A^{1/2}> <= alpha lambda_min(Z) <vv^T, Z^{-1}>
// for lambda_min(Z) in [1 - 5 gamma, 1).
TEST(ActionScalar, SandwichBound) {
  Rng rng(7);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + trial % 6;
    const double gamma = 1.0 / 6.0 * (0.2 + 0.8 * rng.uniform());
    const double alpha = std::sqrt(static_cast<double>(d)) / gamma;
    const double lmin = 1.0 - 5.0 * gamma * rng.uniform();
    Eigen::VectorXd lambda(d);
    lambda(0) = lmin;
    for (int j = 1; j < d; ++j) lambda(j) = lmin + 3.0 * rng.uniform();
    const Eigen::MatrixXd q = testing::random_orthogonal(d, rng);
    const SymMatrix z(q * lambda.asDiagonal() * q.transpose());
    const Eigen::VectorXd v = testing::unit_vector(d, rng);
    const ActionMatrix a = solve_action_scalar(z, alpha);
    const double leverage = pd_power(z, -1.0).quadratic_form(v);
    const double score = alpha * a.a_sqrt.quadratic_form(v);
    const double upper = alpha * eig_sym(z).lambda_min() * leverage;
    if (leverage > score * (1 + 1e-9) || score > upper * (1 + 1e-9)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

}  // namespace
}  // namespace pdesign
