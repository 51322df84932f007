// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "codedmm/apps.hpp"
#include "codedmm/errors.hpp"
#include "test_support.hpp"

namespace codedmm {
namespace {

using testing::random_matrix;

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  }
  return out;
}

DenseMatrix symmetric(std::size_t n, std::uint64_t seed) {
  const DenseMatrix g = random_matrix(n, n, seed);
  return matmul(g, g.transpose());
}

SimConfig coded_config(std::uint64_t seed, double p = 0.1) {
  SimConfig cfg;
  cfg.model.p = p;
  cfg.seed = seed;
  cfg.code = {2, 2};
  return cfg;
}

// --- power iteration --------------------------------------------------------

TEST(PowerIteration, IdentityConvergesImmediately) {
  Executor exec(Strategy::kReference);
  const auto res = power_iteration(DenseMatrix::identity(4), 100, 1e-10, exec);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1u);
  EXPECT_NEAR(res.eigenvalue, 1.0, 1e-15);
  for (double v : res.eigenvector) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(PowerIteration, DiagonalFindsTheLargerAxis) {
  DenseMatrix a(2, 2);
  a(0, 0) = 3.0;
  a(1, 1) = 1.0;
  Executor exec(Strategy::kReference);
  const double s = 1.0 / std::sqrt(2.0);
  const auto res = power_iteration(a, 200, 1e-6, exec, std::vector<double>{s, s});
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.eigenvalue, 3.0, 1e-6);
  EXPECT_NEAR(res.eigenvector[0], 1.0, 1e-6);
  EXPECT_NEAR(res.eigenvector[1], 0.0, 1e-6);
}

TEST(PowerIteration, MatchesDenseEigensolverThroughCodedExecutor) {
  const DenseMatrix a = symmetric(64, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(a));
  const double top = eig.eigenvalues()(63);
  Eigen::VectorXd vec = eig.eigenvectors().col(63);
  Executor exec(Strategy::kCoded, coded_config(3));
  const auto res = power_iteration(a, 5000, 1e-12, exec);
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.eigenvalue, top, 1e-5 * top);
  const double sign = vec.dot(Eigen::Map<const Eigen::VectorXd>(res.eigenvector.data(), 64)) < 0 ? -1.0 : 1.0;
  for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(sign * res.eigenvector[k], vec(k), 1e-5);
  EXPECT_EQ(res.eigenvalue_trace.size(), res.iterations);
}

TEST(PowerIteration, EncodesTheFixedMatrixOnce) {
  const DenseMatrix a = symmetric(16, 2);
  Executor exec(Strategy::kCoded, coded_config(4));
  const auto res = power_iteration(a, 20, 1e-15, exec);
  ASSERT_EQ(exec.reports().size(), res.iterations);
  EXPECT_GT(exec.reports()[0].encode_tasks, 0u);
  for (std::size_t k = 1; k < exec.reports().size(); ++k) {
    EXPECT_EQ(exec.reports()[k].encode_tasks, 0u);
    EXPECT_EQ(exec.reports()[k].t_enc, 0.0);
    EXPECT_EQ(exec.reports()[k].iteration, static_cast<int>(k) + 1);
  }
}

TEST(PowerIteration, ZeroMatrixIsDegenerate) {
  Executor exec(Strategy::kReference);
  EXPECT_THROW(power_iteration(DenseMatrix(3, 3), 10, 1e-6, exec), NumericalError);
  EXPECT_THROW(power_iteration(DenseMatrix(2, 3), 10, 1e-6, exec), std::invalid_argument);
}

// --- kernel ridge regression ------------------------------------------------

TEST(Krr, IdentityKernelHalvesTheLabels) {
  KrrProblem problem;
  problem.kernel = DenseMatrix::identity(5);
  problem.labels = {1, -2, 3, 0.5, 4};
  problem.ridge = 1.0;
  problem.tolerance = 1e-14;
  Executor exec(Strategy::kReference);
  const auto res = krr_pcg(problem, exec);
  EXPECT_EQ(res.iterations, 1u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(res.coefficients[k], problem.labels[k] / 2.0, 1e-14);
}

TEST(Krr, MatchesDirectSolveWithNonincreasingResidual) {
  auto data = synth_krr(512, 4, 8.0, 0.01, 5);
  data.problem.tolerance = 1e-10;
  data.problem.preconditioner_inverse = rff_preconditioner(data.points, 8.0, 256, 0.01, 6).inverse;
  const Eigen::MatrixXd k = to_eigen(data.problem.kernel);
  const Eigen::MatrixXd m = k + 0.01 * Eigen::MatrixXd::Identity(512, 512);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.problem.labels.data(), 512);
  const Eigen::VectorXd want = m.ldlt().solve(y);

  Executor exec(Strategy::kCoded, coded_config(6));
  const auto res = krr_pcg(data.problem, exec);
  ASSERT_TRUE(res.converged);
  const Eigen::VectorXd got = Eigen::Map<const Eigen::VectorXd>(res.coefficients.data(), 512);
  EXPECT_LE((got - want).norm(), 1e-5 * want.norm());
  for (std::size_t i = 1; i < res.residual_trace.size(); ++i) {
    EXPECT_LE(res.residual_trace[i], res.residual_trace[i - 1]) << "iteration " << i;
  }
}

TEST(Krr, PreconditionerReducesIterations) {
  auto data = synth_krr(256, 3, 1.0, 0.01, 7);
  data.problem.tolerance = 1e-8;
  Executor plain(Strategy::kReference);
  const auto unpreconditioned = krr_pcg(data.problem, plain);
  data.problem.preconditioner_inverse = rff_preconditioner(data.points, 1.0, 512, 0.01, 8).inverse;
  Executor pre(Strategy::kReference);
  const auto preconditioned = krr_pcg(data.problem, pre);
  ASSERT_TRUE(preconditioned.converged);
  EXPECT_LT(preconditioned.iterations, unpreconditioned.iterations);
  for (std::size_t k = 0; k < 256; ++k) {
    EXPECT_NEAR(preconditioned.coefficients[k], unpreconditioned.coefficients[k], 1e-5);
  }
}

TEST(Krr, IndefiniteSystemIsRejected) {
  KrrProblem problem;
  problem.kernel = DenseMatrix::identity(2);
  problem.kernel(1, 1) = -5.0;
  problem.labels = {1.0, 1.0};
  problem.ridge = 0.01;
  Executor exec(Strategy::kReference);
  EXPECT_THROW(krr_pcg(problem, exec), NumericalError);
}

TEST(Rff, GramApproachesTheKernel) {
  const DenseMatrix x = random_matrix(64, 3, 9);
  const DenseMatrix k = gaussian_kernel(x, 2.0);
  const DenseMatrix z = rff_gram(x, 2.0, 4096, 10);
  double mad = 0.0;
  for (std::size_t i = 0; i < 64; ++i) {
    for (std::size_t j = 0; j < 64; ++j) mad += std::abs(z(i, j) - k(i, j));
  }
  mad /= 64.0 * 64.0;
  // Monte Carlo error of D = 4096 features is about 1/sqrt(D) ~ 0.016.
  EXPECT_LT(mad, 0.02);
}

TEST(Rff, LargeRidgeIsNearlyScaledIdentity) {
  const DenseMatrix x = random_matrix(16, 2, 11);
  const auto pre = rff_preconditioner(x, 1.0, 64, 1e4, 12);
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  const auto out = pre.apply(v);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(out[k], v[k] / 1e4, 0.01 * v[k] / 1e4);
}

TEST(GaussianKernel, UnitDiagonalAndSymmetric) {
  const DenseMatrix k = gaussian_kernel(random_matrix(10, 3, 13), 1.5);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(k(i, i), 1.0);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(k(i, j), k(j, i));
  }
}

// --- alternating least squares ----------------------------------------------

TEST(Als, RecoversAPlantedFactorization) {
  const DenseMatrix h = random_matrix(40, 4, 14);
  const DenseMatrix w = random_matrix(4, 30, 15);
  const DenseMatrix r = matmul(h, w);
  AlsOptions opt;
  opt.factors = 4;
  opt.ridge = 1e-9;
  opt.max_iters = 200;
  opt.seed = 16;
  Executor exec(Strategy::kReference);
  const auto res = als(r, opt, exec);
  const DenseMatrix fit = matmul(res.users, res.items);
  EXPECT_LE(frobenius_norm(fit - r) / frobenius_norm(r), 1e-3);
  for (std::size_t k = 1; k < res.loss_trace.size(); ++k) {
    EXPECT_LE(res.loss_trace[k], res.loss_trace[k - 1] * (1 + 1e-12));
  }
}

TEST(Als, CodedAndReferenceTracesAgree) {
  const DenseMatrix r = synth_ratings(256, 256, 17);
  AlsOptions opt;
  opt.seed = 18;
  Executor reference(Strategy::kReference);
  Executor coded(Strategy::kCoded, coded_config(19, 0.05));
  const auto a = als(r, opt, reference);
  const auto b = als(r, opt, coded);
  ASSERT_EQ(a.loss_trace.size(), 7u);
  ASSERT_EQ(b.loss_trace.size(), 7u);
  for (std::size_t k = 0; k < 7; ++k) {
    EXPECT_NEAR(a.loss_trace[k], b.loss_trace[k], 1e-8 * a.loss_trace[k]);
    if (k > 0) EXPECT_LE(a.loss_trace[k], a.loss_trace[k - 1]);
  }
  EXPECT_EQ(coded.reports().size(), 14u);
}

TEST(Als, LossMatchesDefinition) {
  const DenseMatrix r = random_matrix(3, 4, 20);
  const DenseMatrix h = random_matrix(3, 2, 21);
  const DenseMatrix w = random_matrix(2, 4, 22);
  const DenseMatrix e = r - matmul(h, w);
  const double want = frobenius_norm(e) * frobenius_norm(e) +
                      0.5 * (frobenius_norm(h) * frobenius_norm(h) + frobenius_norm(w) * frobenius_norm(w));
  EXPECT_NEAR(als_loss(r, h, w, 0.5), want, 1e-12);
}

TEST(SynthRatings, RangeMeanAndDeterminism) {
  const DenseMatrix r = synth_ratings(512, 512, 23);
  double total = 0.0;
  for (std::size_t i = 0; i < 512; ++i) {
    for (std::size_t j = 0; j < 512; ++j) {
      const double v = r(i, j);
      EXPECT_EQ(v, std::round(v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 6.0);
      total += v;
    }
  }
  EXPECT_NEAR(total / (512.0 * 512.0), 3.0, 0.05);
  EXPECT_EQ(synth_ratings(20, 30, 24), synth_ratings(20, 30, 24));
  EXPECT_NE(synth_ratings(20, 30, 24), synth_ratings(20, 30, 25));
}

// --- tall-skinny SVD --------------------------------------------------------

TEST(Svd, OrthonormalColumnsHaveUnitSingularValues) {
  const DenseMatrix g = random_matrix(20, 3, 26);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(to_eigen(g));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(20, 3);
  DenseMatrix a(20, 3);
  for (std::size_t r = 0; r < 20; ++r) {
    for (std::size_t c = 0; c < 3; ++c) a(r, c) = q(r, c);
  }
  Executor exec(Strategy::kReference);
  const auto res = tall_skinny_svd(a, exec);
  for (double s : res.singular_values) EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_LT(max_abs_difference(res.u, matmul(a, res.v)), 1e-12);
}

TEST(Svd, DiagonalEmbedding) {
  DenseMatrix a(3, 2);
  a(0, 0) = 3.0;
  a(1, 1) = 2.0;
  Executor exec(Strategy::kReference);
  const auto res = tall_skinny_svd(a, exec);
  EXPECT_NEAR(res.singular_values[0], 3.0, 1e-14);
  EXPECT_NEAR(res.singular_values[1], 2.0, 1e-14);
  EXPECT_NEAR(res.v(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(res.v(1, 1), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(res.u(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(res.u(1, 1)), 1.0, 1e-14);
  EXPECT_EQ(res.rank, 2u);
}

TEST(Svd, ReconstructsThroughCodedExecutor) {
  const DenseMatrix a = random_matrix(512, 32, 27);
  Executor exec(Strategy::kCoded, coded_config(28));
  const auto res = tall_skinny_svd(a, exec);
  DenseMatrix us = res.u;
  for (std::size_t r = 0; r < us.rows(); ++r) {
    for (std::size_t c = 0; c < us.cols(); ++c) us(r, c) *= res.singular_values[c];
  }
  EXPECT_LE(frobenius_norm(matmul(us, res.v.transpose()) - a) / frobenius_norm(a), 1e-8);
  const DenseMatrix utu = matmul(res.u.transpose(), res.u);
  EXPECT_LE(max_abs_difference(utu, DenseMatrix::identity(32)), 1e-8);
  EXPECT_TRUE(std::is_sorted(res.singular_values.rbegin(), res.singular_values.rend()));
}

TEST(Svd, RankDeficientInputGetsZeroColumns) {
  DenseMatrix a(6, 3);
  for (std::size_t r = 0; r < 6; ++r) {
    a(r, 0) = static_cast<double>(r + 1);
    a(r, 1) = 2.0 * static_cast<double>(r + 1);
    a(r, 2) = 1.0;
  }
  Executor exec(Strategy::kReference);
  const auto res = tall_skinny_svd(a, exec);
  EXPECT_EQ(res.rank, 2u);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(res.u(r, 2), 0.0);
  EXPECT_THROW(tall_skinny_svd(DenseMatrix(4, 2), exec), NumericalError);
  EXPECT_THROW(tall_skinny_svd(DenseMatrix(2, 4), exec), std::invalid_argument);
}

}  // namespace
}  // namespace codedmm
