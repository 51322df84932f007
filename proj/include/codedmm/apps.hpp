// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_APPS_HPP_
#define CODEDMM_APPS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "codedmm/executor.hpp"
#include "codedmm/matrix.hpp"

namespace codedmm {

// ---------------------------------------------------------------------------
// Power iteration

struct PowerIterationResult {
  double eigenvalue = 0.0;
  std::vector<double> eigenvector;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> eigenvalue_trace;
};

/// Dominant eigenpair of a square matrix. Each iteration is one executor
/// matvec; it stops once ||A v - lambda v|| <= tol * |lambda|. v0 defaults to
/// the normalized all-ones vector. Throws NumericalError if an iterate
/// vanishes.
PowerIterationResult power_iteration(const DenseMatrix& a, std::size_t max_iters, double tol, Executor& exec,
                                     std::optional<std::vector<double>> v0 = std::nullopt);

// ---------------------------------------------------------------------------
// Kernel ridge regression by preconditioned conjugate gradient

struct KrrProblem {
  DenseMatrix kernel{1, 1};
  std::vector<double> labels;
  double ridge = 0.01;
  /// Explicit inverse preconditioner; identity when unset.
  std::optional<DenseMatrix> preconditioner_inverse;
  /// Stop when ||(K + ridge I) x - y|| <= tolerance * ||y||.
  double tolerance = 1e-3;
  std::size_t max_iters = 1000;
};

struct KrrResult {
  std::vector<double> coefficients;
  std::vector<double> residual_trace;  // ||r_k||, starting at k = 0
  std::size_t iterations = 0;
  bool converged = false;
};

/// Throws NumericalError when a search direction has p^T h <= 0.
KrrResult krr_pcg(const KrrProblem& problem, Executor& exec);

/// exp(-||x - z||^2 / (2 sigma^2)) over the rows of points.
DenseMatrix gaussian_kernel(const DenseMatrix& points, double sigma);

struct KrrDataset {
  DenseMatrix points{1, 1};
  KrrProblem problem;
};

/// n points uniform in [0,1]^d, labels sin(2 pi <w, x>) plus N(0, 0.1^2) noise.
KrrDataset synth_krr(std::size_t n, std::size_t d, double sigma, double ridge, std::uint64_t seed);

struct RffPreconditioner {
  DenseMatrix inverse{1, 1};  // (Z Z^T + ridge I)^-1

  std::vector<double> apply(std::span<const double> v) const;
};

/// Random Fourier features z(x) = sqrt(2/D) cos(W x + b), W ~ N(0, sigma^-2 I),
/// b ~ U[0, 2 pi]. Factorizes M = Z Z^T + ridge I densely. Throws
/// NumericalError if M is not positive definite.
RffPreconditioner rff_preconditioner(const DenseMatrix& points, double sigma, std::size_t features,
                                     double ridge, std::uint64_t seed);

/// Z Z^T for the same feature draw, for checking the kernel approximation.
DenseMatrix rff_gram(const DenseMatrix& points, double sigma, std::size_t features, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Alternating least squares

struct AlsOptions {
  std::size_t factors = 16;
  double ridge = 0.1;
  /// Stop once ||R - H W||_F^2 <= tolerance.
  double tolerance = 0.0;
  std::size_t max_iters = 7;
  std::uint64_t seed = 0;
};

struct AlsResult {
  DenseMatrix users{1, 1};  // H, users x factors
  DenseMatrix items{1, 1};  // W, factors x items
  std::vector<double> loss_trace;  // one entry per full iteration
  std::size_t iterations = 0;
};

/// ||R - H W||_F^2 + ridge (||H||_F^2 + ||W||_F^2).
double als_loss(const DenseMatrix& ratings, const DenseMatrix& users, const DenseMatrix& items, double ridge);

/// The two large products per iteration go through exec; the factors x factors
/// systems are solved locally.
AlsResult als(const DenseMatrix& ratings, const AlsOptions& options, Executor& exec);

/// Uniform{1..5} plus N(0, noise_std^2), rounded to the nearest integer.
DenseMatrix synth_ratings(std::size_t users, std::size_t items, std::uint64_t seed, double noise_std = 0.2);

// ---------------------------------------------------------------------------
// Tall-skinny SVD

struct SvdResult {
  DenseMatrix u{1, 1};
  std::vector<double> singular_values;  // descending
  DenseMatrix v{1, 1};
  std::size_t rank = 0;
};

/// A^T A through exec, a local symmetric eigendecomposition, then
/// U = A (V Sigma^-1) through exec. Singular values at or below
/// cols * eps * sigma_max get zero columns in U. The largest-magnitude entry
/// of each column of V is positive. Throws NumericalError for a zero matrix.
SvdResult tall_skinny_svd(const DenseMatrix& a, Executor& exec);

}  // namespace codedmm

#endif  // CODEDMM_APPS_HPP_
