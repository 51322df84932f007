// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "codedmm/apps.hpp"
#include "codedmm/errors.hpp"
#include "codedmm/rng.hpp"
#include "eigen_bridge.hpp"

namespace codedmm {

namespace {

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

DenseMatrix random_features(const DenseMatrix& points, double sigma, std::size_t features, std::uint64_t seed) {
  if (features == 0) throw std::invalid_argument("rff: feature count must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("rff: sigma must be > 0");
  auto rng = make_stream(seed, Stream::kData, 1);
  std::normal_distribution<double> freq(0.0, 1.0 / sigma);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const std::size_t d = points.cols();
  DenseMatrix w(features, d);
  std::vector<double> b(features);
  for (std::size_t f = 0; f < features; ++f) {
    for (std::size_t j = 0; j < d; ++j) w(f, j) = freq(rng);
    b[f] = phase(rng);
  }
  const double scale = std::sqrt(2.0 / static_cast<double>(features));
  DenseMatrix z(points.rows(), features);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t f = 0; f < features; ++f) {
      z(i, f) = scale * std::cos(dot(points.row(i), w.row(f)) + b[f]);
    }
  }
  return z;
}

}  // namespace

KrrResult krr_pcg(const KrrProblem& problem, Executor& exec) {
  const std::size_t n = problem.kernel.rows();
  if (problem.kernel.cols() != n) throw std::invalid_argument("krr_pcg: kernel must be square");
  if (problem.labels.size() != n) throw std::invalid_argument("krr_pcg: label count does not match kernel");
  if (!(problem.ridge > 0.0)) throw std::invalid_argument("krr_pcg: ridge must be > 0");
  if (!(problem.tolerance > 0.0)) throw std::invalid_argument("krr_pcg: tolerance must be > 0");
  if (problem.preconditioner_inverse &&
      (problem.preconditioner_inverse->rows() != n || problem.preconditioner_inverse->cols() != n)) {
    throw std::invalid_argument("krr_pcg: preconditioner must be n x n");
  }

  DenseMatrix system = problem.kernel;
  for (std::size_t i = 0; i < n; ++i) system(i, i) += problem.ridge;
  const OperandId sys_id = exec.add_operand(std::move(system));
  std::optional<OperandId> pre_id;
  if (problem.preconditioner_inverse) pre_id = exec.add_operand(*problem.preconditioner_inverse);
  auto precondition = [&](const std::vector<double>& r) { return pre_id ? exec.matvec(*pre_id, r) : r; };

  const std::span<const double> y = problem.labels;
  const double target = problem.tolerance * norm2(y);

  KrrResult out;
  std::vector<double> x(n, 1.0);
  exec.begin_iteration(0);
  std::vector<double> r(y.begin(), y.end());
  axpy(-1.0, exec.matvec(sys_id, x), r);
  std::vector<double> z = precondition(r);
  std::vector<double> p = z;
  double rz = dot(r, z);
  double rnorm = norm2(r);
  out.residual_trace.push_back(rnorm);

  std::size_t k = 0;
  while (rnorm > target && k < problem.max_iters) {
    exec.begin_iteration(static_cast<int>(k + 1));
    const std::vector<double> h = exec.matvec(sys_id, p);
    const double curvature = dot(p, h);
    if (!(curvature > 0.0)) {
      throw NumericalError("krr_pcg: p^T h = " + std::to_string(curvature) + " at iteration " +
                           std::to_string(k) + "; system is not positive definite");
    }
    const double alpha = rz / curvature;
    axpy(alpha, p, x);
    axpy(-alpha, h, r);
    z = precondition(r);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rz = rz_next;
    rnorm = norm2(r);
    out.residual_trace.push_back(rnorm);
    ++k;
  }
  exec.begin_iteration(-1);
  out.coefficients = std::move(x);
  out.iterations = k;
  out.converged = rnorm <= target;
  return out;
}

DenseMatrix gaussian_kernel(const DenseMatrix& points, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
  const std::size_t n = points.rows();
  DenseMatrix k(n, n);
  const double scale = -1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < points.cols(); ++c) {
        const double diff = points(i, c) - points(j, c);
        d2 += diff * diff;
      }
      k(i, j) = k(j, i) = std::exp(scale * d2);
    }
  }
  return k;
}

KrrDataset synth_krr(std::size_t n, std::size_t d, double sigma, double ridge, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("synth_krr: n and d must be >= 1");
  auto rng = make_stream(seed, Stream::kData, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  DenseMatrix points(n, d);
  for (double& v : points.data()) v = unit(rng);
  std::vector<double> w(d);
  for (double& v : w) v = unit(rng);
  KrrDataset out;
  out.problem.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.problem.labels[i] = std::sin(2.0 * std::numbers::pi * dot(points.row(i), w)) + noise(rng);
  }
  out.problem.kernel = gaussian_kernel(points, sigma);
  out.problem.ridge = ridge;
  out.points = std::move(points);
  return out;
}

std::vector<double> RffPreconditioner::apply(std::span<const double> v) const {
  return matvec_reference(inverse, v);
}

DenseMatrix rff_gram(const DenseMatrix& points, double sigma, std::size_t features, std::uint64_t seed) {
  const DenseMatrix zm = random_features(points, sigma, features, seed);
  const auto z = detail::as_eigen(zm);
  return detail::from_eigen(z * z.transpose());
}

RffPreconditioner rff_preconditioner(const DenseMatrix& points, double sigma, std::size_t features,
                                     double ridge, std::uint64_t seed) {
  if (!(ridge > 0.0)) throw std::invalid_argument("rff_preconditioner: ridge must be > 0");
  const DenseMatrix zm = random_features(points, sigma, features, seed);
  const auto z = detail::as_eigen(zm);
  Eigen::MatrixXd m = z * z.transpose();
  m.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("rff_preconditioner: factorization failed");
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return {detail::from_eigen(inv)};
}

}  // namespace codedmm
