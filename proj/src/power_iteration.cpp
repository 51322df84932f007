// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>
#include <string>

#include "codedmm/apps.hpp"
#include "codedmm/errors.hpp"

namespace codedmm {

PowerIterationResult power_iteration(const DenseMatrix& a, std::size_t max_iters, double tol, Executor& exec,
                                     std::optional<std::vector<double>> v0) {
  if (a.rows() != a.cols()) throw std::invalid_argument("power_iteration: matrix must be square");
  if (!(tol > 0.0)) throw std::invalid_argument("power_iteration: tol must be > 0");
  if (max_iters == 0) throw std::invalid_argument("power_iteration: max_iters must be >= 1");
  const std::size_t n = a.rows();

  std::vector<double> v = v0 ? std::move(*v0) : std::vector<double>(n, 1.0);
  if (v.size() != n) {
    throw std::invalid_argument("power_iteration: start vector has " + std::to_string(v.size()) +
                                " entries, expected " + std::to_string(n));
  }
  double norm = norm2(v);
  if (norm == 0.0) throw NumericalError("power_iteration: start vector is zero");
  for (double& x : v) x /= norm;

  const OperandId id = exec.add_operand(a);
  PowerIterationResult out;
  for (std::size_t k = 1; k <= max_iters; ++k) {
    exec.begin_iteration(static_cast<int>(k));
    std::vector<double> w = exec.matvec(id, v);
    const double lambda = dot(v, w);
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += (w[i] - lambda * v[i]) * (w[i] - lambda * v[i]);
    residual = std::sqrt(residual);

    norm = norm2(w);
    if (norm == 0.0) throw NumericalError("power_iteration: iterate vanished at step " + std::to_string(k));
    for (double& x : w) x /= norm;

    out.eigenvalue = lambda;
    out.eigenvalue_trace.push_back(lambda);
    out.iterations = k;
    // A v / ||A v|| is one step closer to the dominant direction than v.
    out.eigenvector = w;
    if (residual <= tol * std::abs(lambda)) {
      out.converged = true;
      break;
    }
    v = std::move(w);
  }
  exec.begin_iteration(-1);
  return out;
}

}  // namespace codedmm
