// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <stdexcept>

#include "codedmm/apps.hpp"
#include "codedmm/errors.hpp"
#include "eigen_bridge.hpp"

namespace codedmm {

SvdResult tall_skinny_svd(const DenseMatrix& a, Executor& exec) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  if (rows < cols) throw std::invalid_argument("tall_skinny_svd: needs rows >= cols");

  const DenseMatrix at = a.transpose();
  const OperandId at_id = exec.add_operand(at);
  const DenseMatrix gram = exec.multiply_abt(at_id, at);

  // Symmetrize to remove rounding asymmetry before the eigensolver.
  const auto g = detail::as_eigen(gram);
  const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("tall_skinny_svd: eigendecomposition failed");

  // Eigen sorts ascending; reverse for descending singular values.
  const auto n = static_cast<Eigen::Index>(cols);
  Eigen::MatrixXd v(n, n);
  std::vector<double> sigma(cols);
  for (Eigen::Index k = 0; k < n; ++k) {
    v.col(k) = eig.eigenvectors().col(n - 1 - k);
    sigma[static_cast<std::size_t>(k)] = std::sqrt(std::max(eig.eigenvalues()(n - 1 - k), 0.0));
  }
  if (sigma[0] == 0.0) throw NumericalError("tall_skinny_svd: matrix has rank zero");

  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index big = 0;
    v.col(k).cwiseAbs().maxCoeff(&big);
    if (v(big, k) < 0.0) v.col(k) = -v.col(k);
  }

  const double threshold = static_cast<double>(cols) * std::numeric_limits<double>::epsilon() * sigma[0];
  Eigen::MatrixXd scaled = v;
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double s = sigma[static_cast<std::size_t>(k)];
    if (s > threshold) {
      scaled.col(k) /= s;
      ++rank;
    } else {
      scaled.col(k).setZero();
    }
  }

  const OperandId a_id = exec.add_operand(a);
  SvdResult out;
  out.u = exec.multiply_abt(a_id, detail::from_eigen(scaled.transpose()));
  out.singular_values = std::move(sigma);
  out.v = detail::from_eigen(v);
  out.rank = rank;
  return out;
}

}  // namespace codedmm
