// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_SRC_EIGEN_BRIDGE_HPP_
#define CODEDMM_SRC_EIGEN_BRIDGE_HPP_

#include <Eigen/Dense>

#include "codedmm/matrix.hpp"

namespace codedmm::detail {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMajorMatrix> as_eigen(const DenseMatrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

// A view of a temporary would dangle.
void as_eigen(DenseMatrix&&) = delete;

template <typename Derived>
DenseMatrix from_eigen(const Eigen::MatrixBase<Derived>& e) {
  DenseMatrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  Eigen::Map<RowMajorMatrix>(m.data().data(), e.rows(), e.cols()) = e;
  return m;
}

}  // namespace codedmm::detail

#endif  // CODEDMM_SRC_EIGEN_BRIDGE_HPP_
