// SPDX-License-Identifier: Apache-2.0

#include "codedmm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace codedmm {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : DenseMatrix(rows, cols, std::vector<double>(rows * cols, 0.0)) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("DenseMatrix: dimensions must be at least 1x1");
  }
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("DenseMatrix: data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  if (rows_ == 0 || cols_ == 0) {
    throw std::invalid_argument("DenseMatrix: dimensions must be at least 1x1");
  }
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::column(std::span<const double> values) {
  return DenseMatrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double alpha) noexcept {
  for (double& v : data_) v *= alpha;
  return *this;
}

DenseMatrix operator+(DenseMatrix lhs, const DenseMatrix& rhs) { return lhs += rhs; }
DenseMatrix operator-(DenseMatrix lhs, const DenseMatrix& rhs) { return lhs -= rhs; }
DenseMatrix operator*(double alpha, DenseMatrix m) { return m *= alpha; }

double frobenius_norm(const DenseMatrix& m) noexcept { return norm2(m.data()); }

double relative_frobenius_error(const DenseMatrix& approx, const DenseMatrix& exact) {
  require_same_shape(approx, exact, "relative_frobenius_error");
  const double err = frobenius_norm(approx - exact);
  const double ref = frobenius_norm(exact);
  return ref == 0.0 ? err : err / ref;
}

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_difference");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
  }
  return worst;
}

RowBlocks partition_rows(const DenseMatrix& m, std::size_t num_blocks) {
  if (num_blocks == 0) throw std::invalid_argument("partition_rows: num_blocks must be >= 1");
  RowBlockPartition part;
  part.rows = m.rows();
  part.cols = m.cols();
  part.num_blocks = num_blocks;
  part.block_rows = (m.rows() + num_blocks - 1) / num_blocks;
  part.pad_rows = part.block_rows * num_blocks - m.rows();

  RowBlocks out;
  out.partition = part;
  out.blocks.reserve(num_blocks);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    DenseMatrix block(part.block_rows, part.cols);
    for (std::size_t r = 0; r < part.block_rows; ++r) {
      const std::size_t src = b * part.block_rows + r;
      if (src >= m.rows()) break;
      std::copy(m.row(src).begin(), m.row(src).end(), block.row(r).begin());
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

DenseMatrix unpartition_rows(std::span<const DenseMatrix> blocks, const RowBlockPartition& part) {
  if (blocks.size() != part.num_blocks) {
    throw std::invalid_argument("unpartition_rows: expected " + std::to_string(part.num_blocks) +
                                " blocks, got " + std::to_string(blocks.size()));
  }
  DenseMatrix m(part.rows, part.cols);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].rows() != part.block_rows || blocks[b].cols() != part.cols) {
      throw std::invalid_argument("unpartition_rows: block shape mismatch");
    }
    for (std::size_t r = 0; r < part.block_rows; ++r) {
      const std::size_t dst = b * part.block_rows + r;
      if (dst >= part.rows) break;
      std::copy(blocks[b].row(r).begin(), blocks[b].row(r).end(), m.row(dst).begin());
    }
  }
  return m;
}

DenseMatrix block_product(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("block_product: inner dimension mismatch " +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(ai, b.row(j));
  }
  return c;
}

DenseMatrix matmul_reference(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_reference: A has " + std::to_string(a.cols()) +
                                " columns, B has " + std::to_string(b.cols()));
  }
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(j, k);
      c(i, j) = sum;
    }
  }
  return c;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

std::vector<double> matvec_reference(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw std::invalid_argument("matvec_reference: A has " + std::to_string(a.cols()) +
                                " columns, x has " + std::to_string(x.size()) + " entries");
  }
  std::vector<double> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum;
}

double norm2(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace codedmm
