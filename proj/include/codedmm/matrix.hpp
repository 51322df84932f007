// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_MATRIX_HPP_
#define CODEDMM_MATRIX_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace codedmm {

/// Row-major dense matrix of doubles. Always at least 1x1.
class DenseMatrix {
 public:
  /// Zero-filled rows x cols matrix.
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  DenseMatrix transpose() const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double alpha) noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix lhs, const DenseMatrix& rhs);
DenseMatrix operator-(DenseMatrix lhs, const DenseMatrix& rhs);
DenseMatrix operator*(double alpha, DenseMatrix m);

double frobenius_norm(const DenseMatrix& m) noexcept;

/// ||approx - exact||_F / ||exact||_F, or the absolute error when exact is zero.
double relative_frobenius_error(const DenseMatrix& approx, const DenseMatrix& exact);

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b);

/// Geometry of a row-block split. The source is zero-padded at the bottom
/// so that every block has block_rows rows.
struct RowBlockPartition {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t block_rows = 0;
  std::size_t num_blocks = 0;
  std::size_t pad_rows = 0;

  friend bool operator==(const RowBlockPartition&, const RowBlockPartition&) = default;
};

struct RowBlocks {
  std::vector<DenseMatrix> blocks;
  RowBlockPartition partition;
};

/// Splits m into num_blocks equal row blocks of ceil(rows/num_blocks) rows.
RowBlocks partition_rows(const DenseMatrix& m, std::size_t num_blocks);

/// Inverse of partition_rows: stacks the blocks and trims the padding.
DenseMatrix unpartition_rows(std::span<const DenseMatrix> blocks, const RowBlockPartition& partition);

/// a * b^T for two row blocks sharing the column count.
DenseMatrix block_product(const DenseMatrix& a, const DenseMatrix& b);

/// C = A B^T, plain triple loop.
DenseMatrix matmul_reference(const DenseMatrix& a, const DenseMatrix& b);

/// Ordinary product a * b (a.cols == b.rows).
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

std::vector<double> matvec_reference(const DenseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

}  // namespace codedmm

#endif  // CODEDMM_MATRIX_HPP_
