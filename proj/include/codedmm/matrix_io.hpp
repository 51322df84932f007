// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_MATRIX_IO_HPP_
#define CODEDMM_MATRIX_IO_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "codedmm/matrix.hpp"

namespace codedmm {

// Binary layout: "CDM1", u64 rows, u64 cols, rows*cols f64 values, all
// little-endian, row-major.
inline constexpr std::size_t kMatrixHeaderBytes = 4 + 8 + 8;

std::vector<std::byte> encode_matrix(const DenseMatrix& m);
DenseMatrix decode_matrix(std::span<const std::byte> bytes);

/// Serialized size of a rows x cols matrix.
constexpr std::size_t encoded_matrix_bytes(std::size_t rows, std::size_t cols) {
  return kMatrixHeaderBytes + rows * cols * sizeof(double);
}

void write_matrix_file(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_matrix_file(const std::filesystem::path& path);

/// Whitespace-separated text, one matrix row per line. Blank lines and lines
/// starting with '#' are skipped.
DenseMatrix read_matrix_text(std::istream& in);
void write_matrix_text(std::ostream& out, const DenseMatrix& m);

/// Reads either format, chosen by the leading magic bytes.
DenseMatrix load_matrix(const std::filesystem::path& path);

}  // namespace codedmm

#endif  // CODEDMM_MATRIX_IO_HPP_
