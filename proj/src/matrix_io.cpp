// SPDX-License-Identifier: Apache-2.0

#include "codedmm/matrix_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace codedmm {

namespace {

constexpr char kMagic[4] = {'C', 'D', 'M', '1'};

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  auto raw = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  out.insert(out.end(), raw.begin(), raw.end());
}

template <typename T>
T get_le(std::span<const std::byte> bytes, std::size_t offset) {
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), bytes.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  return std::bit_cast<T>(raw);
}

}  // namespace

std::vector<std::byte> encode_matrix(const DenseMatrix& m) {
  std::vector<std::byte> out;
  out.reserve(encoded_matrix_bytes(m.rows(), m.cols()));
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint64_t>(out, m.rows());
  put_le<std::uint64_t>(out, m.cols());
  for (double v : m.data()) put_le<double>(out, v);
  return out;
}

DenseMatrix decode_matrix(std::span<const std::byte> bytes) {
  if (bytes.size() < kMatrixHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::invalid_argument("decode_matrix: missing CDM1 header");
  }
  const auto rows = get_le<std::uint64_t>(bytes, 4);
  const auto cols = get_le<std::uint64_t>(bytes, 12);
  if (rows == 0 || cols == 0 || rows > (bytes.size() / sizeof(double)) ||
      cols > (bytes.size() / sizeof(double)) ||
      bytes.size() != encoded_matrix_bytes(rows, cols)) {
    throw std::invalid_argument("decode_matrix: payload size does not match header " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> data(rows * cols);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = get_le<double>(bytes, kMatrixHeaderBytes + k * sizeof(double));
  }
  return DenseMatrix(rows, cols, std::move(data));
}

void write_matrix_file(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto bytes = encode_matrix(m);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

std::vector<std::byte> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return bytes;
}

}  // namespace

DenseMatrix read_matrix_file(const std::filesystem::path& path) { return decode_matrix(slurp(path)); }

DenseMatrix read_matrix_text(std::istream& in) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::size_t count = 0;
    double v = 0.0;
    while (fields >> v) {
      data.push_back(v);
      ++count;
    }
    if (!fields.eof()) throw std::invalid_argument("read_matrix_text: bad number on row " + std::to_string(rows));
    if (rows == 0) cols = count;
    if (count != cols) {
      throw std::invalid_argument("read_matrix_text: row " + std::to_string(rows) + " has " +
                                  std::to_string(count) + " values, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("read_matrix_text: empty input");
  return DenseMatrix(rows, cols, std::move(data));
}

void write_matrix_text(std::ostream& out, const DenseMatrix& m) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
    out << '\n';
  }
}

DenseMatrix load_matrix(const std::filesystem::path& path) {
  auto bytes = slurp(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) return decode_matrix(bytes);
  std::string text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::istringstream in(text);
  return read_matrix_text(in);
}

}  // namespace codedmm
