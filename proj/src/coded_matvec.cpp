// SPDX-License-Identifier: Apache-2.0

#include "codedmm/coded_matvec.hpp"

#include <sstream>
#include <stdexcept>

#include "codedmm/errors.hpp"

namespace codedmm {

EncodedMatvec encode_matvec(const DenseMatrix& a, std::size_t num_blocks, std::size_t group_size) {
  if (group_size == 0) throw std::invalid_argument("encode_matvec: L must be >= 1");
  if (num_blocks == 0) throw std::invalid_argument("encode_matvec: num_blocks must be >= 1");
  const std::size_t rounded = (num_blocks + group_size - 1) / group_size * group_size;
  auto split = partition_rows(a, rounded);
  auto encoded = encode_row_blocks(split.blocks, group_size);
  return {{split.partition, std::move(encoded.layout)}, std::move(encoded.blocks)};
}

std::vector<std::size_t> undecodable_groups(const CodedMatvecPlan& plan, const MatvecSegments& segments) {
  if (segments.size() != plan.layout.size()) {
    throw std::invalid_argument("decode_matvec: expected " + std::to_string(plan.layout.size()) +
                                " segments, got " + std::to_string(segments.size()));
  }
  std::vector<std::size_t> missing(plan.layout.groups, 0);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (!segments[k]) ++missing[plan.layout.tags[k].group];
  }
  std::vector<std::size_t> bad;
  for (std::size_t g = 0; g < missing.size(); ++g) {
    if (missing[g] >= 2) bad.push_back(g);
  }
  return bad;
}

std::vector<double> decode_matvec(const MatvecSegments& segments, const CodedMatvecPlan& plan) {
  const auto bad = undecodable_groups(plan, segments);
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "not decodable: group(s)";
    for (auto g : bad) msg << ' ' << g;
    msg << " have two or more missing segments";
    throw NotDecodableError(msg.str());
  }
  const std::size_t seg_len = plan.partition.block_rows;
  for (const auto& s : segments) {
    if (s && s->size() != seg_len) throw std::invalid_argument("decode_matvec: segment length mismatch");
  }

  const auto& layout = plan.layout;
  std::vector<double> y(plan.partition.rows);
  for (std::size_t g = 0; g < layout.groups; ++g) {
    const std::size_t base = g * (layout.group_size + 1);
    for (std::size_t j = 0; j < layout.group_size; ++j) {
      std::vector<double> seg;
      if (segments[base + j]) {
        seg = *segments[base + j];
      } else {
        seg = *segments[base + layout.group_size];
        for (std::size_t t = 0; t < layout.group_size; ++t) {
          if (t == j) continue;
          const auto& other = *segments[base + t];
          for (std::size_t r = 0; r < seg_len; ++r) seg[r] -= other[r];
        }
      }
      const std::size_t row0 = (g * layout.group_size + j) * seg_len;
      for (std::size_t r = 0; r < seg_len && row0 + r < y.size(); ++r) y[row0 + r] = seg[r];
    }
  }
  return y;
}

}  // namespace codedmm
