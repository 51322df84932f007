// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_CODED_MATVEC_HPP_
#define CODEDMM_CODED_MATVEC_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "codedmm/local_product_code.hpp"
#include "codedmm/matrix.hpp"

namespace codedmm {

/// y = A x over locally encoded row blocks of A. Worker k computes
/// coded_block[k] * x; a parity worker's segment is the sum of its group's
/// segments, so one missing segment per group is a single subtraction away.
struct CodedMatvecPlan {
  RowBlockPartition partition;
  CodedLayout layout;
};

struct EncodedMatvec {
  CodedMatvecPlan plan;
  std::vector<DenseMatrix> blocks;
};

/// Partitions A into num_blocks row blocks (rounded up to a multiple of L)
/// and inserts one parity per group.
EncodedMatvec encode_matvec(const DenseMatrix& a, std::size_t num_blocks, std::size_t group_size);

/// One entry per coded block, in layout order; nullopt marks a straggler.
using MatvecSegments = std::vector<std::optional<std::vector<double>>>;

/// Groups with two or more missing segments.
std::vector<std::size_t> undecodable_groups(const CodedMatvecPlan& plan, const MatvecSegments& segments);

/// Recovers missing systematic segments and returns y (padding trimmed).
/// Throws NotDecodableError naming groups with two or more missing segments.
std::vector<double> decode_matvec(const MatvecSegments& segments, const CodedMatvecPlan& plan);

}  // namespace codedmm

#endif  // CODEDMM_CODED_MATVEC_HPP_
