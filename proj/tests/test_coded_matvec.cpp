// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "codedmm/coded_matvec.hpp"
#include "codedmm/errors.hpp"
#include "test_support.hpp"

namespace codedmm {
namespace {

using testing::random_matrix;
using testing::random_vector;

MatvecSegments all_segments(const EncodedMatvec& enc, std::span<const double> x) {
  MatvecSegments out;
  for (const auto& block : enc.blocks) out.emplace_back(matvec_reference(block, x));
  return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

TEST(CodedMatvec, LayoutRoundsUpToWholeGroups) {
  const auto enc = encode_matvec(random_matrix(20, 6, 1), 5, 3);
  EXPECT_EQ(enc.plan.partition.num_blocks, 6u);
  EXPECT_EQ(enc.blocks.size(), 8u);
  EXPECT_EQ(enc.plan.layout.groups, 2u);
}

TEST(CodedMatvec, RecoversOneStragglerPerGroup) {
  const DenseMatrix a = random_matrix(23, 7, 2);
  const auto x = random_vector(7, 3);
  const auto want = matvec_reference(a, x);
  const auto enc = encode_matvec(a, 6, 3);
  const auto full = all_segments(enc, x);
  EXPECT_LT(max_diff(decode_matvec(full, enc.plan), want), 1e-12);
  // Every choice of one missing segment in each group.
  for (std::size_t m0 = 0; m0 < 4; ++m0) {
    for (std::size_t m1 = 4; m1 < 8; ++m1) {
      auto segs = full;
      segs[m0].reset();
      segs[m1].reset();
      EXPECT_TRUE(undecodable_groups(enc.plan, segs).empty());
      EXPECT_LT(max_diff(decode_matvec(segs, enc.plan), want), 1e-12) << m0 << "," << m1;
    }
  }
}

TEST(CodedMatvec, TwoMissingInOneGroupIsUndecodable) {
  const DenseMatrix a = random_matrix(8, 3, 4);
  const auto x = random_vector(3, 5);
  const auto enc = encode_matvec(a, 4, 2);
  auto segs = all_segments(enc, x);
  segs[3].reset();
  segs[5].reset();
  EXPECT_EQ(undecodable_groups(enc.plan, segs), (std::vector<std::size_t>{1}));
  EXPECT_THROW(decode_matvec(segs, enc.plan), NotDecodableError);
}

TEST(CodedMatvec, MissingParityNeedsNoWork) {
  const DenseMatrix a = random_matrix(9, 4, 6);
  const auto x = random_vector(4, 7);
  const auto enc = encode_matvec(a, 3, 3);
  auto segs = all_segments(enc, x);
  segs[3].reset();
  EXPECT_LT(max_diff(decode_matvec(segs, enc.plan), matvec_reference(a, x)), 1e-12);
}

TEST(CodedMatvec, RejectsWrongSegmentCount) {
  const auto enc = encode_matvec(random_matrix(4, 2, 8), 2, 2);
  MatvecSegments segs(2);
  EXPECT_ANY_THROW(decode_matvec(segs, enc.plan));
}

}  // namespace
}  // namespace codedmm
