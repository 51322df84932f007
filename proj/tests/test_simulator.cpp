// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "codedmm/errors.hpp"
#include "codedmm/matrix_io.hpp"
#include "codedmm/simulator.hpp"
#include "test_support.hpp"

namespace codedmm {
namespace {

using testing::random_matrix;
using testing::random_vector;

double rel_error(const DenseMatrix& got, const DenseMatrix& want) {
  return frobenius_norm(got - want) / std::max(frobenius_norm(want), 1e-300);
}

SimConfig config(double p, std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.model.p = p;
  cfg.seed = seed;
  return cfg;
}

// Without jitter every non-straggler arrives at the same instant, so decoding
// never races a slightly late cell.
SimConfig steady(double p) {
  SimConfig cfg = config(p);
  cfg.model.jitter = 0.0;
  return cfg;
}

std::size_t sum(const std::vector<std::size_t>& v) { return std::accumulate(v.begin(), v.end(), std::size_t{0}); }

TEST(CodedMatmul, NoStragglersNoRecomputeNoReads) {
  const DenseMatrix a = random_matrix(16, 6, 1);
  const DenseMatrix b = random_matrix(12, 6, 2);
  const auto run = run_coded_matmul(a, b, CodeParams{2, 2, 4, 4}, steady(0.0));
  EXPECT_LT(rel_error(run.result, matmul_reference(a, b)), 1e-15);
  EXPECT_EQ(run.report.recomputed, 0u);
  EXPECT_EQ(run.report.undecodable_subgrids, 0u);
  EXPECT_EQ(sum(run.report.decode_reads), 0u);
  EXPECT_TRUE(run.report.stragglers.empty());
  EXPECT_EQ(run.report.compute_tasks, 36u);
}

TEST(CodedMatmul, OneForcedStragglerPerSubgridIsDecoded) {
  const DenseMatrix a = random_matrix(12, 5, 3);
  const DenseMatrix b = random_matrix(12, 5, 4);
  const CodeParams params{3, 3, 6, 6};
  SimConfig cfg = steady(0.0);
  // Coded grid is 8x8 with four 4x4 subgrids; one straggler in each.
  cfg.forced_stragglers = std::vector<std::size_t>{0 * 8 + 1, 2 * 8 + 6, 5 * 8 + 3, 7 * 8 + 7};
  const auto run = run_coded_matmul(a, b, params, cfg);
  EXPECT_LT(rel_error(run.result, matmul_reference(a, b)), 1e-12);
  EXPECT_EQ(run.report.recomputed, 0u);
  EXPECT_EQ(run.report.stragglers.size(), 4u);
  // (5,3) and (7,7) are parity cells and need no reads; the others read 3 each.
  EXPECT_EQ(sum(run.report.decode_reads), 6u);
}

TEST(CodedMatmul, ForcedRectangleIsRecomputed) {
  const DenseMatrix a = random_matrix(8, 4, 5);
  const DenseMatrix b = random_matrix(8, 4, 6);
  SimConfig cfg = config(0.0);
  // 6x6 coded grid; rectangle rows {0,1} x cols {3,4} lies in subgrid (0,1).
  cfg.forced_stragglers = std::vector<std::size_t>{0 * 6 + 3, 0 * 6 + 4, 1 * 6 + 3, 1 * 6 + 4};
  const auto run = run_coded_matmul(a, b, CodeParams{2, 2, 4, 4}, cfg);
  EXPECT_EQ(run.report.undecodable_subgrids, 1u);
  EXPECT_EQ(run.report.recomputed, 4u);
  EXPECT_LT(rel_error(run.result, matmul_reference(a, b)), 1e-12);
}

TEST(CodedMatmul, RectangleWithoutRecomputeIsNotDecodable) {
  const DenseMatrix a = random_matrix(8, 4, 5);
  const DenseMatrix b = random_matrix(8, 4, 6);
  SimConfig cfg = config(0.0);
  cfg.policy.recompute = false;
  cfg.forced_stragglers = std::vector<std::size_t>{0, 1, 6, 7};
  EXPECT_THROW(run_coded_matmul(a, b, CodeParams{2, 2, 4, 4}, cfg), NotDecodableError);
}

TEST(CodedMatmul, DeterministicInSeed) {
  const DenseMatrix a = random_matrix(20, 8, 7);
  const DenseMatrix b = random_matrix(20, 8, 8);
  SimConfig cfg = config(0.2, 42);
  const auto r1 = run_coded_matmul(a, b, CodeParams{2, 2, 6, 6}, cfg);
  const auto r2 = run_coded_matmul(a, b, CodeParams{2, 2, 6, 6}, cfg);
  EXPECT_EQ(to_json(r1.report).dump(), to_json(r2.report).dump());
  EXPECT_EQ(r1.result, r2.result);
  cfg.seed = 43;
  const auto r3 = run_coded_matmul(a, b, CodeParams{2, 2, 6, 6}, cfg);
  EXPECT_NE(to_json(r1.report).dump(), to_json(r3.report).dump());
}

TEST(CodedMatmul, StageTimesAddUp) {
  const DenseMatrix a = random_matrix(30, 6, 9);
  const auto run = run_coded_matmul(a, a, CodeParams{3, 3, 9, 9}, config(0.1, 5));
  const auto& r = run.report;
  EXPECT_GT(r.t_enc, 0.0);
  EXPECT_GT(r.t_comp, 0.0);
  EXPECT_GT(r.t_dec, 0.0);
  EXPECT_DOUBLE_EQ(r.t_total, r.t_enc + r.t_comp + r.t_dec);
  EXPECT_LE(r.wall_clock, r.t_total + 1e-9);
  EXPECT_LT(rel_error(run.result, matmul_reference(a, a)), 1e-12);
}

TEST(CodedMatmul, DecodeBytesMatchBlocksRead) {
  const DenseMatrix a = random_matrix(24, 6, 10);
  const DenseMatrix b = random_matrix(24, 6, 11);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto run = run_coded_matmul(a, b, CodeParams{3, 2, 6, 6}, config(0.15, seed));
    EXPECT_EQ(run.report.decode_bytes_read, sum(run.report.decode_reads) * run.report.output_block_bytes);
  }
}

TEST(CodedMatmul, SnapshotAndStoreHoldTheComputedCells) {
  const DenseMatrix a = random_matrix(8, 3, 12);
  SimConfig cfg = config(0.0);
  cfg.forced_stragglers = std::vector<std::size_t>{7};
  const auto run = run_coded_matmul(a, a, CodeParams{2, 2, 4, 4}, cfg);
  ASSERT_TRUE(run.snapshot.has_value());
  EXPECT_EQ(run.snapshot->state({1, 1}), CellState::kMissing);
  EXPECT_EQ(run.snapshot->state({0, 0}), CellState::kPresent);
  EXPECT_TRUE(run.store.contains("C/0/0"));
  EXPECT_EQ(run.snapshot->store_key({1, 1}), "C/1/1");
}

TEST(CodedMatmul, AmortizedOperandSkipsEncoding) {
  PreparedOperand a(random_matrix(12, 4, 13), 4, 2, "A");
  PreparedOperand b(random_matrix(12, 4, 14), 4, 2, "B");
  const auto first = run_coded_matmul(a, b, config(0.0));
  EXPECT_GT(first.report.encode_tasks, 0u);
  EXPECT_GT(first.report.t_enc, 0.0);
  a.mark_parities_encoded();
  b.mark_parities_encoded();
  const auto second = run_coded_matmul(a, b, config(0.0));
  EXPECT_EQ(second.report.encode_tasks, 0u);
  EXPECT_EQ(second.report.t_enc, 0.0);
  EXPECT_EQ(first.result, second.result);
}

TEST(CodedMatmul, SlowerStragglersNeverShortenTheRun) {
  const DenseMatrix a = random_matrix(24, 4, 15);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    double previous = 0.0;
    for (double factor : {1.5, 3.0, 6.0, 12.0}) {
      SimConfig cfg = config(0.1, seed);
      cfg.model.straggler_factor = factor;
      const double t = run_coded_matmul(a, a, CodeParams{3, 3, 6, 6}, cfg).report.t_total;
      EXPECT_GE(t, previous - 1e-9) << "seed " << seed << " factor " << factor;
      previous = t;
    }
  }
}

TEST(SpeculativeMatmul, NoStragglersMeansNoRelaunches) {
  const DenseMatrix a = random_matrix(10, 4, 16);
  const DenseMatrix b = random_matrix(6, 4, 17);
  SimConfig cfg = config(0.0);
  cfg.model.jitter = 0.0;
  const auto run = run_speculative_matmul(a, b, 5, 3, cfg);
  EXPECT_EQ(run.report.relaunched, 0u);
  EXPECT_EQ(run.report.compute_tasks, 15u);
  EXPECT_LT(rel_error(run.result, matmul_reference(a, b)), 1e-15);
  // Every task takes the same time, so the run is one task long.
  const double block_in = cfg.store.cost(encoded_matrix_bytes(2, 4));
  const double block_out = cfg.store.cost(encoded_matrix_bytes(2, 2));
  EXPECT_NEAR(run.report.t_total, 2 * block_in + block_out + cfg.model.base_time, 1e-9);
}

TEST(SpeculativeMatmul, AllStragglersRelaunchAfterTheQuantile) {
  const DenseMatrix a = random_matrix(10, 4, 18);
  SimConfig cfg = config(1.0);
  const auto run = run_speculative_matmul(a, a, 10, 10, cfg);
  // The slowest 21 of 100 tasks are relaunched; relaunches straggle too.
  EXPECT_EQ(run.report.relaunched, 21u);
  EXPECT_EQ(run.report.stragglers.size(), 100u);
  EXPECT_LT(rel_error(run.result, matmul_reference(a, a)), 1e-15);
}

TEST(ApplySpeculation, RelaunchFinishesFromTheTrigger) {
  const std::vector<double> d{1, 2, 3, 4, 10};
  const auto out = apply_speculation(d, 0.8, [](std::size_t) { return 2.0; });
  EXPECT_DOUBLE_EQ(out.trigger, 4.0);
  EXPECT_EQ(out.relaunched, 1u);
  EXPECT_DOUBLE_EQ(out.finish[4], 6.0);
  EXPECT_DOUBLE_EQ(out.finish[3], 4.0);
  // The original wins when it finishes first.
  const auto slow = apply_speculation(d, 0.8, [](std::size_t) { return 100.0; });
  EXPECT_DOUBLE_EQ(slow.finish[4], 10.0);
}

TEST(CodedMatvec, ExactWithoutStragglers) {
  const DenseMatrix a = random_matrix(30, 8, 19);
  const auto x = random_vector(8, 20);
  const auto run = run_coded_matvec(a, x, 6, 3, config(0.0));
  const auto want = matvec_reference(a, x);
  ASSERT_EQ(run.result.size(), want.size());
  for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(run.result[k], want[k], 1e-12);
  EXPECT_EQ(run.report.recomputed, 0u);
}

TEST(CodedMatvec, OneStragglerPerGroupDecodes) {
  const DenseMatrix a = random_matrix(12, 5, 21);
  const auto x = random_vector(5, 22);
  SimConfig cfg = config(0.0);
  cfg.forced_stragglers = std::vector<std::size_t>{1, 4};  // coded blocks of groups 0 and 1
  const auto run = run_coded_matvec(a, x, 4, 2, cfg);
  const auto want = matvec_reference(a, x);
  for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(run.result[k], want[k], 1e-12);
  EXPECT_EQ(run.report.recomputed, 0u);
  EXPECT_EQ(run.report.stragglers.size(), 2u);
}

TEST(CodedMatvec, IdentityReturnsInputUnderAnyStragglers) {
  const DenseMatrix id = DenseMatrix::identity(12);
  const auto x = random_vector(12, 23);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run = run_coded_matvec(id, x, 6, 2, config(0.4, seed));
    for (std::size_t k = 0; k < 12; ++k) EXPECT_NEAR(run.result[k], x[k], 1e-15);
  }
}

TEST(SpeculativeMatvec, MatchesReference) {
  const DenseMatrix a = random_matrix(9, 4, 24);
  const auto x = random_vector(4, 25);
  const auto run = run_speculative_matvec(a, x, 3, config(0.3, 2));
  const auto want = matvec_reference(a, x);
  for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(run.result[k], want[k], 1e-15);
  EXPECT_EQ(run.report.strategy, "speculative");
}

}  // namespace
}  // namespace codedmm
