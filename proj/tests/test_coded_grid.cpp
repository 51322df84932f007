// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "codedmm/coded_grid.hpp"
#include "codedmm/errors.hpp"
#include "test_support.hpp"

namespace codedmm {
namespace {

using testing::random_matrix;

struct Fixture {
  DenseMatrix a;
  DenseMatrix b;
  RowBlocks pa;
  RowBlocks pb;
  CodedProductGrid grid;
};

// Fills every coded cell of A B^T with its product.
Fixture full_grid(std::size_t la, std::size_t lb, std::size_t ma, std::size_t mb, std::size_t rows_a,
                  std::size_t rows_b, std::size_t inner, std::uint64_t seed) {
  DenseMatrix a = random_matrix(rows_a, inner, seed);
  DenseMatrix b = random_matrix(rows_b, inner, seed + 1);
  RowBlocks pa = partition_rows(a, ma);
  RowBlocks pb = partition_rows(b, mb);
  const auto ea = encode_row_blocks(pa.blocks, la);
  const auto eb = encode_row_blocks(pb.blocks, lb);
  CodedProductGrid grid(CodeParams{la, lb, ma, mb});
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      grid.set_present({i, j}, block_product(ea.blocks[i], eb.blocks[j]));
    }
  }
  return {std::move(a), std::move(b), std::move(pa), std::move(pb), std::move(grid)};
}

void drop(CodedProductGrid& grid, GridCoord c) { grid.set_state(c, CellState::kMissing); }

TEST(CodedProductGrid, SubgridCoordinates) {
  CodedProductGrid grid(CodeParams{2, 3, 4, 6});
  EXPECT_EQ(grid.rows(), 6u);
  EXPECT_EQ(grid.cols(), 8u);
  EXPECT_EQ(grid.subgrid_of({4, 5}), (SubgridId{1, 1}));
  EXPECT_EQ(grid.global({1, 0}, {2, 3}), (GridCoord{5, 3}));
  EXPECT_TRUE(grid.is_systematic({3, 4}));
  EXPECT_FALSE(grid.is_systematic({2, 0}));
  EXPECT_FALSE(grid.is_systematic({0, 7}));
  EXPECT_EQ(grid.missing_systematic().size(), 24u);
}

TEST(CodedProductGrid, FullGridAssemblesTheProduct) {
  auto f = full_grid(2, 2, 4, 4, 10, 7, 5, 1);
  const DenseMatrix c = assemble_result(f.grid, f.pa.partition, f.pb.partition);
  EXPECT_LT(max_abs_difference(c, matmul_reference(f.a, f.b)), 1e-12);
}

TEST(CodedProductGrid, DecodesStragglersAcrossSubgrids) {
  auto f = full_grid(3, 2, 6, 4, 12, 9, 4, 2);
  drop(f.grid, {0, 0});
  drop(f.grid, {1, 1});
  drop(f.grid, {3, 2});  // parity row of the first subgrid row, parity column
  drop(f.grid, {5, 4});
  drop(f.grid, {4, 5});
  const auto outcomes = decode_grid(f.grid);
  ASSERT_EQ(outcomes.size(), 4u);
  for (const auto& o : outcomes) EXPECT_TRUE(o.decoded());
  EXPECT_TRUE(f.grid.missing_systematic().empty());
  EXPECT_EQ(f.grid.state({0, 0}), CellState::kRecovered);
  const DenseMatrix c = assemble_result(f.grid, f.pa.partition, f.pb.partition);
  EXPECT_LT(max_abs_difference(c, matmul_reference(f.a, f.b)), 1e-10);
}

TEST(CodedProductGrid, FetcherIsUsedForPresentCells) {
  auto f = full_grid(2, 2, 2, 2, 4, 4, 3, 3);
  drop(f.grid, {1, 1});
  std::vector<GridCoord> fetched;
  const auto out = decode_subgrid(f.grid, {0, 0}, [&](GridCoord c) {
    fetched.push_back(c);
    return *f.grid.payload(c);
  });
  EXPECT_TRUE(out.decoded());
  EXPECT_EQ(fetched.size(), out.blocks_read);
  EXPECT_EQ(fetched.size(), 2u);
}

TEST(CodedProductGrid, RectangleRaisesNotDecodable) {
  auto f = full_grid(2, 2, 2, 2, 4, 4, 3, 4);
  for (GridCoord c : {GridCoord{0, 0}, GridCoord{0, 1}, GridCoord{1, 0}, GridCoord{1, 1}}) drop(f.grid, c);
  const auto out = decode_subgrid(f.grid, {0, 0});
  EXPECT_FALSE(out.decoded());
  EXPECT_EQ(out.undecodable.size(), 4u);
  EXPECT_THROW(assemble_result(f.grid, f.pa.partition, f.pb.partition), NotDecodableError);
}

TEST(CodedProductGrid, ManifestRoundTrip) {
  auto f = full_grid(2, 1, 4, 2, 8, 3, 2, 5);
  f.grid.set_store_key({0, 0}, "C/0/0");
  drop(f.grid, {2, 1});
  f.grid.set_state({4, 0}, CellState::kRecovered);
  const auto json = grid_manifest(f.grid, f.pa.partition, f.pb.partition);
  EXPECT_EQ(json.at("schema"), 1);
  const auto parsed = parse_grid_manifest(json);
  EXPECT_EQ(parsed.grid.params(), f.grid.params());
  EXPECT_EQ(parsed.partition_a, f.pa.partition);
  EXPECT_EQ(parsed.partition_b, f.pb.partition);
  for (std::size_t i = 0; i < f.grid.rows(); ++i) {
    for (std::size_t j = 0; j < f.grid.cols(); ++j) {
      EXPECT_EQ(parsed.grid.state({i, j}), f.grid.state({i, j}));
      EXPECT_EQ(parsed.grid.store_key({i, j}), f.grid.store_key({i, j}));
      EXPECT_FALSE(parsed.grid.payload({i, j}).has_value());
    }
  }
  auto bad = json;
  bad["params"]["la"] = 3;
  EXPECT_ANY_THROW(parse_grid_manifest(bad));
}

TEST(CodedProductGrid, RejectsOutOfRangeCells) {
  CodedProductGrid grid(CodeParams{1, 1, 1, 1});
  EXPECT_ANY_THROW(grid.state({2, 0}));
  EXPECT_ANY_THROW(grid.set_present({0, 2}, DenseMatrix(1, 1)));
}

}  // namespace
}  // namespace codedmm
