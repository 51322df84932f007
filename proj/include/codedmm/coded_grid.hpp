// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_CODED_GRID_HPP_
#define CODEDMM_CODED_GRID_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "codedmm/local_product_code.hpp"
#include "codedmm/matrix.hpp"
#include "json.hpp"

namespace codedmm {

struct GridCoord {
  std::size_t i = 0;  // coded row-block index of A
  std::size_t j = 0;  // coded row-block index of B
  friend auto operator<=>(const GridCoord&, const GridCoord&) = default;
};

struct SubgridId {
  std::size_t ga = 0;
  std::size_t gb = 0;
  friend auto operator<=>(const SubgridId&, const SubgridId&) = default;
};

/// State of C_coded = A_coded B_coded^T, one cell per coded block pair.
/// Cells start out missing.
class CodedProductGrid {
 public:
  explicit CodedProductGrid(CodeParams params);

  const CodeParams& params() const noexcept { return params_; }
  std::size_t rows() const noexcept { return params_.coded_rows(); }
  std::size_t cols() const noexcept { return params_.coded_cols(); }

  CellState state(GridCoord c) const { return cells_.at(index(c)).state; }
  /// Marking a cell missing drops its payload.
  void set_state(GridCoord c, CellState s);

  /// Stores a payload and marks the cell present.
  void set_present(GridCoord c, DenseMatrix payload);
  void set_recovered(GridCoord c, DenseMatrix payload);
  const std::optional<DenseMatrix>& payload(GridCoord c) const { return cells_.at(index(c)).payload; }

  const std::string& store_key(GridCoord c) const { return cells_.at(index(c)).store_key; }
  void set_store_key(GridCoord c, std::string key) { cells_.at(index(c)).store_key = std::move(key); }

  SubgridId subgrid_of(GridCoord c) const noexcept;
  GridCoord global(SubgridId id, CellCoord local) const noexcept;
  bool is_systematic(GridCoord c) const noexcept;

  /// Snapshot of one subgrid's cell states.
  Subgrid subgrid(SubgridId id) const;

  std::vector<GridCoord> missing_systematic() const;

 private:
  struct Cell {
    CellState state = CellState::kMissing;
    std::optional<DenseMatrix> payload;
    std::string store_key;
  };

  std::size_t index(GridCoord c) const;

  CodeParams params_;
  std::vector<Cell> cells_;
};

using GridFetcher = std::function<DenseMatrix(GridCoord)>;

/// Peels one subgrid, pulling present payloads through fetch (defaults to the
/// payloads held by the grid). Recovered cells become kRecovered.
DecodeOutcome decode_subgrid(CodedProductGrid& grid, SubgridId id, const GridFetcher& fetch = {});

/// Decodes every subgrid in row-major subgrid order.
std::vector<DecodeOutcome> decode_grid(CodedProductGrid& grid, const GridFetcher& fetch = {});

/// Stitches the systematic cells into C = A B^T, trimming padding. Throws
/// NotDecodableError listing any systematic cell without a payload.
DenseMatrix assemble_result(const CodedProductGrid& grid, const RowBlockPartition& partition_a,
                            const RowBlockPartition& partition_b);

/// {"schema", "params", "partition_a", "partition_b", "cells": [{i, j, state, store_key}]}.
/// Payloads are referenced by store key only.
nlohmann::json grid_manifest(const CodedProductGrid& grid, const RowBlockPartition& partition_a,
                             const RowBlockPartition& partition_b);

struct GridManifest {
  CodedProductGrid grid;
  RowBlockPartition partition_a;
  RowBlockPartition partition_b;
};

/// Rebuilds grid states and keys from a manifest; payloads are not loaded.
GridManifest parse_grid_manifest(const nlohmann::json& manifest);

const char* to_string(CellState s) noexcept;

}  // namespace codedmm

#endif  // CODEDMM_CODED_GRID_HPP_
