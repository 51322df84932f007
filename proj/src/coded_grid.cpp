// SPDX-License-Identifier: Apache-2.0

#include "codedmm/coded_grid.hpp"

#include <sstream>
#include <stdexcept>

#include "codedmm/errors.hpp"

namespace codedmm {

CodedProductGrid::CodedProductGrid(CodeParams params) : params_(params) {
  params_.validate();
  cells_.resize(rows() * cols());
}

std::size_t CodedProductGrid::index(GridCoord c) const {
  if (c.i >= rows() || c.j >= cols()) {
    throw std::invalid_argument("grid cell (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                                ") out of range");
  }
  return c.i * cols() + c.j;
}

void CodedProductGrid::set_state(GridCoord c, CellState s) {
  auto& cell = cells_.at(index(c));
  cell.state = s;
  if (s == CellState::kMissing) cell.payload.reset();
}

void CodedProductGrid::set_present(GridCoord c, DenseMatrix payload) {
  auto& cell = cells_.at(index(c));
  cell.state = CellState::kPresent;
  cell.payload = std::move(payload);
}

void CodedProductGrid::set_recovered(GridCoord c, DenseMatrix payload) {
  auto& cell = cells_.at(index(c));
  cell.state = CellState::kRecovered;
  cell.payload = std::move(payload);
}

SubgridId CodedProductGrid::subgrid_of(GridCoord c) const noexcept {
  return {c.i / params_.subgrid_rows(), c.j / params_.subgrid_cols()};
}

GridCoord CodedProductGrid::global(SubgridId id, CellCoord local) const noexcept {
  return {id.ga * params_.subgrid_rows() + local.row, id.gb * params_.subgrid_cols() + local.col};
}

bool CodedProductGrid::is_systematic(GridCoord c) const noexcept {
  return c.i % params_.subgrid_rows() < params_.la && c.j % params_.subgrid_cols() < params_.lb;
}

Subgrid CodedProductGrid::subgrid(SubgridId id) const {
  if (id.ga >= params_.groups_a() || id.gb >= params_.groups_b()) {
    throw std::invalid_argument("subgrid id out of range");
  }
  Subgrid sub(params_.la, params_.lb);
  for (std::size_t r = 0; r < sub.rows(); ++r) {
    for (std::size_t c = 0; c < sub.cols(); ++c) sub.set_state({r, c}, state(global(id, {r, c})));
  }
  return sub;
}

std::vector<GridCoord> CodedProductGrid::missing_systematic() const {
  std::vector<GridCoord> out;
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) {
      const GridCoord c{i, j};
      if (is_systematic(c) && !cells_[index(c)].payload) out.push_back(c);
    }
  }
  return out;
}

DecodeOutcome decode_subgrid(CodedProductGrid& grid, SubgridId id, const GridFetcher& fetch) {
  const Subgrid sub = grid.subgrid(id);
  DecodeOutcome plan = peel_decode_subgrid(sub);
  if (plan.steps.empty()) return plan;
  auto recovered = execute_peeling(sub, plan, [&](CellCoord local) {
    const GridCoord g = grid.global(id, local);
    if (fetch) return fetch(g);
    const auto& p = grid.payload(g);
    if (!p) throw std::logic_error("decode_subgrid: present cell has no payload");
    return *p;
  });
  for (auto& [local, block] : recovered) grid.set_recovered(grid.global(id, local), std::move(block));
  return plan;
}

std::vector<DecodeOutcome> decode_grid(CodedProductGrid& grid, const GridFetcher& fetch) {
  std::vector<DecodeOutcome> out;
  out.reserve(grid.params().subgrid_count());
  for (std::size_t ga = 0; ga < grid.params().groups_a(); ++ga) {
    for (std::size_t gb = 0; gb < grid.params().groups_b(); ++gb) {
      out.push_back(decode_subgrid(grid, {ga, gb}, fetch));
    }
  }
  return out;
}

DenseMatrix assemble_result(const CodedProductGrid& grid, const RowBlockPartition& pa,
                            const RowBlockPartition& pb) {
  const auto& params = grid.params();
  if (pa.num_blocks != params.ma || pb.num_blocks != params.mb) {
    throw std::invalid_argument("assemble_result: partitions do not match code parameters");
  }
  const auto missing = grid.missing_systematic();
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "not decodable: " << missing.size() << " systematic cell(s) missing:";
    for (const auto& c : missing) msg << " (" << c.i << "," << c.j << ")";
    throw NotDecodableError(msg.str());
  }
  DenseMatrix c(pa.rows, pb.rows);
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      const GridCoord cell{i, j};
      if (!grid.is_systematic(cell)) continue;
      const std::size_t bi = (i / params.subgrid_rows()) * params.la + i % params.subgrid_rows();
      const std::size_t bj = (j / params.subgrid_cols()) * params.lb + j % params.subgrid_cols();
      const DenseMatrix& block = *grid.payload(cell);
      if (block.rows() != pa.block_rows || block.cols() != pb.block_rows) {
        throw std::invalid_argument("assemble_result: block shape does not match partitions");
      }
      for (std::size_t r = 0; r < pa.block_rows; ++r) {
        const std::size_t row = bi * pa.block_rows + r;
        if (row >= pa.rows) break;
        for (std::size_t s = 0; s < pb.block_rows; ++s) {
          const std::size_t col = bj * pb.block_rows + s;
          if (col >= pb.rows) break;
          c(row, col) = block(r, s);
        }
      }
    }
  }
  return c;
}

const char* to_string(CellState s) noexcept {
  switch (s) {
    case CellState::kPresent: return "present";
    case CellState::kMissing: return "missing";
    case CellState::kRecovered: return "recovered";
  }
  return "?";
}

namespace {

CellState parse_state(const std::string& s) {
  if (s == "present") return CellState::kPresent;
  if (s == "missing") return CellState::kMissing;
  if (s == "recovered") return CellState::kRecovered;
  throw std::invalid_argument("manifest: unknown cell state '" + s + "'");
}

nlohmann::json partition_json(const RowBlockPartition& p) {
  return {{"rows", p.rows}, {"cols", p.cols}, {"block_rows", p.block_rows},
          {"num_blocks", p.num_blocks}, {"pad_rows", p.pad_rows}};
}

RowBlockPartition parse_partition(const nlohmann::json& j) {
  RowBlockPartition p;
  p.rows = j.at("rows").get<std::size_t>();
  p.cols = j.at("cols").get<std::size_t>();
  p.block_rows = j.at("block_rows").get<std::size_t>();
  p.num_blocks = j.at("num_blocks").get<std::size_t>();
  p.pad_rows = j.at("pad_rows").get<std::size_t>();
  if (p.block_rows * p.num_blocks != p.rows + p.pad_rows) {
    throw std::invalid_argument("manifest: inconsistent partition geometry");
  }
  return p;
}

}  // namespace

nlohmann::json grid_manifest(const CodedProductGrid& grid, const RowBlockPartition& pa,
                             const RowBlockPartition& pb) {
  const auto& p = grid.params();
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      cells.push_back({{"i", i}, {"j", j}, {"state", to_string(grid.state({i, j}))},
                       {"store_key", grid.store_key({i, j})}});
    }
  }
  return {{"schema", 1},
          {"params", {{"la", p.la}, {"lb", p.lb}, {"ma", p.ma}, {"mb", p.mb}}},
          {"partition_a", partition_json(pa)},
          {"partition_b", partition_json(pb)},
          {"cells", std::move(cells)}};
}

GridManifest parse_grid_manifest(const nlohmann::json& m) {
  if (m.at("schema").get<int>() != 1) throw std::invalid_argument("manifest: unsupported schema");
  const auto& jp = m.at("params");
  CodeParams params{jp.at("la").get<std::size_t>(), jp.at("lb").get<std::size_t>(),
                    jp.at("ma").get<std::size_t>(), jp.at("mb").get<std::size_t>()};
  GridManifest out{CodedProductGrid(params), parse_partition(m.at("partition_a")),
                   parse_partition(m.at("partition_b"))};
  if (out.partition_a.num_blocks != params.ma || out.partition_b.num_blocks != params.mb) {
    throw std::invalid_argument("manifest: partitions disagree with params");
  }
  for (const auto& cell : m.at("cells")) {
    const GridCoord c{cell.at("i").get<std::size_t>(), cell.at("j").get<std::size_t>()};
    out.grid.set_state(c, parse_state(cell.at("state").get<std::string>()));
    out.grid.set_store_key(c, cell.at("store_key").get<std::string>());
  }
  return out;
}

}  // namespace codedmm
