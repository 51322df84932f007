// SPDX-License-Identifier: Apache-2.0

#include "codedmm/local_product_code.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

namespace codedmm {

void CodeParams::validate() const {
  if (la == 0 || lb == 0) throw std::invalid_argument("CodeParams: L_A and L_B must be >= 1");
  if (ma == 0 || mb == 0) throw std::invalid_argument("CodeParams: block counts must be >= 1");
  if (ma % la != 0) {
    throw std::invalid_argument("CodeParams: " + std::to_string(ma) +
                                " row blocks of A are not divisible by L_A=" + std::to_string(la));
  }
  if (mb % lb != 0) {
    throw std::invalid_argument("CodeParams: " + std::to_string(mb) +
                                " row blocks of B are not divisible by L_B=" + std::to_string(lb));
  }
}

CodeParams CodeParams::with_min_blocks(std::size_t la, std::size_t lb, std::size_t min_blocks_a,
                                       std::size_t min_blocks_b) {
  if (la == 0 || lb == 0) throw std::invalid_argument("CodeParams: L_A and L_B must be >= 1");
  auto round_up = [](std::size_t n, std::size_t l) { return ((n == 0 ? 1 : n) + l - 1) / l * l; };
  CodeParams p{la, lb, round_up(min_blocks_a, la), round_up(min_blocks_b, lb)};
  p.validate();
  return p;
}

double CodeParams::redundancy_fraction() const noexcept {
  return 1.0 - static_cast<double>(la * lb) / static_cast<double>((la + 1) * (lb + 1));
}

CodedLayout CodedLayout::make(std::size_t num_systematic, std::size_t group_size) {
  if (group_size == 0) throw std::invalid_argument("CodedLayout: group size must be >= 1");
  if (num_systematic == 0 || num_systematic % group_size != 0) {
    throw std::invalid_argument("CodedLayout: " + std::to_string(num_systematic) +
                                " blocks are not a positive multiple of L=" + std::to_string(group_size));
  }
  CodedLayout layout;
  layout.group_size = group_size;
  layout.groups = num_systematic / group_size;
  layout.tags.reserve(num_systematic + layout.groups);
  for (std::size_t g = 0; g < layout.groups; ++g) {
    for (std::size_t j = 0; j < group_size; ++j) {
      layout.tags.push_back({BlockRole::kSystematic, g, j, g * group_size + j});
    }
    layout.tags.push_back({BlockRole::kParity, g, group_size, 0});
  }
  return layout;
}

std::size_t CodedLayout::coded_index_of_systematic(std::size_t source) const {
  const std::size_t g = source / group_size;
  if (g >= groups) throw std::invalid_argument("CodedLayout: systematic index out of range");
  return g * (group_size + 1) + source % group_size;
}

std::size_t CodedLayout::coded_index_of_parity(std::size_t group) const {
  if (group >= groups) throw std::invalid_argument("CodedLayout: group index out of range");
  return group * (group_size + 1) + group_size;
}

DenseMatrix group_parity(std::span<const DenseMatrix> blocks, const CodedLayout& layout,
                         std::size_t group) {
  if (group >= layout.groups) throw std::invalid_argument("group_parity: group out of range");
  DenseMatrix sum = blocks[group * layout.group_size];
  for (std::size_t j = 1; j < layout.group_size; ++j) sum += blocks[group * layout.group_size + j];
  return sum;
}

EncodedBlocks encode_row_blocks(std::span<const DenseMatrix> blocks, std::size_t group_size) {
  if (group_size == 0) throw std::invalid_argument("encode_row_blocks: L must be >= 1");
  if (blocks.empty() || blocks.size() % group_size != 0) {
    throw std::invalid_argument("encode_row_blocks: " + std::to_string(blocks.size()) +
                                " blocks are not divisible into groups of " +
                                std::to_string(group_size));
  }
  for (const auto& b : blocks) {
    if (b.rows() != blocks[0].rows() || b.cols() != blocks[0].cols()) {
      throw std::invalid_argument("encode_row_blocks: blocks differ in shape");
    }
  }
  EncodedBlocks out;
  out.layout = CodedLayout::make(blocks.size(), group_size);
  out.blocks.reserve(out.layout.size());
  for (const auto& tag : out.layout.tags) {
    if (tag.role == BlockRole::kSystematic) {
      out.blocks.push_back(blocks[tag.source]);
    } else {
      out.blocks.push_back(group_parity(blocks, out.layout, tag.group));
    }
  }
  return out;
}

namespace {

DenseMatrix coded_row(const CodedLayout& layout, std::size_t i, std::span<const DenseMatrix> blocks) {
  if (i >= layout.size()) {
    throw std::invalid_argument("coded index " + std::to_string(i) + " out of range (" +
                                std::to_string(layout.size()) + " coded blocks)");
  }
  if (blocks.size() != layout.groups * layout.group_size) {
    throw std::invalid_argument("coded_cell_value: block list does not match layout");
  }
  const auto& tag = layout.tags[i];
  return tag.role == BlockRole::kSystematic ? blocks[tag.source] : group_parity(blocks, layout, tag.group);
}

}  // namespace

DenseMatrix coded_cell_value(const CodedLayout& layout_a, const CodedLayout& layout_b,
                             std::size_t i, std::size_t j, std::span<const DenseMatrix> blocks_a,
                             std::span<const DenseMatrix> blocks_b) {
  return block_product(coded_row(layout_a, i, blocks_a), coded_row(layout_b, j, blocks_b));
}

// --- Subgrid ----------------------------------------------------------------

Subgrid::Subgrid(std::size_t la, std::size_t lb) : la_(la), lb_(lb) {
  if (la == 0 || lb == 0) throw std::invalid_argument("Subgrid: L_A and L_B must be >= 1");
  states_.assign((la + 1) * (lb + 1), CellState::kPresent);
}

std::size_t Subgrid::index(CellCoord c) const {
  if (c.row >= rows() || c.col >= cols()) {
    throw std::invalid_argument("cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                                ") outside " + std::to_string(rows()) + "x" + std::to_string(cols()) +
                                " subgrid");
  }
  return c.row * cols() + c.col;
}

void Subgrid::set_missing(std::span<const CellCoord> cells) {
  for (const auto& c : cells) set_state(c, CellState::kMissing);
}

std::size_t Subgrid::missing_count() const noexcept {
  std::size_t n = 0;
  for (auto s : states_) n += s == CellState::kMissing;
  return n;
}

DecodeOutcome peel_decode_subgrid(const Subgrid& grid) {
  const std::size_t rows = grid.rows();
  const std::size_t cols = grid.cols();
  std::vector<CellState> state(grid.states().begin(), grid.states().end());
  std::vector<char> fetched(state.size(), 0);
  std::vector<std::size_t> row_missing(rows, 0);
  std::vector<std::size_t> col_missing(cols, 0);
  std::size_t remaining = 0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (state[k] == CellState::kMissing) {
      ++row_missing[k / cols];
      ++col_missing[k % cols];
      ++remaining;
    }
  }

  DecodeOutcome out;
  auto new_fetches = [&](std::size_t r, std::size_t c, RecoveryAxis axis) {
    std::size_t n = 0;
    const std::size_t len = axis == RecoveryAxis::kRow ? cols : rows;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t k = axis == RecoveryAxis::kRow ? r * cols + t : t * cols + c;
      if (k == r * cols + c) continue;
      n += state[k] == CellState::kPresent && !fetched[k];
    }
    return n;
  };

  bool progress = remaining > 0;
  while (progress && remaining > 0) {
    progress = false;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t k = r * cols + c;
        if (state[k] != CellState::kMissing) continue;
        const bool via_row = row_missing[r] == 1;
        const bool via_col = col_missing[c] == 1;
        if (!via_row && !via_col) continue;

        RecoveryAxis axis = via_row ? RecoveryAxis::kRow : RecoveryAxis::kColumn;
        if (via_row && via_col &&
            new_fetches(r, c, RecoveryAxis::kColumn) < new_fetches(r, c, RecoveryAxis::kRow)) {
          axis = RecoveryAxis::kColumn;
        }

        PeelStep step{{r, c}, axis, {}};
        const std::size_t len = axis == RecoveryAxis::kRow ? cols : rows;
        for (std::size_t t = 0; t < len; ++t) {
          const std::size_t s = axis == RecoveryAxis::kRow ? r * cols + t : t * cols + c;
          if (s == k || state[s] != CellState::kPresent || fetched[s]) continue;
          fetched[s] = 1;
          step.fetched.push_back(grid.coord(s));
        }
        out.blocks_read += step.fetched.size();
        out.steps.push_back(std::move(step));
        out.recovered.push_back({r, c});

        state[k] = CellState::kRecovered;
        --row_missing[r];
        --col_missing[c];
        --remaining;
        progress = true;
      }
    }
  }

  // Keep only the parity recoveries some systematic recovery depends on,
  // then recount the fetches of the steps that remain.
  auto line_cells = [&](const PeelStep& st) {
    std::vector<std::size_t> cells;
    const std::size_t len = st.axis == RecoveryAxis::kRow ? cols : rows;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t s = st.axis == RecoveryAxis::kRow ? st.cell.row * cols + t : t * cols + st.cell.col;
      if (s != grid.index(st.cell)) cells.push_back(s);
    }
    return cells;
  };
  std::vector<char> needed(state.size(), 0);
  std::vector<PeelStep> kept;
  for (std::size_t i = out.steps.size(); i-- > 0;) {
    PeelStep& st = out.steps[i];
    const std::size_t k = grid.index(st.cell);
    if (!grid.is_systematic(st.cell) && !needed[k]) {
      state[k] = CellState::kMissing;
      continue;
    }
    for (std::size_t s : line_cells(st)) {
      if (grid.states()[s] == CellState::kMissing) needed[s] = 1;
    }
    kept.push_back(std::move(st));
  }
  std::reverse(kept.begin(), kept.end());
  std::fill(fetched.begin(), fetched.end(), 0);
  out.blocks_read = 0;
  out.recovered.clear();
  for (PeelStep& st : kept) {
    st.fetched.clear();
    for (std::size_t s : line_cells(st)) {
      if (grid.states()[s] != CellState::kPresent || fetched[s]) continue;
      fetched[s] = 1;
      st.fetched.push_back(grid.coord(s));
    }
    out.blocks_read += st.fetched.size();
    out.recovered.push_back(st.cell);
  }
  out.steps = std::move(kept);

  for (std::size_t k = 0; k < state.size(); ++k) {
    if (state[k] != CellState::kMissing) continue;
    const CellCoord c = grid.coord(k);
    (grid.is_systematic(c) ? out.undecodable : out.stuck_parities).push_back(c);
  }
  return out;
}

bool is_decodable(std::span<const CellCoord> missing, std::size_t la, std::size_t lb) {
  Subgrid grid(la, lb);
  grid.set_missing(missing);
  return peel_decode_subgrid(grid).decoded();
}

std::map<CellCoord, DenseMatrix> execute_peeling(const Subgrid& grid, const DecodeOutcome& plan,
                                                 const BlockFetcher& fetch) {
  std::map<CellCoord, DenseMatrix> known;
  std::map<CellCoord, DenseMatrix> recovered;
  for (const auto& step : plan.steps) {
    for (const auto& c : step.fetched) known.emplace(c, fetch(c));

    const bool row = step.axis == RecoveryAxis::kRow;
    const std::size_t len = row ? grid.cols() : grid.rows();
    const std::size_t parity_pos = len - 1;
    const std::size_t own_pos = row ? step.cell.col : step.cell.row;

    // The parity at the end of the line equals the sum of the others.
    std::optional<DenseMatrix> acc;
    for (std::size_t t = 0; t < len; ++t) {
      if (t == own_pos) continue;
      const CellCoord src = row ? CellCoord{step.cell.row, t} : CellCoord{t, step.cell.col};
      auto it = known.find(src);
      if (it == known.end()) {
        throw std::logic_error("execute_peeling: source cell not available");
      }
      const bool negate = own_pos != parity_pos && t != parity_pos;
      if (!acc) {
        acc = it->second;
        if (negate) *acc *= -1.0;
      } else if (negate) {
        *acc -= it->second;
      } else {
        *acc += it->second;
      }
    }
    known.emplace(step.cell, *acc);
    recovered.emplace(step.cell, std::move(*acc));
  }
  return recovered;
}

}  // namespace codedmm
