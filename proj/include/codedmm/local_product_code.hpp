// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_LOCAL_PRODUCT_CODE_HPP_
#define CODEDMM_LOCAL_PRODUCT_CODE_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "codedmm/matrix.hpp"

namespace codedmm {

/// Redundancy parameters of a local product code plus the number of
/// systematic row blocks of each operand.
struct CodeParams {
  std::size_t la = 1;  // systematic blocks of A per parity group
  std::size_t lb = 1;  // systematic blocks of B per parity group
  std::size_t ma = 1;  // systematic row blocks of A
  std::size_t mb = 1;  // systematic row blocks of B

  /// Throws std::invalid_argument unless la, lb >= 1 and la | ma, lb | mb.
  void validate() const;

  /// Rounds the requested block counts up to whole groups.
  static CodeParams with_min_blocks(std::size_t la, std::size_t lb, std::size_t min_blocks_a,
                                    std::size_t min_blocks_b);

  std::size_t groups_a() const noexcept { return ma / la; }
  std::size_t groups_b() const noexcept { return mb / lb; }
  std::size_t coded_rows() const noexcept { return ma + groups_a(); }
  std::size_t coded_cols() const noexcept { return mb + groups_b(); }
  std::size_t subgrid_rows() const noexcept { return la + 1; }
  std::size_t subgrid_cols() const noexcept { return lb + 1; }
  std::size_t subgrid_count() const noexcept { return groups_a() * groups_b(); }
  std::size_t locality() const noexcept { return la < lb ? la : lb; }
  std::size_t max_group() const noexcept { return la < lb ? lb : la; }

  /// Parity cells over all cells of a subgrid: 1 - la*lb / ((la+1)(lb+1)).
  double redundancy_fraction() const noexcept;

  friend bool operator==(const CodeParams&, const CodeParams&) = default;
};

enum class BlockRole : std::uint8_t { kSystematic, kParity };

struct CodedBlockTag {
  BlockRole role = BlockRole::kSystematic;
  std::size_t group = 0;
  std::size_t position = 0;  // index inside the group; the parity sits at position L
  std::size_t source = 0;    // original block index (systematic only)

  friend bool operator==(const CodedBlockTag&, const CodedBlockTag&) = default;
};

/// Order of coded row blocks: each group's L systematic blocks followed by
/// their parity, e.g. A1, A2, A1+A2, A3, A4, A3+A4 for L = 2.
struct CodedLayout {
  std::size_t group_size = 1;
  std::size_t groups = 0;
  std::vector<CodedBlockTag> tags;

  static CodedLayout make(std::size_t num_systematic, std::size_t group_size);

  std::size_t size() const noexcept { return tags.size(); }
  std::size_t coded_index_of_systematic(std::size_t source) const;
  std::size_t coded_index_of_parity(std::size_t group) const;
};

struct EncodedBlocks {
  CodedLayout layout;
  std::vector<DenseMatrix> blocks;  // in layout order
};

/// Inserts one parity (entry-wise sum) after every group of L blocks.
EncodedBlocks encode_row_blocks(std::span<const DenseMatrix> blocks, std::size_t group_size);

/// Entry-wise sum of the systematic blocks in one group.
DenseMatrix group_parity(std::span<const DenseMatrix> blocks, const CodedLayout& layout,
                         std::size_t group);

/// A_coded[i] * B_coded[j]^T computed from the original (unencoded) blocks.
DenseMatrix coded_cell_value(const CodedLayout& layout_a, const CodedLayout& layout_b,
                             std::size_t i, std::size_t j, std::span<const DenseMatrix> blocks_a,
                             std::span<const DenseMatrix> blocks_b);

// ---------------------------------------------------------------------------
// Peeling decoder over one (la+1) x (lb+1) subgrid. The last row and the last
// column are parities: every row and every column sums to its final cell.

enum class CellState : std::uint8_t { kPresent, kMissing, kRecovered };

struct CellCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const CellCoord&, const CellCoord&) = default;
};

enum class RecoveryAxis : std::uint8_t { kRow, kColumn };

struct PeelStep {
  CellCoord cell;
  RecoveryAxis axis = RecoveryAxis::kRow;
  std::vector<CellCoord> fetched;  // present cells first read from the store by this step
};

struct DecodeOutcome {
  std::vector<CellCoord> recovered;
  std::size_t blocks_read = 0;            // distinct present cells fetched
  std::vector<CellCoord> undecodable;     // systematic cells still missing
  std::vector<CellCoord> stuck_parities;  // parity cells still missing
  std::vector<PeelStep> steps;

  bool decoded() const noexcept { return undecodable.empty(); }
};

class Subgrid {
 public:
  /// All cells present.
  Subgrid(std::size_t la, std::size_t lb);

  std::size_t la() const noexcept { return la_; }
  std::size_t lb() const noexcept { return lb_; }
  std::size_t rows() const noexcept { return la_ + 1; }
  std::size_t cols() const noexcept { return lb_ + 1; }
  std::size_t cell_count() const noexcept { return states_.size(); }

  CellState state(CellCoord c) const { return states_.at(index(c)); }
  void set_state(CellCoord c, CellState s) { states_.at(index(c)) = s; }
  void set_missing(std::span<const CellCoord> cells);

  bool is_systematic(CellCoord c) const noexcept { return c.row < la_ && c.col < lb_; }
  std::size_t missing_count() const noexcept;
  std::span<const CellState> states() const noexcept { return states_; }

  std::size_t index(CellCoord c) const;
  CellCoord coord(std::size_t index) const noexcept { return {index / cols(), index % cols()}; }

 private:
  std::size_t la_;
  std::size_t lb_;
  std::vector<CellState> states_;
};

/// Plans the peeling of every missing cell that can be recovered. Passes scan
/// row-major and repeat until one makes no progress. A cell is recovered from
/// the axis on which it is the only missing cell; when both axes qualify the
/// one needing fewer new fetches wins, rows on ties. Parity cells are only
/// recovered when a systematic recovery reads them. Present cells are counted
/// in blocks_read once, however many steps use them.
DecodeOutcome peel_decode_subgrid(const Subgrid& grid);

/// True when peeling recovers every systematic cell of the missing set.
bool is_decodable(std::span<const CellCoord> missing, std::size_t la, std::size_t lb);

/// Returns the payloads of present cells; called once per fetched cell.
using BlockFetcher = std::function<DenseMatrix(CellCoord)>;

/// Runs a peeling plan on payloads. Returns the recovered cells' blocks.
std::map<CellCoord, DenseMatrix> execute_peeling(const Subgrid& grid, const DecodeOutcome& plan,
                                                 const BlockFetcher& fetch);

}  // namespace codedmm

#endif  // CODEDMM_LOCAL_PRODUCT_CODE_HPP_
