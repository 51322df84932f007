// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_SIMULATOR_HPP_
#define CODEDMM_SIMULATOR_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codedmm/coded_grid.hpp"
#include "codedmm/coded_matvec.hpp"
#include "codedmm/local_product_code.hpp"
#include "codedmm/matrix.hpp"
#include "codedmm/object_store.hpp"
#include "codedmm/run_report.hpp"
#include "codedmm/sim_config.hpp"

namespace codedmm {

// Simulated serverless execution. Each run is an encode stage (one task per
// parity block, or per batch of them), a compute stage (one task per coded
// block product) and a decode stage (one task per subgrid, or per batch).
// All data moves through an ObjectStore; task latencies come from the
// StragglerModel. The run is deterministic in (inputs, config, seed).

/// An input operand split into row blocks, with its local parities. Reusing
/// the same PreparedOperand across runs encodes it only once.
class PreparedOperand {
 public:
  PreparedOperand(DenseMatrix m, std::size_t num_blocks, std::size_t group_size, std::string name);

  const DenseMatrix& matrix() const noexcept { return matrix_; }
  const RowBlocks& systematic() const noexcept { return split_; }
  const EncodedBlocks& coded() const noexcept { return coded_; }
  std::size_t group_size() const noexcept { return coded_.layout.group_size; }
  const std::string& name() const noexcept { return name_; }

  std::string systematic_key(std::size_t k) const;
  std::string parity_key(std::size_t group) const;
  std::string coded_key(std::size_t coded_index) const;

  bool parities_encoded() const noexcept { return parities_encoded_; }
  void mark_parities_encoded() noexcept { parities_encoded_ = true; }

 private:
  DenseMatrix matrix_;
  RowBlocks split_;
  EncodedBlocks coded_;
  std::string name_;
  bool parities_encoded_ = false;
};

struct MatmulRun {
  DenseMatrix result;
  RunReport report;
  /// Coded runs: cell states as the decoders found them (present or missing),
  /// with store keys. Payloads live in `store`.
  std::optional<CodedProductGrid> snapshot;
  ObjectStore store;
};

struct MatvecRun {
  std::vector<double> result;
  RunReport report;
};

/// Each subgrid's decoder starts at the first instant its arrived cells are
/// decodable, or at a later arrival when waiting for that cell saves more
/// decoding time than it costs. Subgrids still undecodable at the deadline
/// quantile have their late cells recomputed.
MatmulRun run_coded_matmul(PreparedOperand& a, PreparedOperand& b, const SimConfig& cfg);
MatmulRun run_coded_matmul(const DenseMatrix& a, const DenseMatrix& b, const CodeParams& params,
                           const SimConfig& cfg);

/// One task per uncoded block product. Once a fraction q has finished, every
/// unfinished task is relaunched; the original keeps running and the first
/// finisher wins.
MatmulRun run_speculative_matmul(const DenseMatrix& a, const DenseMatrix& b, std::size_t blocks_a,
                                 std::size_t blocks_b, const SimConfig& cfg);
MatmulRun run_speculative_matmul(const DenseMatrix& a, const DenseMatrix& b, const CodeParams& params,
                                 const SimConfig& cfg);

class PreparedMatvec {
 public:
  PreparedMatvec(const DenseMatrix& a, std::size_t num_blocks, std::size_t group_size);

  const EncodedMatvec& encoded() const noexcept { return encoded_; }
  std::size_t cols() const noexcept { return encoded_.plan.partition.cols; }
  bool parities_encoded() const noexcept { return parities_encoded_; }
  void mark_parities_encoded() noexcept { parities_encoded_ = true; }

 private:
  EncodedMatvec encoded_;
  bool parities_encoded_ = false;
};

MatvecRun run_coded_matvec(PreparedMatvec& a, std::span<const double> x, const SimConfig& cfg);
MatvecRun run_coded_matvec(const DenseMatrix& a, std::span<const double> x, std::size_t num_blocks,
                           std::size_t group_size, const SimConfig& cfg);
MatvecRun run_speculative_matvec(const DenseMatrix& a, std::span<const double> x, std::size_t num_blocks,
                                 const SimConfig& cfg);

/// Restart-after-fraction rule shared by every stage. durations are measured
/// from the stage start; returns per-task finish times and the relaunch count.
struct SpeculationOutcome {
  std::vector<double> finish;
  std::size_t relaunched = 0;
  double trigger = 0.0;
};

SpeculationOutcome apply_speculation(std::span<const double> durations, double q,
                                     const std::function<double(std::size_t)>& relaunch_duration);

}  // namespace codedmm

#endif  // CODEDMM_SIMULATOR_HPP_
