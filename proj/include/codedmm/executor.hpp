// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_EXECUTOR_HPP_
#define CODEDMM_EXECUTOR_HPP_

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "codedmm/matrix.hpp"
#include "codedmm/run_report.hpp"
#include "codedmm/sim_config.hpp"
#include "codedmm/simulator.hpp"

namespace codedmm {

using OperandId = std::size_t;

/// Runs the large products of an application either directly (reference) or
/// through the simulated serverless platform (coded or speculative). Operands
/// registered with add_operand stay fixed across calls, so the coded strategy
/// encodes them once and reuses the parities.
///
/// cfg.workers.compute sets the number of systematic row blocks per operand
/// (rounded up to whole parity groups); zero picks a default of 8.
class Executor {
 public:
  Executor(Strategy strategy, SimConfig cfg = {});

  Strategy strategy() const noexcept { return strategy_; }
  const SimConfig& config() const noexcept { return cfg_; }

  OperandId add_operand(DenseMatrix m);
  const DenseMatrix& operand(OperandId id) const;

  /// operand(a) * b^T. b is re-encoded on every call.
  DenseMatrix multiply_abt(OperandId a, const DenseMatrix& b);
  std::vector<double> matvec(OperandId a, std::span<const double> x);

  /// Tags subsequent reports with an application iteration number.
  void begin_iteration(int k) noexcept { iteration_ = k; }
  const std::vector<RunReport>& reports() const noexcept { return reports_; }

 private:
  struct Operand {
    DenseMatrix matrix;
    std::unique_ptr<PreparedOperand> coded;
    std::unique_ptr<PreparedMatvec> coded_matvec;
  };

  Operand& get(OperandId id);
  SimConfig next_config();
  std::size_t blocks_for(std::size_t rows, std::size_t group) const;
  void record(RunReport report);

  Strategy strategy_;
  SimConfig cfg_;
  std::vector<Operand> operands_;
  std::vector<RunReport> reports_;
  std::uint64_t calls_ = 0;
  int iteration_ = -1;
};

}  // namespace codedmm

#endif  // CODEDMM_EXECUTOR_HPP_
