// SPDX-License-Identifier: Apache-2.0

#include "codedmm/executor.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace codedmm {

namespace {

constexpr std::size_t kDefaultBlocks = 8;

}  // namespace

Executor::Executor(Strategy strategy, SimConfig cfg) : strategy_(strategy), cfg_(std::move(cfg)) {
  cfg_.validate();
}

OperandId Executor::add_operand(DenseMatrix m) {
  operands_.push_back({std::move(m), nullptr, nullptr});
  return operands_.size() - 1;
}

const DenseMatrix& Executor::operand(OperandId id) const {
  if (id >= operands_.size()) throw std::out_of_range("Executor: unknown operand " + std::to_string(id));
  return operands_[id].matrix;
}

Executor::Operand& Executor::get(OperandId id) {
  if (id >= operands_.size()) throw std::out_of_range("Executor: unknown operand " + std::to_string(id));
  return operands_[id];
}

SimConfig Executor::next_config() {
  SimConfig cfg = cfg_;
  cfg.seed = derive_seed(cfg_.seed, Stream::kRun, calls_++);
  return cfg;
}

std::size_t Executor::blocks_for(std::size_t rows, std::size_t group) const {
  const std::size_t wanted = cfg_.workers.compute == 0 ? kDefaultBlocks : cfg_.workers.compute;
  const std::size_t blocks = std::max<std::size_t>(1, std::min(wanted, rows));
  return (blocks + group - 1) / group * group;
}

void Executor::record(RunReport report) {
  report.iteration = iteration_;
  reports_.push_back(std::move(report));
}

DenseMatrix Executor::multiply_abt(OperandId a, const DenseMatrix& b) {
  Operand& op = get(a);
  if (op.matrix.cols() != b.cols()) {
    throw std::invalid_argument("Executor::multiply_abt: operands have " + std::to_string(op.matrix.cols()) +
                                " and " + std::to_string(b.cols()) + " columns");
  }
  switch (strategy_) {
    case Strategy::kReference: {
      RunReport rep;
      rep.strategy = "reference";
      rep.operation = "matmul";
      record(std::move(rep));
      return matmul_reference(op.matrix, b);
    }
    case Strategy::kCoded: {
      const std::size_t la = cfg_.code.la;
      const std::size_t lb = cfg_.code.lb;
      if (!op.coded) {
        op.coded = std::make_unique<PreparedOperand>(op.matrix, blocks_for(op.matrix.rows(), la), la, "A");
      }
      PreparedOperand rhs(b, blocks_for(b.rows(), lb), lb, "B");
      auto run = run_coded_matmul(*op.coded, rhs, next_config());
      record(std::move(run.report));
      return std::move(run.result);
    }
    case Strategy::kSpeculative: {
      auto run = run_speculative_matmul(op.matrix, b, blocks_for(op.matrix.rows(), 1), blocks_for(b.rows(), 1),
                                        next_config());
      record(std::move(run.report));
      return std::move(run.result);
    }
  }
  throw std::logic_error("Executor: unknown strategy");
}

std::vector<double> Executor::matvec(OperandId a, std::span<const double> x) {
  Operand& op = get(a);
  if (op.matrix.cols() != x.size()) {
    throw std::invalid_argument("Executor::matvec: operand has " + std::to_string(op.matrix.cols()) +
                                " columns, x has " + std::to_string(x.size()) + " entries");
  }
  switch (strategy_) {
    case Strategy::kReference: {
      RunReport rep;
      rep.strategy = "reference";
      rep.operation = "matvec";
      record(std::move(rep));
      return matvec_reference(op.matrix, x);
    }
    case Strategy::kCoded: {
      const std::size_t l = cfg_.code.la;
      if (!op.coded_matvec) {
        op.coded_matvec = std::make_unique<PreparedMatvec>(op.matrix, blocks_for(op.matrix.rows(), l), l);
      }
      auto run = run_coded_matvec(*op.coded_matvec, x, next_config());
      record(std::move(run.report));
      return std::move(run.result);
    }
    case Strategy::kSpeculative: {
      auto run = run_speculative_matvec(op.matrix, x, blocks_for(op.matrix.rows(), 1), next_config());
      record(std::move(run.report));
      return std::move(run.result);
    }
  }
  throw std::logic_error("Executor: unknown strategy");
}

}  // namespace codedmm
