// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_RUN_REPORT_HPP_
#define CODEDMM_RUN_REPORT_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace codedmm {

/// Simulated timings and I/O of one distributed multiply. Stage times are
/// barrier to barrier, so t_total = t_enc + t_comp + t_dec. wall_clock is the
/// makespan when each decode task starts as soon as its own inputs are
/// decodable instead of waiting for the compute barrier.
struct RunReport {
  std::string strategy;   // "coded" or "speculative"
  std::string operation;  // "matmul" or "matvec"
  int iteration = -1;

  double t_enc = 0.0;
  double t_comp = 0.0;
  double t_dec = 0.0;
  double t_total = 0.0;
  double wall_clock = 0.0;

  std::size_t encode_tasks = 0;
  std::size_t compute_tasks = 0;
  std::size_t decode_tasks = 0;

  std::vector<std::size_t> decode_reads;  // blocks read per decoding task
  std::vector<std::size_t> stragglers;    // compute task ids whose first attempt straggled
  std::size_t recomputed = 0;             // compute tasks relaunched after the deadline
  std::size_t relaunched = 0;             // speculative relaunches in any stage
  std::size_t undecodable_subgrids = 0;   // subgrids not decodable at the deadline

  std::size_t bytes_read = 0;
  std::size_t bytes_written = 0;
  std::size_t decode_bytes_read = 0;
  std::size_t output_block_bytes = 0;
};

nlohmann::json to_json(const RunReport& r);

/// Column order of to_csv_row.
std::string run_report_csv_header();
std::string to_csv_row(const RunReport& r);

}  // namespace codedmm

#endif  // CODEDMM_RUN_REPORT_HPP_
