// SPDX-License-Identifier: Apache-2.0

#include "codedmm/run_report.hpp"

#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace codedmm {

nlohmann::json to_json(const RunReport& r) {
  return {{"strategy", r.strategy},
          {"operation", r.operation},
          {"iteration", r.iteration},
          {"t_enc", r.t_enc},
          {"t_comp", r.t_comp},
          {"t_dec", r.t_dec},
          {"t_total", r.t_total},
          {"wall_clock", r.wall_clock},
          {"encode_tasks", r.encode_tasks},
          {"compute_tasks", r.compute_tasks},
          {"decode_tasks", r.decode_tasks},
          {"decode_reads", r.decode_reads},
          {"stragglers", r.stragglers},
          {"recomputed", r.recomputed},
          {"relaunched", r.relaunched},
          {"undecodable_subgrids", r.undecodable_subgrids},
          {"bytes_read", r.bytes_read},
          {"bytes_written", r.bytes_written},
          {"decode_bytes_read", r.decode_bytes_read},
          {"output_block_bytes", r.output_block_bytes}};
}

std::string run_report_csv_header() {
  return "strategy,operation,iteration,t_enc,t_comp,t_dec,t_total,wall_clock,encode_tasks,"
         "compute_tasks,decode_tasks,decode_reads_total,stragglers,recomputed,relaunched,"
         "undecodable_subgrids,bytes_read,bytes_written,decode_bytes_read";
}

std::string to_csv_row(const RunReport& r) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << r.strategy << ',' << r.operation << ',' << r.iteration << ',' << r.t_enc << ',' << r.t_comp
      << ',' << r.t_dec << ',' << r.t_total << ',' << r.wall_clock << ',' << r.encode_tasks << ','
      << r.compute_tasks << ',' << r.decode_tasks << ','
      << std::accumulate(r.decode_reads.begin(), r.decode_reads.end(), std::size_t{0}) << ','
      << r.stragglers.size() << ',' << r.recomputed << ',' << r.relaunched << ','
      << r.undecodable_subgrids << ',' << r.bytes_read << ',' << r.bytes_written << ','
      << r.decode_bytes_read;
  return out.str();
}

}  // namespace codedmm
