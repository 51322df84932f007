// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_SIM_CONFIG_HPP_
#define CODEDMM_SIM_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "codedmm/object_store.hpp"
#include "codedmm/rng.hpp"
#include "json.hpp"

namespace codedmm {

/// Per-task latency model. A task takes base_time * work * U[1-jitter, 1+jitter]
/// seconds; with probability p it straggles and takes straggler_factor times
/// that. Stragglers are slow, never lost.
///
/// straggler_factor and jitter are calibration knobs, not measured values.
/// encode_work / decode_work are work units charged per block summed by an
/// encoding or decoding task (a block product is one unit).
struct StragglerModel {
  double p = 0.02;
  double base_time = 135.0;
  double jitter = 0.1;
  double straggler_factor = 3.0;
  double encode_work = 0.01;
  double decode_work = 0.01;

  void validate() const;
};

struct TaskTime {
  double seconds = 0.0;
  bool straggled = false;
};

/// Always consumes two draws (branch, then jitter) so that changing p or the
/// factor never shifts later draws. force overrides the straggle branch.
TaskTime sample_task_time(const StragglerModel& model, double work_units, Rng& rng,
                          std::optional<bool> force = std::nullopt);

enum class Strategy : std::uint8_t { kReference, kCoded, kSpeculative };

const char* to_string(Strategy s) noexcept;
Strategy parse_strategy(const std::string& name);

struct WaitPolicy {
  Strategy strategy = Strategy::kCoded;
  /// Speculative baseline: relaunch unfinished tasks once this fraction is done.
  double q = 0.79;
  /// Coded: arrival quantile at which undecodable subgrids are recomputed.
  /// Unset means the non-straggler quantile, 1 - p (or the complement of the
  /// forced straggler fraction).
  std::optional<double> deadline_quantile;
  /// Restart fraction for the short encode and decode stages.
  double stage_q = 0.9;
  /// Off only in tests: undecodable subgrids then surface NotDecodableError.
  bool recompute = true;
};

/// Zero means "one worker per task". For app executors, compute is the number
/// of systematic row blocks per operand.
struct WorkerCounts {
  std::size_t encode = 0;
  std::size_t compute = 0;
  std::size_t decode = 0;
};

struct CodeShape {
  std::size_t la = 2;
  std::size_t lb = 2;
};

struct SimConfig {
  StragglerModel model;
  StoreLatency store;
  WaitPolicy policy;
  WorkerCounts workers;
  CodeShape code;
  std::uint64_t seed = 0;
  /// Test hook: compute task ids (i * coded_cols + j for matmul, coded block
  /// index for matvec) that straggle; every other task does not.
  std::optional<std::vector<std::size_t>> forced_stragglers;

  void validate() const;
};

/// Accepts nested objects ({"model": {"p": 0.02}}) or dotted keys
/// ({"model.p": 0.02}). Unknown keys are rejected.
SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig base = {});
SimConfig load_sim_config(const std::filesystem::path& path, SimConfig base = {});

/// Fully resolved config, dotted keys flattened into nested objects.
nlohmann::json to_json(const SimConfig& cfg);

}  // namespace codedmm

#endif  // CODEDMM_SIM_CONFIG_HPP_
