// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_OBJECT_STORE_HPP_
#define CODEDMM_OBJECT_STORE_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace codedmm {

using Blob = std::vector<std::byte>;

/// Access time = alpha + beta * bytes, for reads and writes alike.
struct StoreLatency {
  double alpha = 0.05;  // seconds per request
  double beta = 1e-8;   // seconds per byte

  double cost(std::size_t bytes) const noexcept { return alpha + beta * static_cast<double>(bytes); }
};

struct IoCounters {
  std::size_t reads = 0;
  std::size_t writes = 0;
  std::size_t bytes_read = 0;
  std::size_t bytes_written = 0;
  double charged_seconds = 0.0;  // sum of all latencies charged so far
};

struct StoreRead {
  const Blob& blob;
  double seconds;
};

/// In-memory key/blob store standing in for cloud object storage. Every
/// access returns the latency it costs the calling task.
class ObjectStore {
 public:
  explicit ObjectStore(StoreLatency latency = {}) : latency_(latency) {}

  /// Returns the charged seconds.
  double write(const std::string& key, Blob blob);
  /// Throws MissingKeyError for absent keys.
  StoreRead read(const std::string& key);

  /// Places data that exists before the job starts. Not charged or counted.
  void preload(const std::string& key, Blob blob);

  bool contains(const std::string& key) const { return blobs_.count(key) != 0; }
  std::size_t size() const noexcept { return blobs_.size(); }
  std::vector<std::string> keys() const;

  const StoreLatency& latency() const noexcept { return latency_; }
  const IoCounters& counters() const noexcept { return counters_; }

 private:
  StoreLatency latency_;
  std::map<std::string, Blob> blobs_;
  IoCounters counters_;
};

}  // namespace codedmm

#endif  // CODEDMM_OBJECT_STORE_HPP_
