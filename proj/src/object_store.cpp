// SPDX-License-Identifier: Apache-2.0

#include "codedmm/object_store.hpp"

#include "codedmm/errors.hpp"

namespace codedmm {

double ObjectStore::write(const std::string& key, Blob blob) {
  const double seconds = latency_.cost(blob.size());
  ++counters_.writes;
  counters_.bytes_written += blob.size();
  counters_.charged_seconds += seconds;
  blobs_[key] = std::move(blob);
  return seconds;
}

StoreRead ObjectStore::read(const std::string& key) {
  auto it = blobs_.find(key);
  if (it == blobs_.end()) throw MissingKeyError("object store: no such key '" + key + "'");
  const double seconds = latency_.cost(it->second.size());
  ++counters_.reads;
  counters_.bytes_read += it->second.size();
  counters_.charged_seconds += seconds;
  return {it->second, seconds};
}

void ObjectStore::preload(const std::string& key, Blob blob) { blobs_[key] = std::move(blob); }

std::vector<std::string> ObjectStore::keys() const {
  std::vector<std::string> out;
  out.reserve(blobs_.size());
  for (const auto& [k, _] : blobs_) out.push_back(k);
  return out;
}

}  // namespace codedmm
