// SPDX-License-Identifier: Apache-2.0

#include "codedmm/rng.hpp"

namespace codedmm {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t counter) noexcept {
  return mix64(mix64(mix64(master) ^ static_cast<std::uint64_t>(stream)) + counter);
}

Rng make_stream(std::uint64_t master, Stream stream, std::uint64_t counter) {
  return Rng(derive_seed(master, stream, counter));
}

}  // namespace codedmm
