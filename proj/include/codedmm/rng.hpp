// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_RNG_HPP_
#define CODEDMM_RNG_HPP_

#include <cstdint>
#include <random>

namespace codedmm {

using Rng = std::mt19937_64;

/// Named random streams. Every stage draws from its own stream so that a
/// change in one stage's task count does not shift another stage's draws.
enum class Stream : std::uint64_t {
  kEncode = 1,
  kCompute = 2,
  kRecompute = 3,
  kDecode = 4,
  kRelaunch = 5,
  kMonteCarlo = 6,
  kData = 7,
  kRun = 8,
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t counter = 0) noexcept;

/// Generator for (master seed, stream, counter).
Rng make_stream(std::uint64_t master, Stream stream, std::uint64_t counter = 0);

}  // namespace codedmm

#endif  // CODEDMM_RNG_HPP_
