// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_ERRORS_HPP_
#define CODEDMM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace codedmm {

// Raised when systematic output cells cannot be produced from the cells
// that are present. The message names the offending cells or groups.
class NotDecodableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingKeyError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Combinatorial enumeration refused because the search space is too big.
class TooLargeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Degenerate numerical input: zero iterate, indefinite system, singular
// factorization, rank-zero matrix.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace codedmm

#endif  // CODEDMM_ERRORS_HPP_
