// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_CLI_HPP_
#define CODEDMM_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace codedmm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Reports go to out,
/// diagnostics to err. Returns 0 on success, 2 on usage errors and 1 on
/// runtime failures.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codedmm

#endif  // CODEDMM_CLI_HPP_
