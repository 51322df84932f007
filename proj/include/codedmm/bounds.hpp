// SPDX-License-Identifier: Apache-2.0

#ifndef CODEDMM_BOUNDS_HPP_
#define CODEDMM_BOUNDS_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace codedmm {

// Probabilistic guarantees for one decoding worker that owns an
// (la+1) x (lb+1) subgrid whose n cells straggle independently with
// probability p.

/// Widely quoted closed form for Pr(R >= x), where R is the number of blocks
/// the decoding worker reads and each recovery reads at most l blocks:
/// (x/(npl))^(-x/l) * exp(np - x/l). Returns 1 when x <= n*p*l.
///
/// The Chernoff argument behind it yields exp(x/l - np) instead, so this form
/// understates the tail and is not a valid bound; read_tail_chernoff is.
double read_tail_bound(std::size_t n, double p, std::size_t l, double x);

/// Chernoff bound (x/(npl))^(-x/l) * exp(x/l - np) on Pr(R >= x).
double read_tail_chernoff(std::size_t n, double p, std::size_t l, double x);

/// Relative form of read_tail_bound at x = (np + extra) * l:
/// (1 + extra/(np))^-(np + extra) * exp(-extra). Understates the tail for the
/// same reason.
double read_excess_bound(std::size_t n, double p, double extra);

/// Relative form of read_tail_chernoff: (1 + extra/(np))^-(np + extra) * exp(extra).
double read_excess_chernoff(std::size_t n, double p, double extra);

/// Number of straggler sets of a given size that peeling cannot decode.
/// size4 and size5 are exact; size6_ub and size7_ub overcount.
struct UndecodableCounts {
  std::uint64_t size4 = 0;
  std::uint64_t size5 = 0;
  std::uint64_t size6_ub = 0;
  std::uint64_t size7_ub = 0;
};

/// Exact integer evaluation; throws std::overflow_error past 64 bits.
UndecodableCounts undecodable_counts(std::size_t la, std::size_t lb);

/// Upper bound on the probability that a decoding worker cannot decode.
/// Requires (la+1)(lb+1) >= 8.
double undecodable_bound(std::size_t la, std::size_t lb, double p);

/// Pr(Binomial(n, p) >= k), evaluated as a survival function.
double binomial_tail(std::size_t n, double p, std::size_t k);

/// Exhaustive count of size-s straggler sets that peeling cannot decode.
/// Throws TooLargeError when C(n, s) exceeds max_sets.
std::uint64_t count_undecodable_sets(std::size_t la, std::size_t lb, std::size_t s,
                                     std::uint64_t max_sets = 100'000'000);

/// Smallest locality any (n, k) code with the optimal distance can have.
double locality_lower_bound(std::size_t k, std::size_t n);

struct LocalityComparison {
  double lower_bound = 0.0;       // for k = la*lb systematic cells out of n
  std::size_t achieved = 0;       // min(la, lb)
  double redundancy_total = 0.0;  // parity cells / all cells
  double redundancy_systematic = 0.0;  // parity cells / systematic cells
};

LocalityComparison compare_locality(std::size_t la, std::size_t lb);

/// min(1, workers * per_worker).
double union_bound(double per_worker, std::size_t workers);

struct DecodeStats {
  std::uint64_t trials = 0;
  std::uint64_t undecodable = 0;
  double undecodable_rate = 0.0;
  double mean_reads = 0.0;       // distinct blocks fetched per trial
  double mean_line_reads = 0.0;  // blocks summed per recovery, repeats included
  /// reads_ccdf[r] = fraction of trials with R >= r, for r = 0..max R.
  std::vector<double> reads_ccdf;

  /// Fraction of trials with R >= x.
  double reads_at_least(double x) const;
};

/// Draws independent straggle flags per cell and peels each trial.
/// Deterministic in seed regardless of thread count (CODEDMM_THREADS caps it).
DecodeStats monte_carlo_decode_stats(std::size_t la, std::size_t lb, double p, std::uint64_t trials,
                                     std::uint64_t seed);

struct SweepRow {
  std::size_t l = 0;
  std::size_t n = 0;
  double bound = 0.0;
  double redundancy_total = 0.0;
  double redundancy_systematic = 0.0;
};

/// One row per l with la = lb = l. Rows with n < 8 are skipped.
std::vector<SweepRow> sweep_undecodability(double p, std::size_t l_min, std::size_t l_max);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace codedmm

#endif  // CODEDMM_BOUNDS_HPP_
