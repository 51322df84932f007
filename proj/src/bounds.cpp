// SPDX-License-Identifier: Apache-2.0

#include "codedmm/bounds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/binomial.hpp>

#include "codedmm/errors.hpp"
#include "codedmm/local_product_code.hpp"
#include "codedmm/rng.hpp"

namespace codedmm {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument(std::string(what) + ": p must lie in [0, 1)");
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("undecodable_counts: 64-bit overflow");
  return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("undecodable_counts: 64-bit overflow");
  return r;
}

// C(n, k) with exact intermediate division; throws on overflow.
std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = checked_mul(r, n - k + i) / i;
  return r;
}

double choose_real(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

std::size_t thread_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CODEDMM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return n;
}

struct ChunkResult {
  std::uint64_t undecodable = 0;
  std::uint64_t reads_sum = 0;
  std::uint64_t line_reads_sum = 0;
  std::vector<std::uint64_t> reads_hist;
};

constexpr std::uint64_t kChunkTrials = 4096;

ChunkResult run_chunk(std::size_t la, std::size_t lb, double p, std::uint64_t trials, std::uint64_t seed,
                      std::uint64_t chunk) {
  ChunkResult out;
  auto rng = make_stream(seed, Stream::kMonteCarlo, chunk);
  std::bernoulli_distribution straggles(p);
  Subgrid grid(la, lb);
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (std::size_t k = 0; k < grid.cell_count(); ++k) {
      grid.set_state(grid.coord(k), straggles(rng) ? CellState::kMissing : CellState::kPresent);
    }
    const auto outcome = peel_decode_subgrid(grid);
    if (!outcome.decoded()) ++out.undecodable;
    out.reads_sum += outcome.blocks_read;
    for (const auto& step : outcome.steps) out.line_reads_sum += step.axis == RecoveryAxis::kRow ? lb : la;
    if (out.reads_hist.size() <= outcome.blocks_read) out.reads_hist.resize(outcome.blocks_read + 1, 0);
    ++out.reads_hist[outcome.blocks_read];
  }
  return out;
}

// sign = -1 gives the quoted closed form, +1 the Chernoff bound.
double tail_form(const char* what, std::size_t n, double p, std::size_t l, double x, double sign) {
  if (n == 0 || l == 0) throw std::invalid_argument(std::string(what) + ": n and l must be >= 1");
  check_probability(p, what);
  if (!(x > 0.0)) throw std::invalid_argument(std::string(what) + ": x must be > 0");
  const double np = static_cast<double>(n) * p;
  const double mean = np * static_cast<double>(l);
  if (x <= mean) return 1.0;
  if (np == 0.0) return 0.0;
  const double s = x / static_cast<double>(l);
  const double log_bound = -s * std::log(x / mean) + sign * (s - np);
  return std::clamp(std::exp(log_bound), 0.0, 1.0);
}

double excess_form(const char* what, std::size_t n, double p, double extra, double sign) {
  check_probability(p, what);
  if (!(extra > 0.0)) throw std::invalid_argument(std::string(what) + ": extra must be > 0");
  const double np = static_cast<double>(n) * p;
  if (np == 0.0) return 0.0;
  const double log_bound = -(np + extra) * std::log1p(extra / np) + sign * extra;
  return std::clamp(std::exp(log_bound), 0.0, 1.0);
}

}  // namespace

double read_tail_bound(std::size_t n, double p, std::size_t l, double x) {
  return tail_form("read_tail_bound", n, p, l, x, -1.0);
}

double read_tail_chernoff(std::size_t n, double p, std::size_t l, double x) {
  return tail_form("read_tail_chernoff", n, p, l, x, 1.0);
}

double read_excess_bound(std::size_t n, double p, double extra) {
  return excess_form("read_excess_bound", n, p, extra, -1.0);
}

double read_excess_chernoff(std::size_t n, double p, double extra) {
  return excess_form("read_excess_chernoff", n, p, extra, 1.0);
}

UndecodableCounts undecodable_counts(std::size_t la, std::size_t lb) {
  if (la == 0 || lb == 0) throw std::invalid_argument("undecodable_counts: la and lb must be >= 1");
  const std::uint64_t n = checked_mul(la + 1, lb + 1);
  UndecodableCounts c;
  // Four stragglers on the corners of a rectangle; any fifth cell keeps it stuck.
  c.size4 = checked_mul(choose(la + 1, 2), choose(lb + 1, 2));
  c.size5 = checked_mul(c.size4, n - 4);
  // Stuck sets inside some 3x3 minor, plus a rectangle with free extra cells.
  const std::uint64_t minors = checked_mul(choose(la + 1, 3), choose(lb + 1, 3));
  c.size6_ub = checked_add(checked_mul(minors, choose(9, 6)), checked_mul(c.size4, choose(n - 4, 2)));
  c.size7_ub = checked_add(checked_mul(minors, choose(9, 7)), checked_mul(c.size4, choose(n - 4, 3)));
  return c;
}

double binomial_tail(std::size_t n, double p, std::size_t k) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_tail: p must lie in [0, 1]");
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(k - 1)));
}

double undecodable_bound(std::size_t la, std::size_t lb, double p) {
  check_probability(p, "undecodable_bound");
  const std::size_t n = (la + 1) * (lb + 1);
  if (n < 8) {
    throw std::invalid_argument("undecodable_bound: needs (la+1)(lb+1) >= 8, got " + std::to_string(n));
  }
  if (p == 0.0) return 0.0;
  const auto c = undecodable_counts(la, lb);
  const double counts[] = {static_cast<double>(c.size4), static_cast<double>(c.size5),
                           static_cast<double>(c.size6_ub), static_cast<double>(c.size7_ub)};
  double total = 0.0;
  for (std::size_t s = 4; s <= 7 && s <= n; ++s) {
    total += counts[s - 4] * std::exp(static_cast<double>(s) * std::log(p) +
                                      static_cast<double>(n - s) * std::log1p(-p));
  }
  return total + binomial_tail(n, p, 8);
}

std::uint64_t count_undecodable_sets(std::size_t la, std::size_t lb, std::size_t s, std::uint64_t max_sets) {
  if (la == 0 || lb == 0) throw std::invalid_argument("count_undecodable_sets: la and lb must be >= 1");
  const std::size_t n = (la + 1) * (lb + 1);
  if (s > n) throw std::invalid_argument("count_undecodable_sets: more stragglers than cells");
  if (n > 63 || choose_real(n, s) > static_cast<double>(max_sets)) {
    throw TooLargeError("count_undecodable_sets: C(" + std::to_string(n) + ", " + std::to_string(s) +
                        ") exceeds the enumeration limit");
  }
  if (s == 0) return 0;

  Subgrid grid(la, lb);
  std::uint64_t count = 0;
  const std::uint64_t end = std::uint64_t{1} << n;
  // Gosper's hack walks every n-bit mask with s bits set.
  for (std::uint64_t mask = (std::uint64_t{1} << s) - 1; mask < end;) {
    for (std::size_t k = 0; k < n; ++k) {
      grid.set_state(grid.coord(k), (mask >> k) & 1U ? CellState::kMissing : CellState::kPresent);
    }
    if (!peel_decode_subgrid(grid).decoded()) ++count;
    const std::uint64_t low = mask & (~mask + 1);
    const std::uint64_t ripple = mask + low;
    mask = ripple | (((mask ^ ripple) >> 2) / low);
  }
  return count;
}

double locality_lower_bound(std::size_t k, std::size_t n) {
  if (k == 0 || n <= k) throw std::invalid_argument("locality_lower_bound: needs n > k >= 1");
  return static_cast<double>(k) / static_cast<double>(n - k);
}

LocalityComparison compare_locality(std::size_t la, std::size_t lb) {
  if (la == 0 || lb == 0) throw std::invalid_argument("compare_locality: la and lb must be >= 1");
  const std::size_t k = la * lb;
  const std::size_t n = (la + 1) * (lb + 1);
  return {locality_lower_bound(k, n), std::min(la, lb),
          static_cast<double>(n - k) / static_cast<double>(n),
          static_cast<double>(n - k) / static_cast<double>(k)};
}

double union_bound(double per_worker, std::size_t workers) {
  return std::min(1.0, per_worker * static_cast<double>(workers));
}

double DecodeStats::reads_at_least(double x) const {
  if (x <= 0.0) return 1.0;
  const auto r = static_cast<std::size_t>(std::ceil(x));
  return r < reads_ccdf.size() ? reads_ccdf[r] : 0.0;
}

DecodeStats monte_carlo_decode_stats(std::size_t la, std::size_t lb, double p, std::uint64_t trials,
                                     std::uint64_t seed) {
  if (la == 0 || lb == 0) throw std::invalid_argument("monte_carlo_decode_stats: la and lb must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("monte_carlo_decode_stats: p must lie in [0, 1]");
  if (trials == 0) throw std::invalid_argument("monte_carlo_decode_stats: trials must be >= 1");

  const std::uint64_t chunks = (trials + kChunkTrials - 1) / kChunkTrials;
  std::vector<ChunkResult> results(chunks);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::uint64_t c = first; c < chunks; c += stride) {
      const std::uint64_t n = std::min(kChunkTrials, trials - c * kChunkTrials);
      results[c] = run_chunk(la, lb, p, n, seed, c);
    }
  };
  const std::size_t threads = std::min<std::uint64_t>(thread_count(), chunks);
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  DecodeStats stats;
  stats.trials = trials;
  std::uint64_t reads_sum = 0;
  std::uint64_t line_reads_sum = 0;
  std::vector<std::uint64_t> hist;
  for (const auto& r : results) {
    stats.undecodable += r.undecodable;
    reads_sum += r.reads_sum;
    line_reads_sum += r.line_reads_sum;
    if (hist.size() < r.reads_hist.size()) hist.resize(r.reads_hist.size(), 0);
    for (std::size_t k = 0; k < r.reads_hist.size(); ++k) hist[k] += r.reads_hist[k];
  }
  const auto total = static_cast<double>(trials);
  stats.undecodable_rate = static_cast<double>(stats.undecodable) / total;
  stats.mean_reads = static_cast<double>(reads_sum) / total;
  stats.mean_line_reads = static_cast<double>(line_reads_sum) / total;
  stats.reads_ccdf.assign(hist.size(), 0.0);
  std::uint64_t tail = 0;
  for (std::size_t k = hist.size(); k-- > 0;) {
    tail += hist[k];
    stats.reads_ccdf[k] = static_cast<double>(tail) / total;
  }
  return stats;
}

std::vector<SweepRow> sweep_undecodability(double p, std::size_t l_min, std::size_t l_max) {
  if (l_min == 0 || l_max < l_min) throw std::invalid_argument("sweep_undecodability: empty L range");
  std::vector<SweepRow> rows;
  for (std::size_t l = l_min; l <= l_max; ++l) {
    const std::size_t n = (l + 1) * (l + 1);
    if (n < 8) continue;
    const auto loc = compare_locality(l, l);
    rows.push_back({l, n, undecodable_bound(l, l, p), loc.redundancy_total, loc.redundancy_systematic});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "L,n,bound,redundancy_total,redundancy_systematic\n";
  for (const auto& r : rows) {
    out << r.l << ',' << r.n << ',' << r.bound << ',' << r.redundancy_total << ',' << r.redundancy_systematic
        << '\n';
  }
  return out.str();
}

}  // namespace codedmm
