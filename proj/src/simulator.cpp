// SPDX-License-Identifier: Apache-2.0

#include "codedmm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "codedmm/errors.hpp"
#include "codedmm/matrix_io.hpp"

namespace codedmm {

namespace {

// Counter layout for per-task generators: stage tag in the high bits.
enum class Tag : std::uint64_t { kEncode = 1, kCompute = 2, kDecode = 3, kSpeculative = 4 };

Rng task_rng(const SimConfig& cfg, Stream stream, Tag tag, std::size_t id) {
  return make_stream(cfg.seed, stream, (static_cast<std::uint64_t>(tag) << 40) | id);
}

TaskTime draw(const SimConfig& cfg, Stream stream, Tag tag, std::size_t id, double work,
              std::optional<bool> force = std::nullopt) {
  if (work <= 0.0) return {};
  auto rng = task_rng(cfg, stream, tag, id);
  return sample_task_time(cfg.model, work, rng, force);
}

// Relaunched tasks never straggle under the forced-straggler hook.
std::optional<bool> relaunch_force(const SimConfig& cfg) {
  return cfg.forced_stragglers ? std::optional<bool>(false) : std::nullopt;
}

std::size_t batch_count(std::size_t workers, std::size_t jobs) {
  return workers == 0 ? jobs : std::min(workers, jobs);
}

double kth_smallest(std::vector<double> v, std::size_t k) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  return v[k - 1];
}

std::size_t quantile_rank(double q, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

double max_of(std::span<const double> v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

std::set<std::size_t> forced_set(const SimConfig& cfg) {
  if (!cfg.forced_stragglers) return {};
  return {cfg.forced_stragglers->begin(), cfg.forced_stragglers->end()};
}

std::optional<bool> forced_flag(const SimConfig& cfg, const std::set<std::size_t>& forced, std::size_t id) {
  if (!cfg.forced_stragglers) return std::nullopt;
  return forced.count(id) != 0;
}

// Arrival quantile after which undecodable work is recomputed.
double deadline_quantile(const SimConfig& cfg, const std::set<std::size_t>& forced, std::size_t n) {
  if (cfg.policy.deadline_quantile) return *cfg.policy.deadline_quantile;
  if (cfg.forced_stragglers) {
    const auto in_range = static_cast<std::size_t>(
        std::count_if(forced.begin(), forced.end(), [n](std::size_t id) { return id < n; }));
    return in_range >= n ? 1.0 : static_cast<double>(n - in_range) / static_cast<double>(n);
  }
  return cfg.model.p >= 1.0 ? 1.0 : 1.0 - cfg.model.p;
}

DenseMatrix read_block(ObjectStore& store, const std::string& key, double& seconds) {
  auto r = store.read(key);
  seconds += r.seconds;
  return decode_matrix(r.blob);
}

Blob vector_blob(std::span<const double> v) { return encode_matrix(DenseMatrix::column(v)); }

std::vector<double> blob_vector(const Blob& b) {
  const auto m = decode_matrix(b);
  return {m.data().begin(), m.data().end()};
}

// Encode stage: one job per (operand, group) that has not been encoded yet.
// Returns the stage time; parities end up in the store.
double run_encode_stage(std::vector<PreparedOperand*> operands, ObjectStore& store,
                        const SimConfig& cfg, RunReport& rep) {
  struct Job {
    PreparedOperand* op;
    std::size_t group;
  };
  std::vector<Job> jobs;
  for (auto* op : operands) {
    if (op->parities_encoded()) continue;
    for (std::size_t g = 0; g < op->coded().layout.groups; ++g) jobs.push_back({op, g});
  }
  if (jobs.empty()) return 0.0;

  const std::size_t batches = batch_count(cfg.workers.encode, jobs.size());
  std::vector<double> io(batches, 0.0);
  std::vector<double> work(batches, 0.0);
  for (std::size_t t = 0; t < jobs.size(); ++t) {
    const auto& job = jobs[t];
    const std::size_t b = t % batches;
    const std::size_t l = job.op->group_size();
    std::optional<DenseMatrix> sum;
    for (std::size_t k = 0; k < l; ++k) {
      auto block = read_block(store, job.op->systematic_key(job.group * l + k), io[b]);
      if (sum) *sum += block;
      else sum = std::move(block);
    }
    io[b] += store.write(job.op->parity_key(job.group), encode_matrix(*sum));
    work[b] += cfg.model.encode_work * static_cast<double>(l);
  }
  for (auto* op : operands) op->mark_parities_encoded();

  std::vector<double> durations(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    durations[b] = io[b] + draw(cfg, Stream::kEncode, Tag::kEncode, b, work[b]).seconds;
  }
  auto spec = apply_speculation(durations, cfg.policy.stage_q, [&](std::size_t b) {
    return io[b] + draw(cfg, Stream::kRelaunch, Tag::kEncode, b, work[b], relaunch_force(cfg)).seconds;
  });
  rep.encode_tasks = batches;
  rep.relaunched += spec.relaunched;
  return max_of(spec.finish);
}

// Earliest arrival time after which the cells still outstanding are decodable.
double decodable_time(std::size_t la, std::size_t lb, std::span<const double> arrival) {
  std::vector<std::size_t> order(arrival.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return arrival[x] < arrival[y]; });
  Subgrid sub(la, lb);
  for (std::size_t k = 0; k < sub.cell_count(); ++k) sub.set_state(sub.coord(k), CellState::kMissing);
  for (std::size_t idx : order) {
    sub.set_state(sub.coord(idx), CellState::kPresent);
    // Fewer than la*lb present cells can never cover the systematic part.
    if (sub.cell_count() - sub.missing_count() < la * lb) continue;
    if (peel_decode_subgrid(sub).decoded()) return arrival[idx];
  }
  return arrival.empty() ? 0.0 : max_of(arrival);
}

// Jitter-free seconds a decoder needs for a subgrid: block reads, write-backs
// of recovered systematic cells, and summation work.
double expected_decode_seconds(const Subgrid& sub, const SimConfig& cfg, double block_io) {
  const auto plan = peel_decode_subgrid(sub);
  double work = 0.0;
  std::size_t writes = 0;
  for (const auto& step : plan.steps) {
    work += cfg.model.decode_work * static_cast<double>(step.axis == RecoveryAxis::kRow ? sub.lb() : sub.la());
    writes += sub.is_systematic(step.cell) ? 1 : 0;
  }
  return block_io * static_cast<double>(plan.blocks_read + writes) + cfg.model.base_time * work;
}

// The decoder starts at the first decodable instant, or at a later arrival
// when waiting for that cell saves more decoding time than it costs.
double decode_start(std::size_t la, std::size_t lb, std::span<const double> arrival, const SimConfig& cfg,
                    double block_io) {
  const double first = decodable_time(la, lb, arrival);
  std::vector<double> candidates{first};
  for (double t : arrival) {
    if (t > first) candidates.push_back(t);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  Subgrid sub(la, lb);
  double best = first;
  double best_finish = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    if (t >= best_finish) break;
    for (std::size_t k = 0; k < sub.cell_count(); ++k) {
      sub.set_state(sub.coord(k), arrival[k] <= t ? CellState::kPresent : CellState::kMissing);
    }
    const double finish = t + expected_decode_seconds(sub, cfg, block_io);
    if (finish < best_finish) {
      best_finish = finish;
      best = t;
    }
  }
  return best;
}

}  // namespace

SpeculationOutcome apply_speculation(std::span<const double> durations, double q,
                                     const std::function<double(std::size_t)>& relaunch_duration) {
  SpeculationOutcome out;
  out.finish.assign(durations.begin(), durations.end());
  if (durations.empty()) return out;
  out.trigger = kth_smallest({durations.begin(), durations.end()}, quantile_rank(q, durations.size()));
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] <= out.trigger) continue;
    ++out.relaunched;
    out.finish[i] = std::min(durations[i], out.trigger + relaunch_duration(i));
  }
  return out;
}

// --- operands -----------------------------------------------------------------

PreparedOperand::PreparedOperand(DenseMatrix m, std::size_t num_blocks, std::size_t group_size,
                                 std::string name)
    : matrix_(std::move(m)),
      split_(partition_rows(matrix_, num_blocks)),
      coded_(encode_row_blocks(split_.blocks, group_size)),
      name_(std::move(name)) {}

std::string PreparedOperand::systematic_key(std::size_t k) const {
  return name_ + "/sys/" + std::to_string(k);
}

std::string PreparedOperand::parity_key(std::size_t group) const {
  return name_ + "/par/" + std::to_string(group);
}

std::string PreparedOperand::coded_key(std::size_t coded_index) const {
  const auto& tag = coded_.layout.tags.at(coded_index);
  return tag.role == BlockRole::kSystematic ? systematic_key(tag.source) : parity_key(tag.group);
}

PreparedMatvec::PreparedMatvec(const DenseMatrix& a, std::size_t num_blocks, std::size_t group_size)
    : encoded_(encode_matvec(a, num_blocks, group_size)) {}

// --- coded matmul -------------------------------------------------------------

MatmulRun run_coded_matmul(PreparedOperand& a, PreparedOperand& b, const SimConfig& cfg) {
  cfg.validate();
  if (a.matrix().cols() != b.matrix().cols()) {
    throw std::invalid_argument("run_coded_matmul: A and B must have the same number of columns");
  }
  if (&a != &b && a.name() == b.name()) {
    throw std::invalid_argument("run_coded_matmul: distinct operands need distinct names");
  }
  const CodeParams params{a.group_size(), b.group_size(), a.systematic().partition.num_blocks,
                          b.systematic().partition.num_blocks};
  params.validate();

  ObjectStore store(cfg.store);
  RunReport rep;
  rep.strategy = "coded";
  rep.operation = "matmul";

  std::vector<PreparedOperand*> operands{&a};
  if (&b != &a) operands.push_back(&b);
  for (auto* op : operands) {
    for (std::size_t k = 0; k < op->systematic().blocks.size(); ++k) {
      store.preload(op->systematic_key(k), encode_matrix(op->systematic().blocks[k]));
    }
    if (op->parities_encoded()) {
      for (std::size_t g = 0; g < op->coded().layout.groups; ++g) {
        store.preload(op->parity_key(g),
                      encode_matrix(op->coded().blocks[op->coded().layout.coded_index_of_parity(g)]));
      }
    }
  }

  // Stage 1: encode.
  const double t_enc = run_encode_stage(operands, store, cfg, rep);

  // Stage 2: compute. Task id = i * coded_cols + j.
  const std::size_t rows = params.coded_rows();
  const std::size_t cols = params.coded_cols();
  const std::size_t n_tasks = rows * cols;
  const auto& pa = a.systematic().partition;
  const auto& pb = b.systematic().partition;
  const std::size_t a_bytes = encoded_matrix_bytes(pa.block_rows, pa.cols);
  const std::size_t b_bytes = encoded_matrix_bytes(pb.block_rows, pb.cols);
  const std::size_t c_bytes = encoded_matrix_bytes(pa.block_rows, pb.block_rows);
  const double task_io = cfg.store.cost(a_bytes) + cfg.store.cost(b_bytes) + cfg.store.cost(c_bytes);
  rep.output_block_bytes = c_bytes;
  rep.compute_tasks = n_tasks;

  const auto forced = forced_set(cfg);
  std::vector<double> arrival(n_tasks);
  for (std::size_t id = 0; id < n_tasks; ++id) {
    const auto t = draw(cfg, Stream::kCompute, Tag::kCompute, id, 1.0, forced_flag(cfg, forced, id));
    arrival[id] = t_enc + task_io + t.seconds;
    if (t.straggled) rep.stragglers.push_back(id);
  }
  const double deadline =
      kth_smallest(arrival, quantile_rank(deadline_quantile(cfg, forced, n_tasks), n_tasks));

  CodedProductGrid grid(params);
  const std::size_t sub_rows = params.subgrid_rows();
  const std::size_t sub_cols = params.subgrid_cols();
  const std::size_t n_sub = params.subgrid_count();
  auto task_id = [&](SubgridId s, std::size_t local) {
    const GridCoord g = grid.global(s, {local / sub_cols, local % sub_cols});
    return g.i * cols + g.j;
  };
  auto subgrid_at = [&](std::size_t s) { return SubgridId{s / params.groups_b(), s % params.groups_b()}; };

  std::vector<double> ready(n_sub);
  for (std::size_t s = 0; s < n_sub; ++s) {
    const SubgridId sid = subgrid_at(s);
    std::vector<double> local(sub_rows * sub_cols);
    for (std::size_t k = 0; k < local.size(); ++k) local[k] = arrival[task_id(sid, k)];
    if (decodable_time(params.la, params.lb, local) > deadline) {
      ++rep.undecodable_subgrids;
      if (!cfg.policy.recompute) {
        ready[s] = deadline;
        continue;
      }
      for (std::size_t k = 0; k < local.size(); ++k) {
        if (local[k] <= deadline) continue;
        const std::size_t id = task_id(sid, k);
        const auto re = draw(cfg, Stream::kRecompute, Tag::kCompute, id, 1.0, relaunch_force(cfg));
        local[k] = std::min(local[k], deadline + task_io + re.seconds);
        arrival[id] = local[k];
        ++rep.recomputed;
      }
    }
    ready[s] = decode_start(params.la, params.lb, local, cfg, cfg.store.cost(c_bytes));
  }
  const double compute_end = max_of(ready);

  // Stage 3: decode. Subgrid s goes to decode task s % batches, which starts
  // once all of its subgrids are ready and peels what has arrived by then.
  const std::size_t batches = batch_count(cfg.workers.decode, n_sub);
  std::vector<double> start(batches, 0.0);
  for (std::size_t s = 0; s < n_sub; ++s) start[s % batches] = std::max(start[s % batches], ready[s]);

  CodedProductGrid snapshot(params);
  std::vector<double> io(batches, 0.0);
  std::vector<double> work(batches, 0.0);
  rep.decode_reads.assign(batches, 0);

  for (std::size_t s = 0; s < n_sub; ++s) {
    const SubgridId sid = subgrid_at(s);
    const std::size_t w = s % batches;
    for (std::size_t k = 0; k < sub_rows * sub_cols; ++k) {
      const GridCoord g = grid.global(sid, {k / sub_cols, k % sub_cols});
      const std::string key = "C/" + std::to_string(g.i) + "/" + std::to_string(g.j);
      grid.set_store_key(g, key);
      snapshot.set_store_key(g, key);
      if (arrival[task_id(sid, k)] > start[w]) continue;
      // The compute worker's own I/O is folded into task_io above.
      double ignored = 0.0;
      auto lhs = read_block(store, a.coded_key(g.i), ignored);
      auto rhs = read_block(store, b.coded_key(g.j), ignored);
      auto product = block_product(lhs, rhs);
      store.write(key, encode_matrix(product));
      grid.set_present(g, std::move(product));
      snapshot.set_state(g, CellState::kPresent);
    }
  }
  const std::size_t reads_mark = store.counters().bytes_read;

  for (std::size_t s = 0; s < n_sub; ++s) {
    const SubgridId sid = subgrid_at(s);
    const std::size_t w = s % batches;
    const auto outcome = decode_subgrid(grid, sid, [&](GridCoord g) {
      return read_block(store, grid.store_key(g), io[w]);
    });
    rep.decode_reads[w] += outcome.blocks_read;
    for (const auto& step : outcome.steps) {
      const std::size_t summed = step.axis == RecoveryAxis::kRow ? params.lb : params.la;
      work[w] += cfg.model.decode_work * static_cast<double>(summed);
      const GridCoord g = grid.global(sid, step.cell);
      if (grid.is_systematic(g)) io[w] += store.write(grid.store_key(g), encode_matrix(*grid.payload(g)));
    }
  }
  rep.decode_bytes_read = store.counters().bytes_read - reads_mark;

  std::vector<double> durations(batches);
  for (std::size_t w = 0; w < batches; ++w) {
    durations[w] = io[w] + draw(cfg, Stream::kDecode, Tag::kDecode, w, work[w]).seconds;
  }
  auto spec = apply_speculation(durations, cfg.policy.stage_q, [&](std::size_t w) {
    return io[w] + draw(cfg, Stream::kRelaunch, Tag::kDecode, w, work[w], relaunch_force(cfg)).seconds;
  });
  rep.relaunched += spec.relaunched;
  rep.decode_tasks = batches;

  rep.t_enc = t_enc;
  rep.t_comp = compute_end - t_enc;
  rep.t_dec = max_of(spec.finish);
  rep.t_total = rep.t_enc + rep.t_comp + rep.t_dec;
  for (std::size_t w = 0; w < batches; ++w) {
    rep.wall_clock = std::max(rep.wall_clock, start[w] + spec.finish[w]);
  }

  DenseMatrix result = assemble_result(grid, pa, pb);
  rep.bytes_read = store.counters().bytes_read;
  rep.bytes_written = store.counters().bytes_written;
  return {std::move(result), std::move(rep), std::move(snapshot), std::move(store)};
}

MatmulRun run_coded_matmul(const DenseMatrix& a, const DenseMatrix& b, const CodeParams& params,
                           const SimConfig& cfg) {
  params.validate();
  PreparedOperand pa(a, params.ma, params.la, "A");
  PreparedOperand pb(b, params.mb, params.lb, "B");
  return run_coded_matmul(pa, pb, cfg);
}

// --- speculative matmul -------------------------------------------------------

MatmulRun run_speculative_matmul(const DenseMatrix& a, const DenseMatrix& b, std::size_t blocks_a,
                                 std::size_t blocks_b, const SimConfig& cfg) {
  cfg.validate();
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("run_speculative_matmul: A and B must have the same number of columns");
  }
  const auto split_a = partition_rows(a, blocks_a);
  const auto split_b = partition_rows(b, blocks_b);
  ObjectStore store(cfg.store);
  for (std::size_t k = 0; k < blocks_a; ++k) store.preload("A/sys/" + std::to_string(k), encode_matrix(split_a.blocks[k]));
  for (std::size_t k = 0; k < blocks_b; ++k) store.preload("B/sys/" + std::to_string(k), encode_matrix(split_b.blocks[k]));

  RunReport rep;
  rep.strategy = "speculative";
  rep.operation = "matmul";
  const std::size_t n_tasks = blocks_a * blocks_b;
  rep.compute_tasks = n_tasks;
  const std::size_t c_bytes = encoded_matrix_bytes(split_a.partition.block_rows, split_b.partition.block_rows);
  rep.output_block_bytes = c_bytes;
  const double task_io = cfg.store.cost(encoded_matrix_bytes(split_a.partition.block_rows, a.cols())) +
                         cfg.store.cost(encoded_matrix_bytes(split_b.partition.block_rows, b.cols())) +
                         cfg.store.cost(c_bytes);

  const auto forced = forced_set(cfg);
  std::vector<double> durations(n_tasks);
  for (std::size_t id = 0; id < n_tasks; ++id) {
    const auto t = draw(cfg, Stream::kCompute, Tag::kSpeculative, id, 1.0, forced_flag(cfg, forced, id));
    durations[id] = task_io + t.seconds;
    if (t.straggled) rep.stragglers.push_back(id);
  }
  auto spec = apply_speculation(durations, cfg.policy.q, [&](std::size_t id) {
    return task_io + draw(cfg, Stream::kRelaunch, Tag::kSpeculative, id, 1.0, relaunch_force(cfg)).seconds;
  });
  rep.relaunched = spec.relaunched;
  rep.t_comp = max_of(spec.finish);
  rep.t_total = rep.t_comp;
  rep.wall_clock = rep.t_total;

  std::vector<DenseMatrix> row_blocks;
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < blocks_a; ++i) {
    for (std::size_t j = 0; j < blocks_b; ++j) {
      double ignored = 0.0;
      auto lhs = read_block(store, "A/sys/" + std::to_string(i), ignored);
      auto rhs = read_block(store, "B/sys/" + std::to_string(j), ignored);
      const std::string key = "C/" + std::to_string(i) + "/" + std::to_string(j);
      store.write(key, encode_matrix(block_product(lhs, rhs)));
      const auto block = read_block(store, key, ignored);
      for (std::size_t r = 0; r < block.rows(); ++r) {
        const std::size_t row = i * split_a.partition.block_rows + r;
        if (row >= c.rows()) break;
        for (std::size_t s = 0; s < block.cols(); ++s) {
          const std::size_t col = j * split_b.partition.block_rows + s;
          if (col >= c.cols()) break;
          c(row, col) = block(r, s);
        }
      }
    }
  }
  rep.bytes_read = store.counters().bytes_read;
  rep.bytes_written = store.counters().bytes_written;
  return {std::move(c), std::move(rep), std::nullopt, std::move(store)};
}

MatmulRun run_speculative_matmul(const DenseMatrix& a, const DenseMatrix& b, const CodeParams& params,
                                 const SimConfig& cfg) {
  return run_speculative_matmul(a, b, params.ma, params.mb, cfg);
}

// --- matvec -------------------------------------------------------------------

MatvecRun run_coded_matvec(PreparedMatvec& a, std::span<const double> x, const SimConfig& cfg) {
  cfg.validate();
  const auto& enc = a.encoded();
  const auto& layout = enc.plan.layout;
  const auto& part = enc.plan.partition;
  if (x.size() != part.cols) {
    throw std::invalid_argument("run_coded_matvec: x has " + std::to_string(x.size()) +
                                " entries, A has " + std::to_string(part.cols) + " columns");
  }
  const std::size_t l = layout.group_size;

  ObjectStore store(cfg.store);
  RunReport rep;
  rep.strategy = "coded";
  rep.operation = "matvec";
  auto key_of = [&](std::size_t k) {
    const auto& tag = layout.tags[k];
    return tag.role == BlockRole::kSystematic ? "A/sys/" + std::to_string(tag.source)
                                              : "A/par/" + std::to_string(tag.group);
  };
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (layout.tags[k].role == BlockRole::kSystematic || a.parities_encoded()) {
      store.preload(key_of(k), encode_matrix(enc.blocks[k]));
    }
  }
  store.preload("x", vector_blob(x));

  // Stage 1: one encode job per group.
  double t_enc = 0.0;
  if (!a.parities_encoded()) {
    const std::size_t batches = batch_count(cfg.workers.encode, layout.groups);
    std::vector<double> io(batches, 0.0);
    std::vector<double> work(batches, 0.0);
    for (std::size_t g = 0; g < layout.groups; ++g) {
      const std::size_t b = g % batches;
      std::optional<DenseMatrix> sum;
      for (std::size_t k = 0; k < l; ++k) {
        auto block = read_block(store, "A/sys/" + std::to_string(g * l + k), io[b]);
        if (sum) *sum += block;
        else sum = std::move(block);
      }
      io[b] += store.write("A/par/" + std::to_string(g), encode_matrix(*sum));
      work[b] += cfg.model.encode_work * static_cast<double>(l);
    }
    std::vector<double> durations(batches);
    for (std::size_t b = 0; b < batches; ++b) {
      durations[b] = io[b] + draw(cfg, Stream::kEncode, Tag::kEncode, b, work[b]).seconds;
    }
    auto spec = apply_speculation(durations, cfg.policy.stage_q, [&](std::size_t b) {
      return io[b] + draw(cfg, Stream::kRelaunch, Tag::kEncode, b, work[b], relaunch_force(cfg)).seconds;
    });
    rep.encode_tasks = batches;
    rep.relaunched += spec.relaunched;
    t_enc = max_of(spec.finish);
    a.mark_parities_encoded();
  }

  // Stage 2: one task per coded block.
  const std::size_t n_tasks = layout.size();
  rep.compute_tasks = n_tasks;
  const std::size_t seg_bytes = encoded_matrix_bytes(part.block_rows, 1);
  rep.output_block_bytes = seg_bytes;
  const double task_io = cfg.store.cost(encoded_matrix_bytes(part.block_rows, part.cols)) +
                         cfg.store.cost(encoded_matrix_bytes(part.cols, 1)) + cfg.store.cost(seg_bytes);
  const auto forced = forced_set(cfg);
  std::vector<double> arrival(n_tasks);
  for (std::size_t id = 0; id < n_tasks; ++id) {
    const auto t = draw(cfg, Stream::kCompute, Tag::kCompute, id, 1.0, forced_flag(cfg, forced, id));
    arrival[id] = t_enc + task_io + t.seconds;
    if (t.straggled) rep.stragglers.push_back(id);
  }
  const double deadline =
      kth_smallest(arrival, quantile_rank(deadline_quantile(cfg, forced, n_tasks), n_tasks));

  // A group is decodable once at most one of its L+1 segments is outstanding.
  std::vector<double> ready(layout.groups);
  for (std::size_t g = 0; g < layout.groups; ++g) {
    const std::size_t base = g * (l + 1);
    auto group_ready = [&]() {
      std::vector<double> t(arrival.begin() + static_cast<std::ptrdiff_t>(base),
                            arrival.begin() + static_cast<std::ptrdiff_t>(base + l + 1));
      return kth_smallest(t, l);
    };
    double t = group_ready();
    if (t > deadline) {
      ++rep.undecodable_subgrids;
      if (cfg.policy.recompute) {
        for (std::size_t k = base; k < base + l + 1; ++k) {
          if (arrival[k] <= deadline) continue;
          const auto re = draw(cfg, Stream::kRecompute, Tag::kCompute, k, 1.0, relaunch_force(cfg));
          arrival[k] = std::min(arrival[k], deadline + task_io + re.seconds);
          ++rep.recomputed;
        }
        t = group_ready();
      } else {
        t = deadline;
      }
    }
    ready[g] = t;
  }
  const double compute_end = max_of(ready);

  // Stage 3: decode tasks over batches of groups.
  const std::size_t batches = batch_count(cfg.workers.decode == 0 ? 1 : cfg.workers.decode, layout.groups);
  std::vector<double> start(batches, 0.0);
  for (std::size_t g = 0; g < layout.groups; ++g) start[g % batches] = std::max(start[g % batches], ready[g]);

  MatvecSegments segments(n_tasks);
  for (std::size_t k = 0; k < n_tasks; ++k) {
    const std::size_t b = layout.tags[k].group % batches;
    if (arrival[k] > start[b]) continue;
    double ignored = 0.0;
    const auto block = read_block(store, key_of(k), ignored);
    const auto xs = blob_vector(store.read("x").blob);
    store.write("y/" + std::to_string(k), vector_blob(matvec_reference(block, xs)));
  }

  std::vector<double> io(batches, 0.0);
  std::vector<double> work(batches, 0.0);
  rep.decode_reads.assign(batches, 0);
  const std::size_t reads_mark = store.counters().bytes_read;
  for (std::size_t g = 0; g < layout.groups; ++g) {
    const std::size_t b = g % batches;
    const std::size_t base = g * (l + 1);
    auto have = [&](std::size_t k) { return store.contains("y/" + std::to_string(k)); };
    bool systematic_missing = false;
    for (std::size_t k = base; k < base + l; ++k) systematic_missing |= !have(k);
    // The parity segment is only read when a systematic one is missing.
    for (std::size_t k = base; k < base + l + 1; ++k) {
      if (!have(k) || (k == base + l && !systematic_missing)) continue;
      auto r = store.read("y/" + std::to_string(k));
      io[b] += r.seconds;
      segments[k] = blob_vector(r.blob);
      ++rep.decode_reads[b];
    }
    work[b] += cfg.model.decode_work * static_cast<double>(l);
  }
  rep.decode_bytes_read = store.counters().bytes_read - reads_mark;

  std::vector<double> y = decode_matvec(segments, enc.plan);
  for (std::size_t b = 0; b < batches; ++b) io[b] += cfg.store.cost(encoded_matrix_bytes(part.rows, 1));

  std::vector<double> durations(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    durations[b] = io[b] + draw(cfg, Stream::kDecode, Tag::kDecode, b, work[b]).seconds;
  }
  auto spec = apply_speculation(durations, cfg.policy.stage_q, [&](std::size_t b) {
    return io[b] + draw(cfg, Stream::kRelaunch, Tag::kDecode, b, work[b], relaunch_force(cfg)).seconds;
  });
  rep.relaunched += spec.relaunched;
  rep.decode_tasks = batches;
  rep.t_enc = t_enc;
  rep.t_comp = compute_end - t_enc;
  rep.t_dec = max_of(spec.finish);
  rep.t_total = rep.t_enc + rep.t_comp + rep.t_dec;
  for (std::size_t b = 0; b < batches; ++b) rep.wall_clock = std::max(rep.wall_clock, start[b] + spec.finish[b]);
  rep.bytes_read = store.counters().bytes_read;
  rep.bytes_written = store.counters().bytes_written;
  return {std::move(y), std::move(rep)};
}

MatvecRun run_coded_matvec(const DenseMatrix& a, std::span<const double> x, std::size_t num_blocks,
                           std::size_t group_size, const SimConfig& cfg) {
  PreparedMatvec prepared(a, num_blocks, group_size);
  return run_coded_matvec(prepared, x, cfg);
}

MatvecRun run_speculative_matvec(const DenseMatrix& a, std::span<const double> x, std::size_t num_blocks,
                                 const SimConfig& cfg) {
  cfg.validate();
  if (x.size() != a.cols()) throw std::invalid_argument("run_speculative_matvec: dimension mismatch");
  const auto split = partition_rows(a, num_blocks);
  ObjectStore store(cfg.store);
  for (std::size_t k = 0; k < num_blocks; ++k) store.preload("A/sys/" + std::to_string(k), encode_matrix(split.blocks[k]));
  store.preload("x", vector_blob(x));

  RunReport rep;
  rep.strategy = "speculative";
  rep.operation = "matvec";
  rep.compute_tasks = num_blocks;
  const std::size_t seg_bytes = encoded_matrix_bytes(split.partition.block_rows, 1);
  rep.output_block_bytes = seg_bytes;
  const double task_io = cfg.store.cost(encoded_matrix_bytes(split.partition.block_rows, a.cols())) +
                         cfg.store.cost(encoded_matrix_bytes(a.cols(), 1)) + cfg.store.cost(seg_bytes);
  const auto forced = forced_set(cfg);
  std::vector<double> durations(num_blocks);
  for (std::size_t id = 0; id < num_blocks; ++id) {
    const auto t = draw(cfg, Stream::kCompute, Tag::kSpeculative, id, 1.0, forced_flag(cfg, forced, id));
    durations[id] = task_io + t.seconds;
    if (t.straggled) rep.stragglers.push_back(id);
  }
  auto spec = apply_speculation(durations, cfg.policy.q, [&](std::size_t id) {
    return task_io + draw(cfg, Stream::kRelaunch, Tag::kSpeculative, id, 1.0, relaunch_force(cfg)).seconds;
  });
  rep.relaunched = spec.relaunched;
  rep.t_comp = max_of(spec.finish);
  rep.t_total = rep.t_comp;
  rep.wall_clock = rep.t_total;

  std::vector<double> y(a.rows());
  const auto xs = blob_vector(store.read("x").blob);
  for (std::size_t k = 0; k < num_blocks; ++k) {
    double ignored = 0.0;
    const auto block = read_block(store, "A/sys/" + std::to_string(k), ignored);
    store.write("y/" + std::to_string(k), vector_blob(matvec_reference(block, xs)));
    const auto seg = blob_vector(store.read("y/" + std::to_string(k)).blob);
    for (std::size_t r = 0; r < seg.size(); ++r) {
      const std::size_t row = k * split.partition.block_rows + r;
      if (row < y.size()) y[row] = seg[r];
    }
  }
  rep.bytes_read = store.counters().bytes_read;
  rep.bytes_written = store.counters().bytes_written;
  return {std::move(y), std::move(rep)};
}

}  // namespace codedmm
