// SPDX-License-Identifier: Apache-2.0

#include "codedmm/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "codedmm/apps.hpp"
#include "codedmm/bounds.hpp"
#include "codedmm/coded_grid.hpp"
#include "codedmm/errors.hpp"
#include "codedmm/executor.hpp"
#include "codedmm/matrix_io.hpp"
#include "codedmm/run_report.hpp"
#include "codedmm/sim_config.hpp"
#include "codedmm/simulator.hpp"
#include "json.hpp"

namespace codedmm {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Raised for bad flag values found after parsing; maps to the usage exit code.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

json header(const std::string& command, json config) {
  return {{"schema", 1}, {"command", command}, {"config", std::move(config)}};
}

void flatten_human(const json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten_human(*it, prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else {
    out << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
  }
}

void emit(const json& doc, const std::string& format, std::ostream& out) {
  if (format == "human") {
    flatten_human(doc, "", out);
  } else {
    out << doc.dump(2) << '\n';
  }
}

// Writes to path when given, otherwise to out.
void deliver(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

void save_matrix(const std::string& path, const DenseMatrix& m) {
  if (fs::path(path).extension() == ".cdm") {
    write_matrix_file(path, m);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_matrix_text(f, m);
}

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t counter) {
  auto rng = make_stream(seed, Stream::kData, counter);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = unit(rng);
  return m;
}

// Flags shared by every command that runs the simulator.
struct SimFlags {
  std::string config_path;
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> seed;
  std::optional<double> p;
  std::optional<std::size_t> la;
  std::optional<std::size_t> lb;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON simulator config")->check(CLI::ExistingFile);
    cmd->add_option("--strategy", strategy, "reference, coded or speculative")
        ->check(CLI::IsMember({"reference", "coded", "speculative"}));
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--p", p, "straggler probability");
    cmd->add_option("--la", la, "systematic blocks of A per parity");
    cmd->add_option("--lb", lb, "systematic blocks of B per parity");
  }

  SimConfig resolve(SimConfig base = {}) const {
    SimConfig cfg = config_path.empty() ? base : load_sim_config(config_path, base);
    if (strategy) cfg.policy.strategy = parse_strategy(*strategy);
    if (seed) cfg.seed = *seed;
    if (p) cfg.model.p = *p;
    if (la) cfg.code.la = *la;
    if (lb) cfg.code.lb = *lb;
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

// --- bounds ---------------------------------------------------------------

struct BoundsFlags {
  double p = 0.02;
  std::size_t la = 10;
  std::size_t lb = 10;
  std::optional<double> x;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::string sweep;
  std::string format = "json";
  std::string out;
};

std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw UsageError("--sweep expects L_MIN..L_MAX, got '" + text + "'");
  try {
    return {std::stoul(text.substr(0, dots)), std::stoul(text.substr(dots + 2))};
  } catch (const std::exception&) {
    throw UsageError("--sweep expects L_MIN..L_MAX, got '" + text + "'");
  }
}

int run_bounds(const BoundsFlags& f, std::ostream& out) {
  if (!(f.p >= 0.0 && f.p < 1.0)) throw UsageError("--p must lie in [0, 1)");
  if (f.la == 0 || f.lb == 0) throw UsageError("--la and --lb must be >= 1");
  const std::size_t n = (f.la + 1) * (f.lb + 1);
  const std::size_t l = std::max(f.la, f.lb);
  const double np = static_cast<double>(n) * f.p;
  const double x = f.x.value_or(np > 0.0 ? 2.0 * np * static_cast<double>(l) : static_cast<double>(l));
  if (!(x > 0.0)) throw UsageError("--x must be > 0");

  std::vector<SweepRow> sweep_rows;
  if (!f.sweep.empty()) {
    const auto [lo, hi] = parse_range(f.sweep);
    if (lo == 0 || hi < lo) throw UsageError("--sweep range is empty");
    sweep_rows = sweep_undecodability(f.p, lo, hi);
  }

  json cfg = {{"p", f.p}, {"la", f.la}, {"lb", f.lb}, {"x", x}, {"trials", f.trials}, {"seed", f.seed},
              {"sweep", f.sweep.empty() ? json(nullptr) : json(f.sweep)}};

  if (f.format == "csv") {
    std::string text;
    if (!f.sweep.empty()) {
      text = sweep_csv(sweep_rows);
    } else {
      std::ostringstream row;
      row.precision(17);
      row << "la,lb,n,p,x,read_tail_bound,read_tail_chernoff,read_excess_bound,read_excess_chernoff,"
             "undecodable_bound\n";
      row << f.la << ',' << f.lb << ',' << n << ',' << f.p << ',' << x << ',' << read_tail_bound(n, f.p, l, x)
          << ',' << read_tail_chernoff(n, f.p, l, x) << ','
          << (np > 0.0 ? read_excess_bound(n, f.p, np) : 0.0) << ','
          << (np > 0.0 ? read_excess_chernoff(n, f.p, np) : 0.0) << ',';
      if (n >= 8) row << undecodable_bound(f.la, f.lb, f.p);
      row << '\n';
      text = row.str();
    }
    deliver(text, f.out, out);
    return kExitOk;
  }

  json doc = header("bounds", cfg);
  doc["n"] = n;
  doc["read_tail_bound"] = {{"x", x},
                             {"reads_per_recovery", l},
                             {"value", read_tail_bound(n, f.p, l, x)},
                             {"chernoff", read_tail_chernoff(n, f.p, l, x)}};
  doc["read_excess_bound"] = np > 0.0 ? json{{"extra", np},
                                             {"value", read_excess_bound(n, f.p, np)},
                                             {"chernoff", read_excess_chernoff(n, f.p, np)}}
                                      : json(nullptr);
  doc["undecodable_bound"] = n >= 8 ? json(undecodable_bound(f.la, f.lb, f.p)) : json(nullptr);
  const auto counts = undecodable_counts(f.la, f.lb);
  doc["undecodable_counts"] = {{"size4", counts.size4},
                               {"size5", counts.size5},
                               {"size6_ub", counts.size6_ub},
                               {"size7_ub", counts.size7_ub}};
  const auto loc = compare_locality(f.la, f.lb);
  doc["locality"] = {{"lower_bound", loc.lower_bound},
                     {"achieved", loc.achieved},
                     {"redundancy_total", loc.redundancy_total},
                     {"redundancy_systematic", loc.redundancy_systematic}};
  if (f.trials > 0) {
    const auto mc = monte_carlo_decode_stats(f.la, f.lb, f.p, f.trials, f.seed);
    doc["monte_carlo"] = {{"trials", mc.trials},
                          {"undecodable", mc.undecodable},
                          {"undecodable_rate", mc.undecodable_rate},
                          {"mean_reads", mc.mean_reads},
                          {"mean_line_reads", mc.mean_line_reads},
                          {"reads_at_least_x", mc.reads_at_least(x)}};
  }
  if (!f.sweep.empty()) {
    json rows = json::array();
    for (const auto& r : sweep_rows) {
      rows.push_back({{"L", r.l},
                      {"n", r.n},
                      {"bound", r.bound},
                      {"redundancy_total", r.redundancy_total},
                      {"redundancy_systematic", r.redundancy_systematic}});
    }
    doc["sweep"] = std::move(rows);
  }
  std::ostringstream text;
  emit(doc, f.format, text);
  deliver(text.str(), f.out, out);
  return kExitOk;
}

// --- enumerate ------------------------------------------------------------

struct EnumerateFlags {
  std::size_t la = 2;
  std::size_t lb = 2;
  std::optional<std::size_t> s;
  std::uint64_t max_sets = 100'000'000;
  std::string format = "json";
  std::string out;
};

int run_enumerate(const EnumerateFlags& f, std::ostream& out) {
  if (f.la == 0 || f.lb == 0) throw UsageError("--la and --lb must be >= 1");
  const std::size_t n = (f.la + 1) * (f.lb + 1);
  if (f.s && *f.s > n) throw UsageError("--s exceeds the subgrid size " + std::to_string(n));
  const auto formulas = undecodable_counts(f.la, f.lb);
  auto formula = [&](std::size_t s) -> json {
    switch (s) {
      case 4: return {{"value", formulas.size4}, {"kind", "exact"}};
      case 5: return {{"value", formulas.size5}, {"kind", "exact"}};
      case 6: return {{"value", formulas.size6_ub}, {"kind", "upper_bound"}};
      case 7: return {{"value", formulas.size7_ub}, {"kind", "upper_bound"}};
      default: return nullptr;
    }
  };
  std::vector<std::size_t> sizes;
  if (f.s) {
    sizes.push_back(*f.s);
  } else {
    for (std::size_t s = 0; s <= std::min<std::size_t>(n, 7); ++s) sizes.push_back(s);
  }

  json rows = json::array();
  std::ostringstream csv;
  csv << "s,count,formula,formula_kind\n";
  for (std::size_t s : sizes) {
    const std::uint64_t count = count_undecodable_sets(f.la, f.lb, s, f.max_sets);
    const json fm = formula(s);
    rows.push_back({{"s", s}, {"count", count}, {"formula", fm}});
    csv << s << ',' << count << ',' << (fm.is_null() ? "" : fm["value"].dump()) << ','
        << (fm.is_null() ? "" : fm["kind"].get<std::string>()) << '\n';
  }
  if (f.format == "csv") {
    deliver(csv.str(), f.out, out);
    return kExitOk;
  }
  json doc = header("enumerate", {{"la", f.la},
                                  {"lb", f.lb},
                                  {"s", f.s ? json(*f.s) : json(nullptr)},
                                  {"max_sets", f.max_sets}});
  doc["n"] = n;
  doc["counts"] = std::move(rows);
  if (f.s) doc["count"] = doc["counts"][0]["count"];
  std::ostringstream text;
  emit(doc, f.format, text);
  deliver(text.str(), f.out, out);
  return kExitOk;
}

// --- simulate / multiply / matvec / decode --------------------------------

struct ShapeFlags {
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t inner = 32;
  std::optional<std::size_t> blocks_a;
  std::optional<std::size_t> blocks_b;
};

std::string store_file_name(const std::string& key) {
  std::string name = key;
  std::replace(name.begin(), name.end(), '/', '_');
  return name + ".cdm";
}

void dump_store(MatmulRun& run, const RowBlockPartition& pa, const RowBlockPartition& pb,
                const std::string& dir) {
  fs::create_directories(dir);
  const auto& grid = *run.snapshot;
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      if (grid.state({i, j}) != CellState::kPresent) continue;
      const std::string& key = grid.store_key({i, j});
      const auto& blob = run.store.read(key).blob;
      std::ofstream f(fs::path(dir) / store_file_name(key), std::ios::binary);
      if (!f) throw std::runtime_error("cannot write into " + dir);
      f.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    }
  }
  std::ofstream m(fs::path(dir) / "manifest.json");
  if (!m) throw std::runtime_error("cannot write manifest into " + dir);
  m << grid_manifest(grid, pa, pb).dump(2) << '\n';
}

struct MatmulOutcome {
  DenseMatrix result;
  RunReport report;
  json shape;
};

MatmulOutcome run_matmul(const DenseMatrix& a, const DenseMatrix& b, const SimConfig& cfg,
                         std::optional<std::size_t> blocks_a, std::optional<std::size_t> blocks_b,
                         const std::string& store_dir) {
  if (a.cols() != b.cols()) {
    throw UsageError("A and B need the same column count for A B^T (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()) + ")");
  }
  const std::size_t la = cfg.code.la;
  const std::size_t lb = cfg.code.lb;
  const std::size_t want_a = std::min(blocks_a.value_or(2 * la), a.rows());
  const std::size_t want_b = std::min(blocks_b.value_or(2 * lb), b.rows());
  switch (cfg.policy.strategy) {
    case Strategy::kReference: {
      RunReport rep;
      rep.strategy = "reference";
      rep.operation = "matmul";
      return {matmul_reference(a, b), rep, {{"blocks_a", nullptr}, {"blocks_b", nullptr}}};
    }
    case Strategy::kCoded: {
      const auto params = CodeParams::with_min_blocks(la, lb, want_a, want_b);
      auto run = run_coded_matmul(a, b, params, cfg);
      if (!store_dir.empty()) {
        dump_store(run, partition_rows(a, params.ma).partition, partition_rows(b, params.mb).partition, store_dir);
      }
      return {std::move(run.result), std::move(run.report), {{"blocks_a", params.ma}, {"blocks_b", params.mb}}};
    }
    case Strategy::kSpeculative: {
      auto run = run_speculative_matmul(a, b, std::max<std::size_t>(1, want_a), std::max<std::size_t>(1, want_b), cfg);
      return {std::move(run.result), std::move(run.report), {{"blocks_a", want_a}, {"blocks_b", want_b}}};
    }
  }
  throw std::logic_error("unknown strategy");
}

int run_simulate(const SimFlags& sf, const ShapeFlags& shape, const std::string& format, const std::string& out_path,
                 std::ostream& out) {
  if (shape.rows == 0 || shape.cols == 0 || shape.inner == 0) throw UsageError("matrix dimensions must be >= 1");
  const SimConfig cfg = sf.resolve();
  const DenseMatrix a = random_matrix(shape.rows, shape.inner, cfg.seed, 10);
  const DenseMatrix b = random_matrix(shape.cols, shape.inner, cfg.seed, 11);
  auto result = run_matmul(a, b, cfg, shape.blocks_a, shape.blocks_b, "");
  const double err = relative_frobenius_error(result.result, matmul_reference(a, b));

  if (format == "csv") {
    deliver(run_report_csv_header() + ",relative_error\n" + to_csv_row(result.report) + "," +
                json(err).dump() + "\n",
            out_path, out);
    return kExitOk;
  }
  json config = {{"sim", to_json(cfg)},
                 {"rows", shape.rows},
                 {"cols", shape.cols},
                 {"inner", shape.inner},
                 {"blocks_a", result.shape["blocks_a"]},
                 {"blocks_b", result.shape["blocks_b"]}};
  json doc = header("simulate", std::move(config));
  doc["report"] = to_json(result.report);
  doc["relative_error"] = err;
  std::ostringstream text;
  emit(doc, format, text);
  deliver(text.str(), out_path, out);
  return kExitOk;
}

struct MultiplyFlags {
  std::string a_path;
  std::string b_path;
  std::optional<std::size_t> blocks_a;
  std::optional<std::size_t> blocks_b;
  std::string out;
  std::string report;
  std::string store_dir;
};

int run_multiply(const SimFlags& sf, const MultiplyFlags& f, std::ostream& out) {
  const SimConfig cfg = sf.resolve();
  const DenseMatrix a = load_matrix(f.a_path);
  const DenseMatrix b = load_matrix(f.b_path);
  if (!f.store_dir.empty() && cfg.policy.strategy != Strategy::kCoded) {
    throw UsageError("--store-dir needs the coded strategy");
  }
  auto result = run_matmul(a, b, cfg, f.blocks_a, f.blocks_b, f.store_dir);
  if (!f.out.empty()) save_matrix(f.out, result.result);
  json config = {{"sim", to_json(cfg)},
                 {"a", f.a_path},
                 {"b", f.b_path},
                 {"blocks_a", result.shape["blocks_a"]},
                 {"blocks_b", result.shape["blocks_b"]}};
  json doc = header("multiply", std::move(config));
  doc["rows"] = result.result.rows();
  doc["cols"] = result.result.cols();
  doc["report"] = to_json(result.report);
  if (f.out.empty()) {
    std::ostringstream m;
    write_matrix_text(m, result.result);
    doc["result"] = m.str();
  }
  deliver(doc.dump(2) + "\n", f.report, out);
  return kExitOk;
}

struct MatvecFlags {
  std::string a_path;
  std::string x_path;
  std::size_t blocks = 8;
  std::string out;
};

int run_matvec_command(const SimFlags& sf, const MatvecFlags& f, std::ostream& out) {
  const SimConfig cfg = sf.resolve();
  const DenseMatrix a = load_matrix(f.a_path);
  const DenseMatrix xm = load_matrix(f.x_path);
  if (xm.rows() != 1 && xm.cols() != 1) throw UsageError("x must be a single row or column");
  const std::vector<double> x(xm.data().begin(), xm.data().end());
  if (x.size() != a.cols()) {
    throw UsageError("x has " + std::to_string(x.size()) + " entries, A has " + std::to_string(a.cols()) +
                     " columns");
  }
  if (f.blocks == 0) throw UsageError("--blocks must be >= 1");
  std::vector<double> y;
  RunReport rep;
  const std::size_t blocks = std::min(f.blocks, a.rows());
  switch (cfg.policy.strategy) {
    case Strategy::kReference:
      y = matvec_reference(a, x);
      rep.strategy = "reference";
      rep.operation = "matvec";
      break;
    case Strategy::kCoded: {
      auto run = run_coded_matvec(a, x, blocks, cfg.code.la, cfg);
      y = std::move(run.result);
      rep = std::move(run.report);
      break;
    }
    case Strategy::kSpeculative: {
      auto run = run_speculative_matvec(a, x, blocks, cfg);
      y = std::move(run.result);
      rep = std::move(run.report);
      break;
    }
  }
  json doc = header("matvec", {{"sim", to_json(cfg)}, {"a", f.a_path}, {"x", f.x_path}, {"blocks", blocks}});
  doc["report"] = to_json(rep);
  doc["result"] = y;
  deliver(doc.dump(2) + "\n", f.out, out);
  return kExitOk;
}

struct DecodeFlags {
  std::string manifest;
  std::string store_dir;
  std::string out;
};

int run_decode(const DecodeFlags& f, std::ostream& out) {
  std::ifstream in(f.manifest);
  if (!in) throw std::runtime_error("cannot open manifest " + f.manifest);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("manifest " + f.manifest + ": " + e.what());
  }
  auto parsed = parse_grid_manifest(manifest);
  auto& grid = parsed.grid;
  std::size_t loaded = 0;
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      if (grid.state({i, j}) != CellState::kPresent) continue;
      grid.set_present({i, j}, read_matrix_file(fs::path(f.store_dir) / store_file_name(grid.store_key({i, j}))));
      ++loaded;
    }
  }
  const auto outcomes = decode_grid(grid);
  const DenseMatrix c = assemble_result(grid, parsed.partition_a, parsed.partition_b);
  if (!f.out.empty()) save_matrix(f.out, c);
  std::vector<std::size_t> reads;
  std::size_t recovered = 0;
  for (const auto& o : outcomes) {
    reads.push_back(o.blocks_read);
    recovered += o.recovered.size();
  }
  json doc = header("decode", {{"manifest", f.manifest}, {"store_dir", f.store_dir}});
  doc["cells_loaded"] = loaded;
  doc["cells_recovered"] = recovered;
  doc["decode_reads"] = reads;
  doc["rows"] = c.rows();
  doc["cols"] = c.cols();
  if (f.out.empty()) {
    std::ostringstream m;
    write_matrix_text(m, c);
    doc["result"] = m.str();
  }
  out << doc.dump(2) << '\n';
  return kExitOk;
}

// --- app ------------------------------------------------------------------

struct AppFlags {
  std::string name;
  std::optional<std::size_t> size;
  std::optional<std::size_t> iters;
  std::size_t factors = 16;
  std::string out;
};

json stage_times(const std::vector<RunReport>& reports) {
  std::map<int, json> by_iter;
  for (const auto& r : reports) {
    auto& e = by_iter[r.iteration];
    if (e.is_null()) e = {{"iteration", r.iteration}, {"calls", 0}, {"t_enc", 0.0}, {"t_comp", 0.0},
                          {"t_dec", 0.0}, {"t_total", 0.0}, {"recomputed", 0}, {"relaunched", 0}};
    e["calls"] = e["calls"].get<std::size_t>() + 1;
    e["t_enc"] = e["t_enc"].get<double>() + r.t_enc;
    e["t_comp"] = e["t_comp"].get<double>() + r.t_comp;
    e["t_dec"] = e["t_dec"].get<double>() + r.t_dec;
    e["t_total"] = e["t_total"].get<double>() + r.t_total;
    e["recomputed"] = e["recomputed"].get<std::size_t>() + r.recomputed;
    e["relaunched"] = e["relaunched"].get<std::size_t>() + r.relaunched;
  }
  json rows = json::array();
  for (auto& [k, v] : by_iter) rows.push_back(std::move(v));
  return rows;
}

DenseMatrix planted_symmetric(std::size_t n, std::uint64_t seed) {
  DenseMatrix m = random_matrix(n, n, seed, 20);
  DenseMatrix s = m + m.transpose();
  s *= 0.5 / std::sqrt(static_cast<double>(n));
  // A strong rank-one term makes the top eigenvalue well separated.
  const DenseMatrix u = random_matrix(n, 1, seed, 21);
  const double un = frobenius_norm(u);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s(i, j) += 4.0 * u(i, 0) * u(j, 0) / (un * un);
  }
  return s;
}

int run_app(const SimFlags& sf, const AppFlags& f, std::ostream& out) {
  SimConfig base;
  // The regression app waits for 90% of its workers by default.
  if (f.name == "krr") base.policy.q = 0.9;
  const SimConfig cfg = sf.resolve(base);
  Executor exec(cfg.policy.strategy, cfg);
  json config = {{"sim", to_json(cfg)}, {"app", f.name}};
  json result;

  if (f.name == "power-iter") {
    const std::size_t n = f.size.value_or(128);
    const std::size_t iters = f.iters.value_or(20);
    config["size"] = n;
    config["iters"] = iters;
    const auto r = power_iteration(planted_symmetric(n, cfg.seed), iters, 1e-10, exec);
    result = {{"eigenvalue", r.eigenvalue}, {"iterations", r.iterations}, {"converged", r.converged},
              {"eigenvalue_trace", r.eigenvalue_trace}};
  } else if (f.name == "krr") {
    const std::size_t n = f.size.value_or(256);
    const std::size_t iters = f.iters.value_or(1000);
    config["size"] = n;
    config["iters"] = iters;
    config["sigma"] = 8.0;
    config["ridge"] = 0.01;
    auto data = synth_krr(n, 8, 8.0, 0.01, cfg.seed);
    data.problem.max_iters = iters;
    const auto r = krr_pcg(data.problem, exec);
    result = {{"iterations", r.iterations}, {"converged", r.converged}, {"residual_trace", r.residual_trace}};
  } else if (f.name == "als") {
    const std::size_t n = f.size.value_or(256);
    AlsOptions opt;
    opt.factors = f.factors;
    opt.max_iters = f.iters.value_or(7);
    opt.seed = cfg.seed;
    config["size"] = n;
    config["iters"] = opt.max_iters;
    config["factors"] = opt.factors;
    config["ridge"] = opt.ridge;
    const auto r = als(synth_ratings(n, n, cfg.seed), opt, exec);
    result = {{"iterations", r.iterations}, {"loss_trace", r.loss_trace}};
  } else if (f.name == "svd") {
    const std::size_t n = f.size.value_or(512);
    config["size"] = n;
    config["cols"] = 32;
    const DenseMatrix a = random_matrix(n, 32, cfg.seed, 30);
    const auto r = tall_skinny_svd(a, exec);
    DenseMatrix us = r.u;
    for (std::size_t i = 0; i < us.rows(); ++i) {
      for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= r.singular_values[k];
    }
    result = {{"singular_values", r.singular_values}, {"rank", r.rank},
              {"reconstruction_error", relative_frobenius_error(matmul_reference(us, r.v), a)}};
  } else {
    throw UsageError("unknown app '" + f.name + "'");
  }

  json doc = header("app", std::move(config));
  doc["result"] = std::move(result);
  doc["iterations"] = stage_times(exec.reports());
  double total = 0.0;
  for (const auto& r : exec.reports()) total += r.t_total;
  doc["t_total"] = total;
  deliver(doc.dump(2) + "\n", f.out, out);
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Straggler-resilient distributed matrix multiplication with local product codes", "codedmm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "codedmm 0.1.0");

  BoundsFlags bf;
  auto* bounds = app.add_subcommand("bounds", "closed-form bounds, counts and Monte Carlo checks");
  bounds->add_option("--p", bf.p, "straggler probability")->capture_default_str();
  bounds->add_option("--la", bf.la, "systematic blocks of A per parity")->capture_default_str();
  bounds->add_option("--lb", bf.lb, "systematic blocks of B per parity")->capture_default_str();
  bounds->add_option("--x", bf.x, "read threshold (default 2 n p L)");
  bounds->add_option("--trials", bf.trials, "Monte Carlo trials (0 skips)")->capture_default_str();
  bounds->add_option("--seed", bf.seed, "Monte Carlo seed")->capture_default_str();
  bounds->add_option("--sweep", bf.sweep, "L range for the sweep, L_MIN..L_MAX");
  bounds->add_option("--format", bf.format)->check(CLI::IsMember({"json", "csv", "human"}))->capture_default_str();
  bounds->add_option("--out", bf.out, "write here instead of stdout");

  EnumerateFlags ef;
  auto* enumerate = app.add_subcommand("enumerate", "exhaustive count of undecodable straggler sets");
  enumerate->add_option("--la", ef.la)->capture_default_str();
  enumerate->add_option("--lb", ef.lb)->capture_default_str();
  enumerate->add_option("--s", ef.s, "straggler count (default 0..7)");
  enumerate->add_option("--max-sets", ef.max_sets, "enumeration guard")->capture_default_str();
  enumerate->add_option("--format", ef.format)->check(CLI::IsMember({"json", "csv", "human"}))->capture_default_str();
  enumerate->add_option("--out", ef.out);

  SimFlags sim_sf;
  ShapeFlags shape;
  std::string sim_format = "json";
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "simulate A B^T on random matrices");
  sim_sf.attach(simulate);
  simulate->add_option("--rows", shape.rows, "rows of A")->capture_default_str();
  simulate->add_option("--cols", shape.cols, "rows of B")->capture_default_str();
  simulate->add_option("--inner", shape.inner, "shared column count")->capture_default_str();
  simulate->add_option("--blocks-a", shape.blocks_a, "systematic row blocks of A (default 2 la)");
  simulate->add_option("--blocks-b", shape.blocks_b, "systematic row blocks of B (default 2 lb)");
  simulate->add_option("--format", sim_format)->check(CLI::IsMember({"json", "csv", "human"}))->capture_default_str();
  simulate->add_option("--out", sim_out);

  SimFlags mul_sf;
  MultiplyFlags mf;
  auto* multiply = app.add_subcommand("multiply", "A B^T for matrices read from files");
  mul_sf.attach(multiply);
  multiply->add_option("--a", mf.a_path, "A (text or .cdm)")->required()->check(CLI::ExistingFile);
  multiply->add_option("--b", mf.b_path, "B (text or .cdm)")->required()->check(CLI::ExistingFile);
  multiply->add_option("--blocks-a", mf.blocks_a);
  multiply->add_option("--blocks-b", mf.blocks_b);
  multiply->add_option("--out", mf.out, "write C here (.cdm for binary)");
  multiply->add_option("--report", mf.report, "write the JSON report here");
  multiply->add_option("--store-dir", mf.store_dir, "dump the decoders' inputs and a manifest here");

  SimFlags mv_sf;
  MatvecFlags vf;
  auto* matvec = app.add_subcommand("matvec", "A x for matrices read from files");
  mv_sf.attach(matvec);
  matvec->add_option("--a", vf.a_path)->required()->check(CLI::ExistingFile);
  matvec->add_option("--x", vf.x_path)->required()->check(CLI::ExistingFile);
  matvec->add_option("--blocks", vf.blocks, "systematic row blocks")->capture_default_str();
  matvec->add_option("--out", vf.out);

  DecodeFlags df;
  auto* decode = app.add_subcommand("decode", "peel a dumped product grid and assemble C");
  decode->add_option("--manifest", df.manifest)->required()->check(CLI::ExistingFile);
  decode->add_option("--store-dir", df.store_dir)->required()->check(CLI::ExistingDirectory);
  decode->add_option("--out", df.out, "write C here (.cdm for binary)");

  SimFlags app_sf;
  AppFlags af;
  auto* app_cmd = app.add_subcommand("app", "run an application on an executor");
  app_sf.attach(app_cmd);
  app_cmd->add_option("name", af.name, "power-iter, krr, als or svd")
      ->required()
      ->check(CLI::IsMember({"power-iter", "krr", "als", "svd"}));
  app_cmd->add_option("--size", af.size, "problem size");
  app_cmd->add_option("--iters", af.iters, "iteration cap");
  app_cmd->add_option("--factors", af.factors, "ALS factor count")->capture_default_str();
  app_cmd->add_option("--out", af.out, "write the JSON report here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "codedmm: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (bounds->parsed()) return run_bounds(bf, out);
    if (enumerate->parsed()) return run_enumerate(ef, out);
    if (simulate->parsed()) return run_simulate(sim_sf, shape, sim_format, sim_out, out);
    if (multiply->parsed()) return run_multiply(mul_sf, mf, out);
    if (matvec->parsed()) return run_matvec_command(mv_sf, vf, out);
    if (decode->parsed()) return run_decode(df, out);
    if (app_cmd->parsed()) return run_app(app_sf, af, out);
  } catch (const UsageError& e) {
    err << "codedmm: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "codedmm: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "codedmm: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << "codedmm: no subcommand\n";
  return kExitUsage;
}

}  // namespace codedmm
