// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "codedmm/errors.hpp"
#include "codedmm/object_store.hpp"
#include "codedmm/rng.hpp"
#include "codedmm/run_report.hpp"
#include "codedmm/sim_config.hpp"

namespace codedmm {
namespace {

Blob bytes(std::initializer_list<int> values) {
  Blob out;
  for (int v : values) out.push_back(static_cast<std::byte>(v));
  return out;
}

TEST(ObjectStore, ChargesFixedPlusPerByteLatency) {
  ObjectStore store(StoreLatency{0.05, 0.001});
  EXPECT_NEAR(store.write("k", bytes({1, 2, 3, 4, 5, 6, 7, 8})), 0.058, 1e-15);
  const auto r = store.read("k");
  EXPECT_NEAR(r.seconds, 0.058, 1e-15);
  EXPECT_EQ(store.counters().reads, 1u);
  EXPECT_EQ(store.counters().writes, 1u);
  EXPECT_EQ(store.counters().bytes_read, 8u);
  EXPECT_EQ(store.counters().bytes_written, 8u);
  EXPECT_NEAR(store.counters().charged_seconds, 0.116, 1e-15);
}

TEST(ObjectStore, RoundTripsBytes) {
  ObjectStore store;
  Rng rng(5);
  Blob blob(1000);
  for (auto& b : blob) b = static_cast<std::byte>(rng() & 0xff);
  store.write("x/y", blob);
  EXPECT_EQ(store.read("x/y").blob, blob);
  EXPECT_TRUE(store.contains("x/y"));
  EXPECT_EQ(store.keys(), (std::vector<std::string>{"x/y"}));
}

TEST(ObjectStore, PreloadIsFree) {
  ObjectStore store;
  store.preload("a", bytes({1}));
  EXPECT_EQ(store.counters().writes, 0u);
  EXPECT_EQ(store.counters().charged_seconds, 0.0);
  EXPECT_EQ(store.size(), 1u);
}

TEST(ObjectStore, MissingKeyThrows) {
  ObjectStore store;
  EXPECT_THROW(store.read("nope"), MissingKeyError);
}

TEST(SampleTaskTime, DeterministicExamples) {
  Rng rng(1);
  StragglerModel m;
  m.p = 0.0;
  m.jitter = 0.0;
  m.base_time = 1.0;
  auto t = sample_task_time(m, 5.0, rng);
  EXPECT_DOUBLE_EQ(t.seconds, 5.0);
  EXPECT_FALSE(t.straggled);
  m.p = 1.0;
  m.straggler_factor = 3.0;
  t = sample_task_time(m, 1.0, rng);
  EXPECT_DOUBLE_EQ(t.seconds, 3.0);
  EXPECT_TRUE(t.straggled);
  t = sample_task_time(m, 1.0, rng, false);
  EXPECT_DOUBLE_EQ(t.seconds, 1.0);
}

TEST(SampleTaskTime, StraggleFrequencyMatchesP) {
  Rng rng(2024);
  StragglerModel m;
  std::size_t straggled = 0;
  for (int k = 0; k < 100000; ++k) straggled += sample_task_time(m, 1.0, rng).straggled ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(straggled) / 1e5, 0.02, 0.003);
}

TEST(SampleTaskTime, JitterStaysInRange) {
  Rng rng(3);
  StragglerModel m;
  m.p = 0.0;
  m.base_time = 2.0;
  for (int k = 0; k < 1000; ++k) {
    const double s = sample_task_time(m, 1.0, rng).seconds;
    EXPECT_GE(s, 2.0 * 0.9);
    EXPECT_LE(s, 2.0 * 1.1);
  }
}

TEST(SampleTaskTime, ChangingPDoesNotShiftLaterDraws) {
  StragglerModel lo;
  lo.p = 0.0;
  StragglerModel hi;
  hi.p = 0.5;
  Rng a(9);
  Rng b(9);
  for (int k = 0; k < 100; ++k) {
    sample_task_time(lo, 1.0, a);
    sample_task_time(hi, 1.0, b);
  }
  EXPECT_EQ(a(), b());
}

TEST(Rng, StreamsAreDistinctAndReproducible) {
  EXPECT_EQ(derive_seed(7, Stream::kCompute, 3), derive_seed(7, Stream::kCompute, 3));
  std::set<std::uint64_t> seen;
  for (auto s : {Stream::kEncode, Stream::kCompute, Stream::kDecode, Stream::kRun}) {
    for (std::uint64_t c = 0; c < 100; ++c) seen.insert(derive_seed(7, s, c));
  }
  EXPECT_EQ(seen.size(), 400u);
  Rng a = make_stream(1, Stream::kData, 0);
  Rng b = make_stream(1, Stream::kData, 0);
  EXPECT_EQ(a(), b());
  EXPECT_NE(mix64(0), mix64(1));
}

TEST(SimConfig, ParsesNestedAndDottedKeys) {
  const auto nested = sim_config_from_json(nlohmann::json::parse(
      R"({"model": {"p": 0.1, "straggler_factor": 4}, "policy": {"q": 0.5}, "seed": 12})"));
  EXPECT_DOUBLE_EQ(nested.model.p, 0.1);
  EXPECT_DOUBLE_EQ(nested.model.straggler_factor, 4.0);
  EXPECT_DOUBLE_EQ(nested.policy.q, 0.5);
  EXPECT_EQ(nested.seed, 12u);
  const auto dotted = sim_config_from_json(
      nlohmann::json::parse(R"({"model.p": 0.1, "model.straggler_factor": 4, "policy.q": 0.5, "seed": 12})"));
  EXPECT_EQ(to_json(nested), to_json(dotted));
}

TEST(SimConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_ANY_THROW(sim_config_from_json(nlohmann::json::parse(R"({"model": {"pp": 0.1}})")));
  EXPECT_ANY_THROW(sim_config_from_json(nlohmann::json::parse(R"({"bogus": 1})")));
  EXPECT_ANY_THROW(sim_config_from_json(nlohmann::json::parse(R"({"model.p": 1.5})")));
  EXPECT_ANY_THROW(sim_config_from_json(nlohmann::json::parse(R"({"policy.q": 0})")));
}

TEST(SimConfig, JsonRoundTrip) {
  SimConfig cfg;
  cfg.model.p = 0.07;
  cfg.policy.deadline_quantile = 0.95;
  cfg.code.la = 4;
  cfg.seed = 99;
  EXPECT_EQ(to_json(sim_config_from_json(to_json(cfg))), to_json(cfg));
}

TEST(SimConfig, LoadsFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "codedmm_test_config.json";
  {
    std::ofstream f(path);
    f << R"({"code": {"la": 3, "lb": 5}})";
  }
  const auto cfg = load_sim_config(path);
  EXPECT_EQ(cfg.code.la, 3u);
  EXPECT_EQ(cfg.code.lb, 5u);
  std::filesystem::remove(path);
  EXPECT_ANY_THROW(load_sim_config(path));
}

TEST(Strategy, ParsesNames) {
  EXPECT_EQ(parse_strategy("coded"), Strategy::kCoded);
  EXPECT_STREQ(to_string(parse_strategy("speculative")), "speculative");
  EXPECT_THROW(parse_strategy("fast"), std::invalid_argument);
}

TEST(RunReport, CsvRowMatchesHeader) {
  RunReport r;
  r.strategy = "coded";
  r.operation = "matmul";
  r.t_enc = 1.0;
  r.t_comp = 2.0;
  r.t_dec = 0.5;
  r.t_total = 3.5;
  r.decode_reads = {2, 3};
  const auto header = run_report_csv_header();
  const auto row = to_csv_row(r);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_NE(row.find("coded,matmul"), std::string::npos);
  const auto j = to_json(r);
  EXPECT_DOUBLE_EQ(j.at("t_total").get<double>(), 3.5);
}

}  // namespace
}  // namespace codedmm
