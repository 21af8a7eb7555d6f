/* Copyright 2026 The vla-eval Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "coverage_fixture.hpp"
#include "vlaeval/leaderboard.hpp"

namespace vlaeval {
namespace {

namespace fs = std::filesystem;

ProtocolRegistry small_protocols() {
  return {{"p1", {"p1", "b1", "success_rate", 0.0, 100.0, "g1"}},
          {"p1x", {"p1x", "b1", "success_rate", 0.0, 100.0, "g1x"}},
          {"p2", {"p2", "b2", "avg_len", 0.0, 5.0, "g2"}}};
}

LeaderboardEntry entry(std::string model, std::string protocol, double value, std::string source = "report") {
  const auto p = small_protocols().at(protocol);
  return {std::move(model), p.benchmark, protocol, p.metric_name, value, std::move(source), CuratedBy::kAgent, {}};
}

std::vector<LeaderboardEntry> three_models() {
  return {entry("A", "p1", 80.0), entry("B", "p1", 70.0), entry("B", "p2", 3.5), entry("C", "p1", 75.0)};
}

TEST(ValidateEntryTest, AcceptsValidEntry) {
  EXPECT_TRUE(validate_entry(entry("A", "p1", 55.0), small_protocols()).empty());
  EXPECT_TRUE(validate_entry(entry("A", "p1", 100.0), small_protocols()).empty());
}

TEST(ValidateEntryTest, UnknownProtocol) {
  auto e = entry("A", "p1", 50.0);
  e.protocol_id = "nope";
  const auto v = validate_entry(e, small_protocols());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::kUnknownProtocol);
  EXPECT_NE(v[0].message.find("unknown protocol"), std::string::npos);
}

TEST(ValidateEntryTest, OutOfRange) {
  const auto v = validate_entry(entry("A", "p1", 103.0), small_protocols());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::kRange);
  EXPECT_EQ(validate_entry(entry("A", "p2", -0.1), small_protocols())[0].kind, ViolationKind::kRange);
}

TEST(ValidateEntryTest, Duplicate) {
  const std::vector<LeaderboardEntry> accepted = {entry("A", "p1", 50.0)};
  const auto v = validate_entry(entry("A", "p1", 60.0), small_protocols(), accepted);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::kDuplicate);
  EXPECT_TRUE(validate_entry(entry("A", "p1", 60.0, "other report"), small_protocols(), accepted).empty());
}

TEST(ValidateEntryTest, SchemaProblems) {
  auto e = entry("", "p1", NAN);
  e.benchmark = "b2";
  const auto v = validate_entry(e, small_protocols());
  std::set<std::string> where;
  for (const auto& x : v) {
    EXPECT_EQ(x.kind, ViolationKind::kSchema);
    where.insert(x.where);
  }
  EXPECT_EQ(where, (std::set<std::string>{"model", "value", "benchmark"}));
}

TEST(ValidateEntryProperty, Idempotent) {
  std::mt19937_64 rng(10);
  const char* protocols[] = {"p1", "p1x", "p2", "zz"};
  std::vector<LeaderboardEntry> entries;
  for (int i = 0; i < 300; ++i) {
    auto e = entry("m" + std::to_string(rng() % 20), "p1", static_cast<double>(rng() % 130) - 10.0,
                   "s" + std::to_string(rng() % 3));
    e.protocol_id = protocols[rng() % 4];
    entries.push_back(e);
  }
  EXPECT_EQ(validate_entries(entries, small_protocols()), validate_entries(entries, small_protocols()));
}

TEST(CoverageTest, ThreeModels) {
  const auto h = coverage_distribution(three_models());
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h.at(1).count, 2u);
  EXPECT_DOUBLE_EQ(h.at(1).fraction, 2.0 / 3.0);
  EXPECT_EQ(h.at(2).count, 1u);
  EXPECT_DOUBLE_EQ(h.at(2).fraction, 1.0 / 3.0);
}

TEST(CoverageTest, ManyEntriesOneBenchmark) {
  const auto h = coverage_distribution({entry("A", "p1", 1), entry("A", "p1x", 2), entry("A", "p1", 3, "x")});
  EXPECT_EQ(h, (std::map<std::uint32_t, CoverageBin>{{1, {1, 1.0}}}));
}

TEST(CoverageTest, EmptyRegistry) { EXPECT_THROW(coverage_distribution({}), EmptyRegistry); }

TEST(CoverageTest, LongTailRegistry) {
  const auto reg = testing::long_tail_registry();
  ASSERT_EQ(reg.entries.size(), 657u);
  EXPECT_TRUE(validate_entries(reg.entries, reg.protocols).empty());
  const auto h = coverage_distribution(reg.entries);
  const std::map<std::uint32_t, std::uint64_t> want = {{1, 412}, {2, 66}, {3, 18}, {4, 10}, {5, 2}, {6, 1}};
  std::uint64_t five_plus = 0, three_plus = 0;
  for (const auto& [k, bin] : h) {
    EXPECT_EQ(bin.count, want.at(k));
    if (k >= 5) five_plus += bin.count;
    if (k >= 3) three_plus += bin.count;
  }
  EXPECT_EQ(h.size(), want.size());
  EXPECT_EQ(std::lround(100.0 * h.at(1).fraction), 81);
  EXPECT_EQ(five_plus, 3u);
  EXPECT_EQ(std::lround(100.0 * three_plus / 509.0), 6);
}

TEST(CoverageProperty, FractionsSumToOne) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LeaderboardEntry> entries;
    std::set<std::string> models;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      const std::string m = "m" + std::to_string(rng() % 25);
      models.insert(m);
      entries.push_back(entry(m, rng() % 2 ? "p1" : "p2", 1.0));
    }
    double sum = 0;
    std::uint64_t count = 0;
    for (const auto& [k, bin] : coverage_distribution(entries)) {
      sum += bin.fraction;
      count += bin.count;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(count, models.size());
  }
}

TEST(QueryTest, FilterByBenchmark) {
  const auto groups = query(three_models(), small_protocols(), {.benchmark = "b1"});
  ASSERT_EQ(groups.size(), 1u);
  ASSERT_EQ(groups[0].rows.size(), 3u);
  EXPECT_EQ(groups[0].rows[0].entry.model, "A");
  EXPECT_EQ(groups[0].rows[1].entry.model, "C");
  EXPECT_EQ(groups[0].rows[2].entry.model, "B");
  EXPECT_EQ(groups[0].rows[2].rank, 3u);
}

TEST(QueryTest, FilterByModelAndGroup) {
  EXPECT_EQ(query(three_models(), small_protocols(), {.model = "B"}).size(), 2u);
  const auto g2 = query(three_models(), small_protocols(), {.group = "g2"});
  ASSERT_EQ(g2.size(), 1u);
  EXPECT_EQ(g2[0].rows.size(), 1u);
  EXPECT_TRUE(query(three_models(), small_protocols(), {.benchmark = "nothing"}).empty());
}

TEST(QueryTest, TiesByModelName) {
  const auto groups = query({entry("zed", "p1", 50), entry("amy", "p1", 50), entry("kim", "p1", 60)}, small_protocols());
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].rows[0].entry.model, "kim");
  EXPECT_EQ(groups[0].rows[1].entry.model, "amy");
  EXPECT_EQ(groups[0].rows[2].entry.model, "zed");
}

TEST(QueryProperty, GroupsNeverInterleave) {
  std::mt19937_64 rng(12);
  const char* protocols[] = {"p1", "p1x", "p2"};
  std::vector<LeaderboardEntry> entries;
  for (int i = 0; i < 200; ++i) {
    const char* p = protocols[rng() % 3];
    entries.push_back(entry("m" + std::to_string(i), p, static_cast<double>(rng() % 5)));
  }
  const auto protos = small_protocols();
  std::set<std::string> seen;
  for (const auto& g : query(entries, protos)) {
    EXPECT_TRUE(seen.insert(g.comparability_group).second);
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
      EXPECT_EQ(protos.at(g.rows[i].entry.protocol_id).comparability_group, g.comparability_group);
      if (i > 0) {
        EXPECT_GE(g.rows[i - 1].entry.value, g.rows[i].entry.value);
      }
    }
  }
}

TEST(QueryOutputTest, CsvAndJson) {
  const auto groups = query(three_models(), small_protocols(), {.group = "g2"});
  EXPECT_EQ(query_csv(groups),
            "comparability_group,rank,model,benchmark,protocol_id,metric_name,value,source,curated_by\n"
            "g2,1,B,b2,p2,avg_len,3.5,report,agent\n");
  const Json j = to_json(groups);
  EXPECT_EQ(j[0]["rows"][0]["rank"], 1);
  EXPECT_EQ(j[0]["comparability_group"], "g2");
  EXPECT_NE(query_table(groups).find("== g2 =="), std::string::npos);
}

TEST(SampleRegistryTest, HandComputedHistogram) {
  const auto reg = load_registry(VLAEVAL_SAMPLE_REGISTRY);
  EXPECT_TRUE(reg.load_violations.empty());
  EXPECT_EQ(reg.protocols.size(), 10u);
  EXPECT_EQ(reg.entries.size(), 14u);
  EXPECT_TRUE(validate_entries(reg.entries, reg.protocols).empty());
  // alpha: 3 benchmarks; delta, eta: 2; beta, gamma, epsilon, zeta: 1.
  const std::map<std::uint32_t, CoverageBin> want = {{1, {4, 4.0 / 7}}, {2, {2, 2.0 / 7}}, {3, {1, 1.0 / 7}}};
  EXPECT_EQ(coverage_distribution(reg.entries), want);
  const auto spatial = query(reg.entries, reg.protocols, {.group = "libero_spatial"});
  ASSERT_EQ(spatial.size(), 1u);
  ASSERT_EQ(spatial[0].rows.size(), 3u);
  EXPECT_EQ(spatial[0].rows[1].entry.model, "beta-vla");
  EXPECT_EQ(spatial[0].rows[2].entry.model, "zeta-vla");
}

class RegistryDirTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("vlaeval-board-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "entries");
    fs::copy_file(fs::path(VLAEVAL_SAMPLE_REGISTRY) / "protocols.json", dir_ / "protocols.json");
  }
  void TearDown() override { fs::remove_all(dir_); }
  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / "entries" / name) << text; }
  fs::path dir_;
};

TEST_F(RegistryDirTest, MalformedEntriesBecomeViolations) {
  write("a.json", R"({"entries": [{"model": "m", "benchmark": "LIBERO", "protocol_id": "libero_goal",
      "metric_name": "success_rate", "value": 50, "source": "s", "curated_by": "robot"},
      {"model": "m", "benchmark": "LIBERO", "protocol_id": "libero_goal", "metric_name": "success_rate",
      "value": 50, "source": "s", "curated_by": "human", "extra": 1}]})");
  write("b.json", "not json");
  const auto reg = load_registry(dir_);
  EXPECT_TRUE(reg.entries.empty());
  ASSERT_EQ(reg.load_violations.size(), 3u);
  EXPECT_NE(reg.load_violations[0].message.find("curated_by"), std::string::npos);
  EXPECT_NE(reg.load_violations[1].message.find("extra"), std::string::npos);
  EXPECT_EQ(reg.load_violations[2].where, "b.json");
}

TEST_F(RegistryDirTest, BadProtocolsThrow) {
  std::ofstream(dir_ / "protocols.json") << R"({"protocols": [{"protocol_id": "x", "benchmark": "b",
      "metric_name": "m", "value_range": [1, 0], "comparability_group": "g"}]})";
  EXPECT_THROW(load_registry(dir_), SchemaViolation);
}

}  // namespace
}  // namespace vlaeval
