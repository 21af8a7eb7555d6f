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

#include <algorithm>
#include <random>
#include <set>

#include "vlaeval/model_server.hpp"
#include "vlaeval/orchestrator.hpp"

namespace vlaeval {
namespace {

std::vector<TaskSpec> tasks(std::size_t n, std::uint64_t max_steps = 100) {
  std::vector<TaskSpec> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"task" + std::to_string(i), "do task " + std::to_string(i), max_steps, 0.05});
  return out;
}

TEST(PlanShardsTest, LiberoProtocolFortyPerShard) {
  // 4 suites x 10 tasks x 50 episodes over 50 shards.
  auto plan = plan_shards(tasks(40), 50, 0, 50);
  EXPECT_EQ(plan.total_episodes(), 2000u);
  for (const auto& s : plan.shards) EXPECT_EQ(s.size(), 40u);
}

TEST(PlanShardsTest, SingleShardIsSequentialOrder) {
  auto plan = plan_shards(tasks(3), 4, 10, 1);
  ASSERT_EQ(plan.shards.size(), 1u);
  for (std::size_t g = 0; g < 12; ++g) {
    const auto& a = plan.shards[0][g];
    EXPECT_EQ(a.global_index, g);
    EXPECT_EQ(a.seed, 10 + g);
    EXPECT_EQ(a.task.task_id, "task" + std::to_string(g / 4));
    EXPECT_EQ(a.episode_index, g % 4);
  }
}

TEST(PlanShardsTest, BalancedRemainder) {
  auto plan = plan_shards(tasks(1), 7, 0, 3);
  EXPECT_EQ(plan.shards[0].size(), 3u);
  EXPECT_EQ(plan.shards[1].size(), 2u);
  EXPECT_EQ(plan.shards[2].size(), 2u);
  EXPECT_THROW(plan_shards(tasks(1), 7, 0, 0), std::invalid_argument);
}

TEST(PlanShardsProperty, PartitionAndBalance) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + rng() % 6, E = 1 + rng() % 30, N = 1 + rng() % 40;
    auto plan = plan_shards(tasks(T), E, 5, N);
    std::set<std::pair<std::string, std::uint64_t>> seen;
    std::set<std::uint64_t> seeds;
    for (const auto& shard : plan.shards) {
      for (const auto& a : shard) {
        EXPECT_TRUE(seen.insert({a.task.task_id, a.episode_index}).second);
        seeds.insert(a.seed);
      }
    }
    EXPECT_EQ(seen.size(), T * E);
    EXPECT_EQ(seeds.size(), T * E);
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t lo = SIZE_MAX, hi = 0;
      for (const auto& shard : plan.shards) {
        const auto n = std::count_if(shard.begin(), shard.end(),
                                     [&](const EpisodeAssignment& a) { return a.task.task_id == "task" + std::to_string(t); });
        lo = std::min<std::size_t>(lo, n);
        hi = std::max<std::size_t>(hi, n);
      }
      EXPECT_LE(hi - lo, 1u) << "T=" << T << " E=" << E << " N=" << N;
    }
  }
}

EpisodeResult result(const std::string& task, std::uint64_t i, bool success, std::optional<FailureReason> fail = {},
                     std::optional<std::uint32_t> chain = {}) {
  EpisodeResult r;
  r.episode_id = make_episode_id(task, i);
  r.task_id = task;
  r.seed = i;
  r.final_success = success;
  r.failure_reason = fail;
  r.chain_length = chain;
  r.steps_executed = r.obs_count = 10;
  return r;
}

TEST(AggregateTest, SuccessRate) {
  std::vector<EpisodeResult> rs;
  for (int i = 0; i < 500; ++i) rs.push_back(result("spatial", i, i < 476));
  auto m = aggregate(rs, false);
  EXPECT_NEAR(m.per_task_success_rate().at("spatial") * 100.0, 95.2, 1e-9);
  EXPECT_NEAR(m.suite_success_rate, 0.952, 1e-12);
  EXPECT_FALSE(m.avg_chain_length.has_value());
}

TEST(AggregateTest, ChainLength) {
  std::vector<EpisodeResult> rs;
  std::uint32_t lens[] = {5, 5, 3, 4, 4};
  for (int i = 0; i < 5; ++i) rs.push_back(result("calvin", i, lens[i] == 5, {}, lens[i]));
  EXPECT_NEAR(*aggregate(rs, true).avg_chain_length, 4.2, 1e-12);
}

TEST(AggregateTest, AllInfraFailures) {
  std::vector<EpisodeResult> rs;
  for (int i = 0; i < 4; ++i) rs.push_back(result("t", i, false, FailureReason::kEnvCrash));
  auto m = aggregate(rs, false);
  EXPECT_EQ(m.suite_success_rate, 0.0);
  EXPECT_FALSE(m.suite_infra_excluded_rate.has_value());
  EXPECT_FALSE(m.per_task.at("t").infra_excluded_rate.has_value());
  EXPECT_EQ(m.failed_infra, 4u);
}

TEST(AggregateTest, StrictAndInfraExcluded) {
  std::vector<EpisodeResult> rs = {result("a", 0, true), result("a", 1, false, FailureReason::kTimeout),
                                   result("a", 2, false), result("a", 3, true), result("b", 0, true),
                                   result("b", 1, true)};
  auto m = aggregate(rs, false, 2.0);
  EXPECT_DOUBLE_EQ(m.per_task.at("a").success_rate, 0.5);
  EXPECT_DOUBLE_EQ(*m.per_task.at("a").infra_excluded_rate, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.suite_success_rate, 0.75);
  EXPECT_DOUBLE_EQ(*m.suite_infra_excluded_rate, (2.0 / 3.0 + 1.0) / 2.0);
  EXPECT_DOUBLE_EQ(m.obs_per_s, 30.0);
  EXPECT_THROW(aggregate({}, false), EmptyResults);
}

TEST(AggregateProperty, LinearAndOrderIndependent) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EpisodeResult> all;
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<FailureReason> f;
      if (rng() % 7 == 0) f = FailureReason::kEnvCrash;
      all.push_back(result("t" + std::to_string(rng() % 3), i, !f && rng() % 2, f, std::uint32_t(rng() % 6)));
    }
    const Json flat = to_json(aggregate(all, true), false);
    std::vector<EpisodeResult> shuffled = all;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    // Union of shard-local lists in shard order.
    std::vector<EpisodeResult> unioned;
    const std::size_t N = 1 + rng() % 5;
    for (std::size_t s = 0; s < N; ++s)
      for (std::size_t i = s; i < all.size(); i += N) unioned.push_back(all[i]);
    EXPECT_EQ(to_json(aggregate(shuffled, true), false), flat);
    EXPECT_EQ(to_json(aggregate(unioned, true), false), flat);
  }
}

TEST(SpeedupTest, Arithmetic) {
  EXPECT_NEAR(speedup(14 * 3600.0, 18 * 60.0), 46.67, 0.01);
  EXPECT_DOUBLE_EQ(speedup(5.0, 5.0), 1.0);
  EXPECT_THROW(speedup(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(speedup(1.0, -1.0), std::invalid_argument);
}

class ShardedRunTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ModelServerConfig c;
    c.policy = {"proportional", {{"gain", 0.5}}};
    c.port = 0;
    c.max_batch_size = 4;
    c.max_wait_ms = 1.0;
    server_ = std::make_unique<ServerHandle>(c);
    config_.name = "transient_reach";
    config_.tasks = {{"near", "near task", 30, 0.05}, {"far", "far task", 30, 0.05}};
    config_.episodes_per_task = 20;
    config_.base_seed = 3;
  }

  ShardedRun run(std::uint64_t n, ShardedRunOptions opts = {}) {
    if (opts.worker_path.empty()) opts.worker_path = VLAEVAL_WORKER_PATH;
    return run_sharded(config_, n, server_->endpoint(), opts);
  }

  static std::vector<EpisodeResult> outcomes(const ShardedRun& r) {
    std::vector<EpisodeResult> out;
    for (const auto& e : r.results) out.push_back(e.without_timing());
    return out;
  }

  std::unique_ptr<ServerHandle> server_;
  BenchmarkConfig config_;
};

TEST_F(ShardedRunTest, ResultsIndependentOfShardCount) {
  auto one = run(1);
  auto four = run(4);
  ASSERT_EQ(one.results.size(), 40u);
  EXPECT_EQ(outcomes(one), outcomes(four));
  for (const auto& r : one.results) EXPECT_FALSE(r.failed()) << r.episode_id;
  EXPECT_EQ(to_json(aggregate(one.results, false), false), to_json(aggregate(four.results, false), false));
  EXPECT_EQ(one.worker_status, std::vector<int>{0});
}

TEST_F(ShardedRunTest, MoreShardsThanEpisodes) {
  config_.episodes_per_task = 1;
  auto r = run(5);
  ASSERT_EQ(r.results.size(), 2u);
  EXPECT_EQ(r.worker_status, std::vector<int>(5, 0));
  for (const auto& e : r.results) EXPECT_FALSE(e.failed());
}

TEST_F(ShardedRunTest, KilledWorkerOnlyLosesItsShard) {
  ShardedRunOptions opts;
  opts.container_cmd = {"sh", "-c", "case \"$*\" in *'--shard 1 '*) kill -9 $$;; esac; exec \"$@\"", "sh"};
  auto r = run(3, opts);
  EXPECT_EQ(r.worker_status[0], 0);
  EXPECT_EQ(r.worker_status[1], 128 + 9);
  EXPECT_EQ(r.worker_status[2], 0);
  auto plan = plan_shards(config_, 3);
  for (const auto& e : r.results) {
    const bool on_killed = std::any_of(plan.shards[1].begin(), plan.shards[1].end(), [&](const EpisodeAssignment& a) {
      return make_episode_id(a.task.task_id, a.episode_index) == e.episode_id;
    });
    EXPECT_EQ(e.failure_reason == FailureReason::kEnvCrash, on_killed) << e.episode_id;
  }
}

TEST_F(ShardedRunTest, SpawnFailureMarksEnvCrash) {
  ShardedRunOptions opts;
  opts.worker_path = "/nonexistent/vla-eval-worker";
  auto r = run(2, opts);
  ASSERT_EQ(r.results.size(), 40u);
  for (const auto& e : r.results) EXPECT_EQ(e.failure_reason, FailureReason::kEnvCrash);
}

TEST_F(ShardedRunTest, UnreachableServerIsConnectionLoss) {
  const Endpoint ep = server_->endpoint();
  server_->stop();
  ShardedRunOptions opts;
  opts.worker_path = VLAEVAL_WORKER_PATH;
  auto r = run_sharded(config_, 2, ep, opts);
  EXPECT_TRUE(r.connection_lost);
  for (const auto& e : r.results) EXPECT_EQ(e.failure_reason, FailureReason::kProtocolError);
}

}  // namespace
}  // namespace vlaeval
