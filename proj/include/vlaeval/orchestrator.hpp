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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlaeval/benchmark.hpp"
#include "vlaeval/runner.hpp"

namespace vlaeval {

struct ShardPlan {
  std::uint64_t shard_count = 1;
  std::vector<std::vector<EpisodeAssignment>> shards;

  std::uint64_t total_episodes() const;
};

// Task-major global order; episode g goes to shard g mod N. Throws
// std::invalid_argument when N is 0.
ShardPlan plan_shards(const std::vector<TaskSpec>& tasks, std::uint64_t episodes_per_task, std::uint64_t base_seed,
                      std::uint64_t shard_count);
ShardPlan plan_shards(const BenchmarkConfig& config, std::uint64_t shard_count);

struct ShardedRunOptions {
  std::filesystem::path worker_path;      // empty: locate vla-eval-worker
  std::vector<std::string> container_cmd;  // prefix for every worker command line
  std::filesystem::path work_dir;          // per-shard files; empty: a fresh temp dir
  Millis step_timeout{30000};
};

// Worker exit codes.
inline constexpr int kWorkerOk = 0;
inline constexpr int kWorkerConnectionLost = 3;
inline constexpr int kWorkerUsage = 2;

struct ShardedRun {
  std::vector<EpisodeResult> results;  // global order
  std::vector<int> worker_status;      // exit code, or 128 + signal
  double wall_time_s = 0.0;
  std::uint64_t observations = 0;
  bool connection_lost = false;
};

// Launches one worker process per shard and collects their results.
// Episodes without a result (spawn failure, killed worker) carry env_crash.
ShardedRun run_sharded(const BenchmarkConfig& config, std::uint64_t shard_count, const Endpoint& endpoint,
                       const ShardedRunOptions& options = {});

// Starts every command at once and waits for all of them. Status is the
// exit code, 128 + signal, or 127 when the process could not be started.
std::vector<int> run_processes(const std::vector<std::vector<std::string>>& commands);

// A fresh private directory under the system temp dir.
std::filesystem::path make_work_dir();

// The worker binary next to the running executable, else VLA_EVAL_WORKER,
// else "vla-eval-worker" on PATH.
std::filesystem::path default_worker_path();

class EmptyResults : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TaskMetrics {
  std::uint64_t episodes = 0;
  std::uint64_t succeeded = 0;
  std::uint64_t failed_infra = 0;
  double success_rate = 0.0;                    // failures count as unsuccessful
  std::optional<double> infra_excluded_rate;    // absent when every episode failed
};

struct AggregateMetrics {
  std::map<std::string, TaskMetrics> per_task;
  double suite_success_rate = 0.0;  // mean of per-task rates
  std::optional<double> suite_infra_excluded_rate;
  std::optional<double> avg_chain_length;
  std::uint64_t episodes_total = 0;
  std::uint64_t succeeded = 0;
  std::uint64_t failed_infra = 0;
  double wall_time_s = 0.0;
  double obs_per_s = 0.0;

  std::map<std::string, double> per_task_success_rate() const;
};

// Order-independent. Throws EmptyResults.
AggregateMetrics aggregate(const std::vector<EpisodeResult>& results, bool chain_mode, double wall_time_s = 0.0);

Json to_json(const AggregateMetrics& metrics, bool include_timing = true);

// sequential / parallel; both must be > 0.
double speedup(double sequential_s, double parallel_s);

}  // namespace vlaeval
