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

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlaeval/benchmark.hpp"
#include "vlaeval/params.hpp"
#include "vlaeval/transport.hpp"

namespace vlaeval {

enum class FailureReason { kEnvCrash, kTimeout, kProtocolError, kModelError };

std::string_view to_string(FailureReason reason);
FailureReason parse_failure_reason(std::string_view name);  // throws std::invalid_argument

struct EpisodeResult {
  std::string episode_id;
  std::string task_id;
  std::uint64_t seed = 0;
  bool final_success = false;
  std::optional<std::uint64_t> transient_success_step;
  std::uint64_t steps_executed = 0;
  std::optional<FailureReason> failure_reason;
  double wall_time_s = 0.0;
  std::uint64_t obs_count = 0;
  // Consecutive sub-goals completed, chained benchmarks only.
  std::optional<std::uint32_t> chain_length;

  bool failed() const { return failure_reason.has_value(); }
  // Copy with wall_time_s zeroed, for outcome comparisons.
  EpisodeResult without_timing() const;

  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

Json to_json(const EpisodeResult& result);
EpisodeResult episode_result_from_json(const Json& doc);  // throws SchemaViolation

// "<task_id>#<episode_index>"
std::string make_episode_id(std::string_view task_id, std::uint64_t episode_index);

struct RunOptions {
  TerminationPolicy termination = TerminationPolicy::kRunToTruncation;
  Millis step_timeout{30000};
};

// Drives one episode over a handshaken connection. Never throws for episode
// failures; they are reported through failure_reason. A connection that
// timed out or broke protocol is marked broken.
EpisodeResult run_episode(StepBenchmark& bench, Connection& conn, const TaskSpec& task, std::uint64_t seed,
                          const std::string& episode_id, const RunOptions& options);

using BenchmarkFactory = std::function<std::unique_ptr<StepBenchmark>()>;
// Returns a handshaken connection; throws when the server is unreachable.
using ConnectionFactory = std::function<std::unique_ptr<Connection>()>;

// Connects to a model server and performs the runner handshake.
ConnectionFactory websocket_connector(Endpoint endpoint, Millis timeout = Millis(5000));

struct EpisodeAssignment {
  TaskSpec task;
  std::uint64_t episode_index = 0;  // within the task
  std::uint64_t global_index = 0;   // task-major across the run
  std::uint64_t seed = 0;
};

// Every episode of a config in task-major order.
std::vector<EpisodeAssignment> all_assignments(const BenchmarkConfig& config);

struct RunReport {
  std::vector<EpisodeResult> results;  // one per assignment, in order
  // Set when the server could not be reached again; the episodes from that
  // point on carry protocol_error.
  bool connection_lost = false;
  double wall_time_s = 0.0;
  std::uint64_t observations = 0;
};

using ResultSink = std::function<void(const EpisodeResult&)>;

// Runs assignments sequentially. After a failed episode the benchmark is
// re-created; after a timeout or protocol error the connection is too.
// sink, when set, sees each result as soon as it is final.
RunReport run_assignments(const BenchmarkFactory& make_bench, const ConnectionFactory& connect,
                          const std::vector<EpisodeAssignment>& assignments, const RunOptions& options,
                          const ResultSink& sink = {});

// Cycles through assignments until duration has elapsed (the episode in
// flight is finished). Used to measure environment-side throughput.
RunReport run_for_duration(const BenchmarkFactory& make_bench, const ConnectionFactory& connect,
                           const std::vector<EpisodeAssignment>& assignments, const RunOptions& options,
                           std::chrono::duration<double> duration);

// Episodes 0..episodes-1 of one task with seeds base_seed + i.
RunReport run_task(const BenchmarkFactory& make_bench, const ConnectionFactory& connect, const TaskSpec& task,
                   std::uint64_t episodes, std::uint64_t base_seed, const RunOptions& options);

}  // namespace vlaeval
