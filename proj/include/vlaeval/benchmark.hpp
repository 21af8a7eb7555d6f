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
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vlaeval/errors.hpp"
#include "vlaeval/observation.hpp"
#include "vlaeval/params.hpp"

namespace vlaeval {

struct TaskSpec {
  std::string task_id;
  std::string task_description;
  std::uint64_t max_episode_steps = 100;
  double success_tolerance = 0.05;
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> std;

  // Throws SchemaViolation unless lengths agree with dim and std > 0.
  void validate(std::size_t dim, const std::string& path) const;
  std::vector<double> normalize(std::span<const double> raw) const;
  std::vector<double> denormalize(std::span<const double> normalized) const;
};

struct StepResult {
  ObservationPayload obs;
  bool terminated = false;
  bool truncated = false;
  bool success_event = false;
  Value::Object info;
};

class UnknownTask : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadActionShape : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnvCrash : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TerminationPolicy { kStopOnTerminated, kRunToTruncation };

std::string_view to_string(TerminationPolicy policy);
TerminationPolicy parse_termination_policy(std::string_view name);  // throws std::invalid_argument

struct BenchmarkConfig {
  std::string name = "point_reach";
  std::vector<TaskSpec> tasks;
  std::uint64_t episodes_per_task = 10;
  std::uint64_t base_seed = 0;
  bool normalize = false;
  std::optional<NormalizationStats> normalization_stats;
  TerminationPolicy termination_policy = TerminationPolicy::kRunToTruncation;
  Json params = Json::object();

  std::uint64_t total_episodes() const { return episodes_per_task * tasks.size(); }
  std::uint64_t episode_seed(std::uint64_t global_index) const { return base_seed + global_index; }
  const TaskSpec& task(std::string_view task_id) const;  // throws UnknownTask
};

Json to_json(const BenchmarkConfig& config);
// Strict parse. Throws SchemaViolation, or MissingNormalizationStats when
// normalize is set without statistics.
BenchmarkConfig benchmark_config_from_json(const Json& doc, const std::string& path = "benchmark");

// The four-method benchmark contract. One instance per process; not shared.
class StepBenchmark {
 public:
  virtual ~StepBenchmark() = default;

  virtual std::string_view name() const = 0;
  // Throws UnknownTask.
  virtual ObservationPayload reset(const std::string& task_id, std::uint64_t seed) = 0;
  // Throws BadActionShape or EnvCrash.
  virtual void step(std::span<const double> action) = 0;
  virtual ObservationPayload make_obs() const = 0;
  virtual StepResult get_step_result() const = 0;
  // Consecutive sub-goals completed; only chained benchmarks report one.
  virtual std::optional<std::uint32_t> chained_subtask_progress() const { return std::nullopt; }

  virtual std::size_t action_dim() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::uint64_t steps_taken() const = 0;
};

// Built-in synthetic suite:
//   point_reach      move a point to a seeded goal
//   transient_reach  the first success knocks the goal away for good
//   chained          five seeded sub-goals in sequence
//   fault_injection  wraps another benchmark and crashes on schedule
// Throws SchemaViolation for unknown names or bad params.
std::unique_ptr<StepBenchmark> make_benchmark(const BenchmarkConfig& config);

std::vector<std::string> builtin_benchmark_names();

}  // namespace vlaeval
