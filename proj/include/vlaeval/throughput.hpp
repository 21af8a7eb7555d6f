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
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlaeval/benchmark.hpp"
#include "vlaeval/model_server.hpp"
#include "vlaeval/params.hpp"

namespace vlaeval {

struct ThroughputProfile {
  std::map<std::uint64_t, double> lambda_samples;  // shards N -> obs/s
  std::map<std::uint64_t, double> mu_samples;      // batch size B -> obs/s
  double measurement_duration_s = 0.0;

  // Throws std::invalid_argument unless both sides have positive samples.
  void validate() const;
};

struct OperatingPoint {
  std::uint64_t n_star = 0;
  std::uint64_t b_star = 0;
  double utilization = 0.0;  // lambda(N*) / mu(B*)
  double headroom = 0.8;
};

class NoFeasiblePoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// B* = argmax mu (ties: smallest B); N* = argmax lambda subject to
// lambda < headroom * mu(B*) (ties: smallest N). Throws NoFeasiblePoint.
OperatingPoint select_operating_point(const ThroughputProfile& profile, double headroom = 0.8);

// total_episodes * mean_steps / lambda(N*), in seconds.
double project_wall_time(std::uint64_t total_episodes, double mean_steps, const OperatingPoint& op,
                         const ThroughputProfile& profile);

struct Measurement {
  std::map<std::uint64_t, double> samples;
  std::map<std::uint64_t, std::string> failures;  // omitted samples and why
};

struct LambdaOptions {
  std::filesystem::path worker_path;  // empty: default_worker_path()
  std::vector<std::string> container_cmd;
};

// Environment demand: N worker processes step against an in-process echo
// server for the given duration; lambda(N) is the sum of per-worker rates.
Measurement measure_lambda(const BenchmarkConfig& config, const std::vector<std::uint64_t>& shard_counts,
                           std::chrono::duration<double> duration, const LambdaOptions& options = {});

// Model supply: for each B, a server built from base with max_batch_size = B
// is saturated by 2B closed-loop connections; mu(B) counts requests
// completed per second after a short warm-up.
Measurement measure_mu(const ModelServerConfig& base, const std::vector<std::uint64_t>& batch_sizes,
                       std::chrono::duration<double> duration);

struct QueueTrace {
  std::vector<std::size_t> samples;  // pending requests, one per interval
  double p95 = 0.0;
  std::size_t final_length = 0;
  std::uint64_t submitted = 0;
  std::uint64_t completed = 0;
};

// Open-loop Poisson arrivals at arrival_rate obs/s into a server built from
// config, sampling the pending-queue length every sample_interval.
QueueTrace simulate_queue(const ModelServerConfig& config, double arrival_rate, std::chrono::duration<double> duration,
                          std::chrono::milliseconds sample_interval = std::chrono::milliseconds(10),
                          std::uint64_t seed = 0);

double percentile(std::vector<double> values, double q);

Json to_json(const ThroughputProfile& profile);
Json to_json(const OperatingPoint& op);
// Rows "curve,x,obs_per_s" for both curves.
std::string profile_csv(const ThroughputProfile& profile);

}  // namespace vlaeval
