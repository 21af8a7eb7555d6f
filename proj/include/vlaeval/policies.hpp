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

#include "vlaeval/chunking.hpp"
#include "vlaeval/observation.hpp"
#include "vlaeval/params.hpp"

namespace vlaeval {

struct PredictContext {
  std::string episode_id;
  // Environment step at which this prediction is requested.
  std::uint64_t step_index = 0;
  std::string task_id;
};

class ModelFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PredictRequest {
  ObservationPayload obs;
  PredictContext ctx;
};

struct PredictOutcome {
  std::optional<ActionChunk> chunk;
  std::string error;  // set iff chunk is empty

  bool ok() const { return chunk.has_value(); }
};

// The blocking policy contract: one observation in, one T x D chunk out.
class Policy {
 public:
  Policy(std::size_t horizon, std::size_t action_dim) : horizon_(horizon), action_dim_(action_dim) {}
  virtual ~Policy() = default;

  virtual std::string_view name() const = 0;
  // Throws ModelFailure.
  virtual ActionChunk predict(const ObservationPayload& obs, const PredictContext& ctx) = 0;

  // Result i answers request i. A failing element does not affect the
  // others. The default runs predict() per element.
  virtual std::vector<PredictOutcome> predict_batch(std::span<const PredictRequest> batch);

  std::size_t horizon() const { return horizon_; }
  std::size_t action_dim() const { return action_dim_; }

 protected:
  std::size_t horizon_;
  std::size_t action_dim_;
};

struct PolicySpec {
  std::string name = "proportional";
  Json params = Json::object();
};

// Built-in policies:
//   proportional   plan k(1-k)^i * d, d = goal - pos read from states[0:3]
//   constant       every row equals params.action
//   replay         row i = params.trajectory[min(step + i, len - 1)]
//   chain_script   proportional on sub-goal j with probability success_prob[j]
//   echo           all-zero actions
// Throws SchemaViolation for unknown names or bad params.
std::unique_ptr<Policy> make_policy(const PolicySpec& spec, std::size_t horizon, std::size_t action_dim,
                                    const std::string& path = "policy");

std::vector<std::string> builtin_policy_names();

}  // namespace vlaeval
