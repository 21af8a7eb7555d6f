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

#include "vlaeval/policies.hpp"

#include <cmath>

namespace vlaeval {

std::vector<PredictOutcome> Policy::predict_batch(std::span<const PredictRequest> batch) {
  std::vector<PredictOutcome> out;
  out.reserve(batch.size());
  for (const PredictRequest& req : batch) {
    try {
      out.push_back(PredictOutcome{predict(req.obs, req.ctx), {}});
    } catch (const std::exception& e) {
      out.push_back(PredictOutcome{std::nullopt, e.what()});
    }
  }
  return out;
}

namespace {

constexpr std::size_t kTranslationDims = 3;

// Optional (mean, std) the policy was "trained" with; states arriving
// normalized are mapped back before use.
struct StateStats {
  std::vector<double> mean;
  std::vector<double> std;

  static StateStats read(ParamReader& params) {
    StateStats s;
    s.mean = params.numbers("state_mean", std::vector<double>{});
    s.std = params.numbers("state_std", std::vector<double>{});
    if (s.mean.size() != s.std.size()) {
      throw SchemaViolation(params.child_path("state_std"), "must have the same length as state_mean");
    }
    for (double x : s.std) {
      if (!(x > 0.0)) throw SchemaViolation(params.child_path("state_std"), "entries must be > 0");
    }
    return s;
  }

  double raw(const std::vector<double>& states, std::size_t i) const {
    if (i >= states.size()) throw ModelFailure("observation has only " + std::to_string(states.size()) + " states");
    if (mean.empty()) return states[i];
    if (i >= mean.size()) throw ModelFailure("state statistics shorter than the state vector");
    return states[i] * std[i] + mean[i];
  }
};

void require_dims(std::size_t action_dim) {
  if (action_dim < kTranslationDims) {
    throw SchemaViolation("action_dim", "goal-reaching policies need at least 3 action dimensions");
  }
}

class ProportionalPolicy : public Policy {
 public:
  ProportionalPolicy(std::size_t horizon, std::size_t action_dim, ParamReader& params)
      : Policy(horizon, action_dim) {
    require_dims(action_dim);
    gain_ = params.number("gain", 0.5);
    if (!(gain_ > 0.0 && gain_ <= 1.0)) throw SchemaViolation(params.child_path("gain"), "must lie in (0, 1]");
    stats_ = StateStats::read(params);
  }

  std::string_view name() const override { return "proportional"; }

  ActionChunk predict(const ObservationPayload& obs, const PredictContext& ctx) override {
    return plan(obs, ctx.step_index);
  }

 protected:
  ActionChunk plan(const ObservationPayload& obs, std::uint64_t step) const {
    ActionChunk chunk(horizon_, action_dim_, step);
    double d[kTranslationDims];
    for (std::size_t k = 0; k < kTranslationDims; ++k) d[k] = stats_.raw(obs.states, k);
    // Row i assumes the earlier rows were executed unclipped.
    double scale = gain_;
    for (std::size_t i = 0; i < horizon_; ++i) {
      for (std::size_t k = 0; k < kTranslationDims; ++k) chunk.row(i)[k] = scale * d[k];
      scale *= 1.0 - gain_;
    }
    return chunk;
  }

  double gain_ = 0.5;
  StateStats stats_;
};

class ChainScriptPolicy : public ProportionalPolicy {
 public:
  ChainScriptPolicy(std::size_t horizon, std::size_t action_dim, ParamReader& params)
      : ProportionalPolicy(horizon, action_dim, params) {
    success_prob_ = params.numbers("success_prob", std::vector<double>(5, 1.0));
    for (double p : success_prob_) {
      if (p < 0.0 || p > 1.0) throw SchemaViolation(params.child_path("success_prob"), "probabilities must lie in [0, 1]");
    }
    subtask_index_ = params.unsigned_int("subtask_state_index", 6);
  }

  std::string_view name() const override { return "chain_script"; }

  ActionChunk predict(const ObservationPayload& obs, const PredictContext& ctx) override {
    if (subtask_index_ >= obs.states.size()) throw ModelFailure("observation carries no sub-task index");
    const double raw = stats_.raw(obs.states, subtask_index_);
    const auto subtask = static_cast<std::size_t>(std::llround(raw));
    const double p = subtask < success_prob_.size() ? success_prob_[subtask] : 0.0;
    if (draw(ctx.episode_id, subtask) < p) return plan(obs, ctx.step_index);
    return ActionChunk(horizon_, action_dim_, ctx.step_index);
  }

 private:
  // FNV-1a over (episode_id, subtask) mapped to [0, 1).
  static double draw(const std::string& episode_id, std::size_t subtask) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint8_t b) {
      h ^= b;
      h *= 1099511628211ULL;
    };
    for (char c : episode_id) mix(static_cast<std::uint8_t>(c));
    mix(0xff);
    for (int i = 0; i < 8; ++i) mix(static_cast<std::uint8_t>(subtask >> (8 * i)));
    return std::ldexp(static_cast<double>(h >> 11), -53);
  }

  std::vector<double> success_prob_;
  std::uint64_t subtask_index_ = 6;
};

class ConstantPolicy : public Policy {
 public:
  ConstantPolicy(std::size_t horizon, std::size_t action_dim, ParamReader& params) : Policy(horizon, action_dim) {
    action_ = params.numbers("action", std::vector<double>(action_dim, 0.0));
    if (action_.size() != action_dim) {
      throw SchemaViolation(params.child_path("action"),
                            "expected " + std::to_string(action_dim) + " entries, got " + std::to_string(action_.size()));
    }
  }

  std::string_view name() const override { return "constant"; }

  ActionChunk predict(const ObservationPayload&, const PredictContext& ctx) override {
    return ActionChunk::repeat(action_, horizon_, ctx.step_index);
  }

 private:
  std::vector<double> action_;
};

class EchoPolicy : public Policy {
 public:
  using Policy::Policy;
  std::string_view name() const override { return "echo"; }
  ActionChunk predict(const ObservationPayload&, const PredictContext& ctx) override {
    return ActionChunk(horizon_, action_dim_, ctx.step_index);
  }
};

class ReplayPolicy : public Policy {
 public:
  ReplayPolicy(std::size_t horizon, std::size_t action_dim, ParamReader& params) : Policy(horizon, action_dim) {
    const Json* traj = params.raw("trajectory");
    if (traj == nullptr || !traj->is_array() || traj->empty()) {
      throw SchemaViolation(params.child_path("trajectory"), "expected a non-empty list of actions");
    }
    for (std::size_t i = 0; i < traj->size(); ++i) {
      const Json wrapped = {{"a", (*traj)[i]}};
      ParamReader row(wrapped, params.child_path("trajectory") + "[" + std::to_string(i) + "]");
      auto action = row.numbers("a");
      if (action.size() != action_dim) {
        throw SchemaViolation(params.child_path("trajectory") + "[" + std::to_string(i) + "]",
                              "expected " + std::to_string(action_dim) + " entries");
      }
      trajectory_.push_back(std::move(action));
    }
  }

  std::string_view name() const override { return "replay"; }

  ActionChunk predict(const ObservationPayload&, const PredictContext& ctx) override {
    ActionChunk chunk(horizon_, action_dim_, ctx.step_index);
    for (std::size_t i = 0; i < horizon_; ++i) {
      const std::size_t t = std::min<std::uint64_t>(ctx.step_index + i, trajectory_.size() - 1);
      std::copy(trajectory_[t].begin(), trajectory_[t].end(), chunk.row(i).begin());
    }
    return chunk;
  }

 private:
  std::vector<std::vector<double>> trajectory_;
};

}  // namespace

std::vector<std::string> builtin_policy_names() {
  return {"proportional", "constant", "replay", "chain_script", "echo"};
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, std::size_t horizon, std::size_t action_dim,
                                    const std::string& path) {
  if (horizon == 0) throw SchemaViolation("chunk_horizon", "must be >= 1");
  if (action_dim == 0) throw SchemaViolation("action_dim", "must be >= 1");
  ParamReader params(spec.params, path + ".params");
  std::unique_ptr<Policy> policy;
  if (spec.name == "proportional") {
    policy = std::make_unique<ProportionalPolicy>(horizon, action_dim, params);
  } else if (spec.name == "chain_script") {
    policy = std::make_unique<ChainScriptPolicy>(horizon, action_dim, params);
  } else if (spec.name == "constant") {
    policy = std::make_unique<ConstantPolicy>(horizon, action_dim, params);
  } else if (spec.name == "replay") {
    policy = std::make_unique<ReplayPolicy>(horizon, action_dim, params);
  } else if (spec.name == "echo") {
    policy = std::make_unique<EchoPolicy>(horizon, action_dim);
  } else {
    throw SchemaViolation(path + ".name", "unknown policy '" + spec.name + "'");
  }
  params.finish();
  return policy;
}

}  // namespace vlaeval
