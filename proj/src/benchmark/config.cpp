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

#include <cmath>
#include <set>

#include "vlaeval/benchmark.hpp"

namespace vlaeval {

void NormalizationStats::validate(std::size_t dim, const std::string& path) const {
  if (mean.size() != std.size()) {
    throw SchemaViolation(path + ".std", "has " + std::to_string(std.size()) + " entries but mean has " +
                                             std::to_string(mean.size()));
  }
  if (mean.size() != dim) {
    throw SchemaViolation(path + ".mean", "has " + std::to_string(mean.size()) +
                                              " entries but the benchmark state has " + std::to_string(dim));
  }
  for (double s : std) {
    if (!(s > 0.0) || !std::isfinite(s)) throw SchemaViolation(path + ".std", "entries must be finite and > 0");
  }
}

std::vector<double> NormalizationStats::normalize(std::span<const double> raw) const {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mean.at(i)) / std.at(i);
  return out;
}

std::vector<double> NormalizationStats::denormalize(std::span<const double> normalized) const {
  std::vector<double> out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) out[i] = normalized[i] * std.at(i) + mean.at(i);
  return out;
}

std::string_view to_string(TerminationPolicy policy) {
  return policy == TerminationPolicy::kStopOnTerminated ? "stop_on_terminated" : "run_to_truncation";
}

TerminationPolicy parse_termination_policy(std::string_view name) {
  if (name == "stop_on_terminated") return TerminationPolicy::kStopOnTerminated;
  if (name == "run_to_truncation") return TerminationPolicy::kRunToTruncation;
  throw std::invalid_argument("unknown termination policy '" + std::string(name) +
                              "' (expected stop_on_terminated or run_to_truncation)");
}

const TaskSpec& BenchmarkConfig::task(std::string_view task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return t;
  }
  throw UnknownTask("unknown task '" + std::string(task_id) + "'");
}

Json to_json(const BenchmarkConfig& c) {
  Json doc = Json::object();
  doc["name"] = c.name;
  Json tasks = Json::array();
  for (const auto& t : c.tasks) {
    tasks.push_back({{"task_id", t.task_id},
                     {"task_description", t.task_description},
                     {"max_episode_steps", t.max_episode_steps},
                     {"success_tolerance", t.success_tolerance}});
  }
  doc["tasks"] = tasks;
  doc["episodes_per_task"] = c.episodes_per_task;
  doc["base_seed"] = c.base_seed;
  doc["normalize"] = c.normalize;
  if (c.normalization_stats) {
    doc["normalization_stats"] = {{"mean", c.normalization_stats->mean}, {"std", c.normalization_stats->std}};
  }
  doc["termination_policy"] = std::string(to_string(c.termination_policy));
  doc["params"] = c.params;
  return doc;
}

BenchmarkConfig benchmark_config_from_json(const Json& doc, const std::string& path) {
  BenchmarkConfig c;
  ParamReader r(doc, path);
  c.name = r.string("name");

  const Json* tasks = r.raw("tasks");
  if (tasks == nullptr || !tasks->is_array() || tasks->empty()) {
    throw SchemaViolation(r.child_path("tasks"), "expected a non-empty list of tasks");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < tasks->size(); ++i) {
    ParamReader t((*tasks)[i], r.child_path("tasks") + "[" + std::to_string(i) + "]");
    TaskSpec spec;
    spec.task_id = t.string("task_id");
    spec.task_description = t.string("task_description", spec.task_id);
    spec.max_episode_steps = t.unsigned_int("max_episode_steps", spec.max_episode_steps);
    spec.success_tolerance = t.number("success_tolerance", spec.success_tolerance);
    t.finish();
    if (spec.task_id.empty()) throw SchemaViolation(t.child_path("task_id"), "must not be empty");
    if (spec.max_episode_steps == 0) throw SchemaViolation(t.child_path("max_episode_steps"), "must be >= 1");
    if (!(spec.success_tolerance > 0.0)) throw SchemaViolation(t.child_path("success_tolerance"), "must be > 0");
    if (!ids.insert(spec.task_id).second) throw SchemaViolation(t.child_path("task_id"), "duplicate task id");
    c.tasks.push_back(std::move(spec));
  }

  c.episodes_per_task = r.unsigned_int("episodes_per_task", c.episodes_per_task);
  if (c.episodes_per_task == 0) throw SchemaViolation(r.child_path("episodes_per_task"), "must be >= 1");
  c.base_seed = r.unsigned_int("base_seed", c.base_seed);
  c.normalize = r.boolean("normalize", c.normalize);
  if (r.has("normalization_stats")) {
    ParamReader s = r.object("normalization_stats");
    NormalizationStats stats;
    stats.mean = s.numbers("mean");
    stats.std = s.numbers("std");
    const std::string applies_to = s.string("applies_to", "states");
    if (applies_to != "states") throw SchemaViolation(s.child_path("applies_to"), "only 'states' is supported");
    s.finish();
    c.normalization_stats = std::move(stats);
  } else {
    r.raw("normalization_stats");
  }
  const std::string policy = r.string("termination_policy", std::string(to_string(c.termination_policy)));
  try {
    c.termination_policy = parse_termination_policy(policy);
  } catch (const std::invalid_argument& e) {
    throw SchemaViolation(r.child_path("termination_policy"), e.what());
  }
  if (const Json* params = r.raw("params")) {
    if (!params->is_object()) throw SchemaViolation(r.child_path("params"), "expected a mapping");
    c.params = *params;
  }
  r.finish();

  if (c.normalize && !c.normalization_stats) {
    throw MissingNormalizationStats(path + ": normalize is true but normalization_stats is absent");
  }
  // Instantiating checks params and the statistics length.
  auto bench = make_benchmark(c);
  if (c.normalization_stats) c.normalization_stats->validate(bench->state_dim(), r.child_path("normalization_stats"));
  return c;
}

}  // namespace vlaeval
