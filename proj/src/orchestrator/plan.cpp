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

#include "vlaeval/orchestrator.hpp"

namespace vlaeval {

std::uint64_t ShardPlan::total_episodes() const {
  std::uint64_t n = 0;
  for (const auto& s : shards) n += s.size();
  return n;
}

ShardPlan plan_shards(const std::vector<TaskSpec>& tasks, std::uint64_t episodes_per_task, std::uint64_t base_seed,
                      std::uint64_t shard_count) {
  if (shard_count == 0) throw std::invalid_argument("shard count must be >= 1");
  ShardPlan plan;
  plan.shard_count = shard_count;
  plan.shards.resize(shard_count);
  std::uint64_t g = 0;
  for (const auto& task : tasks) {
    for (std::uint64_t i = 0; i < episodes_per_task; ++i, ++g) {
      plan.shards[g % shard_count].push_back({task, i, g, base_seed + g});
    }
  }
  return plan;
}

ShardPlan plan_shards(const BenchmarkConfig& config, std::uint64_t shard_count) {
  return plan_shards(config.tasks, config.episodes_per_task, config.base_seed, shard_count);
}

std::map<std::string, double> AggregateMetrics::per_task_success_rate() const {
  std::map<std::string, double> out;
  for (const auto& [id, m] : per_task) out[id] = m.success_rate;
  return out;
}

AggregateMetrics aggregate(const std::vector<EpisodeResult>& results, bool chain_mode, double wall_time_s) {
  if (results.empty()) throw EmptyResults("no episode results to aggregate");
  AggregateMetrics m;
  std::uint64_t observations = 0;
  double chain_sum = 0.0;
  for (const auto& r : results) {
    TaskMetrics& t = m.per_task[r.task_id];
    ++t.episodes;
    if (r.failed()) ++t.failed_infra;
    if (r.final_success && !r.failed()) ++t.succeeded;
    observations += r.obs_count;
    chain_sum += r.chain_length.value_or(0);
  }
  double suite = 0.0, excluded = 0.0;
  std::size_t excluded_tasks = 0;
  for (auto& [id, t] : m.per_task) {
    t.success_rate = static_cast<double>(t.succeeded) / static_cast<double>(t.episodes);
    if (t.episodes > t.failed_infra) {
      t.infra_excluded_rate = static_cast<double>(t.succeeded) / static_cast<double>(t.episodes - t.failed_infra);
      excluded += *t.infra_excluded_rate;
      ++excluded_tasks;
    }
    suite += t.success_rate;
    m.episodes_total += t.episodes;
    m.succeeded += t.succeeded;
    m.failed_infra += t.failed_infra;
  }
  m.suite_success_rate = suite / static_cast<double>(m.per_task.size());
  if (excluded_tasks > 0) m.suite_infra_excluded_rate = excluded / static_cast<double>(excluded_tasks);
  if (chain_mode) m.avg_chain_length = chain_sum / static_cast<double>(results.size());
  m.wall_time_s = wall_time_s;
  m.obs_per_s = wall_time_s > 0.0 ? static_cast<double>(observations) / wall_time_s : 0.0;
  return m;
}

Json to_json(const AggregateMetrics& m, bool include_timing) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json tasks = Json::object();
  for (const auto& [id, t] : m.per_task) {
    tasks[id] = {{"episodes", t.episodes},
                 {"succeeded", t.succeeded},
                 {"failed_infra", t.failed_infra},
                 {"success_rate", t.success_rate},
                 {"infra_excluded_rate", opt(t.infra_excluded_rate)}};
  }
  Json doc = {{"per_task", tasks},
              {"suite_success_rate", m.suite_success_rate},
              {"suite_infra_excluded_rate", opt(m.suite_infra_excluded_rate)},
              {"avg_chain_length", opt(m.avg_chain_length)},
              {"episodes_total", m.episodes_total},
              {"succeeded", m.succeeded},
              {"failed_infra", m.failed_infra}};
  if (include_timing) {
    doc["wall_time_s"] = m.wall_time_s;
    doc["obs_per_s"] = m.obs_per_s;
  }
  return doc;
}

double speedup(double sequential_s, double parallel_s) {
  if (!(sequential_s > 0.0) || !(parallel_s > 0.0) || !std::isfinite(sequential_s) || !std::isfinite(parallel_s)) {
    throw std::invalid_argument("speedup needs two positive durations");
  }
  return sequential_s / parallel_s;
}

}  // namespace vlaeval
