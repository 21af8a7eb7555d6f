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

// One evaluation shard: a benchmark instance, a connection and a runner.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "vlaeval/config.hpp"

int main(int argc, char** argv) {
  using namespace vlaeval;
  CLI::App app{"vla-eval shard worker"};
  std::string bench_config, endpoint, out, stats;
  std::uint64_t shard = 0, shards = 1;
  std::int64_t step_timeout_ms = 30000;
  double duration_s = 0.0;
  app.add_option("--bench-config", bench_config, "benchmark config (YAML or JSON)")->required();
  app.add_option("--shard", shard, "shard index")->required();
  app.add_option("--shards", shards, "shard count")->check(CLI::PositiveNumber);
  app.add_option("--endpoint", endpoint, "model server, ws://host:port")->required();
  app.add_option("--out", out, "JSON-lines result file")->required();
  app.add_option("--step-timeout-ms", step_timeout_ms, "per-step action timeout")->check(CLI::PositiveNumber);
  app.add_option("--duration-s", duration_s, "cycle episodes for this long instead of running the shard once");
  app.add_option("--stats", stats, "write {observations, elapsed_s, episodes} here");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kWorkerUsage;
  }

  BenchmarkConfig config;
  Endpoint ep;
  try {
    Json doc = load_document(bench_config);
    // Accept either a bare benchmark section or a full eval config.
    if (doc.is_object() && doc.contains("benchmark")) doc = doc["benchmark"];
    config = benchmark_config_from_json(doc);
    ep = Endpoint::parse(endpoint);
  } catch (const std::exception& e) {
    std::cerr << "vla-eval-worker: " << e.what() << "\n";
    return kWorkerUsage;
  }
  if (shard >= shards) {
    std::cerr << "vla-eval-worker: shard " << shard << " out of range for " << shards << " shards\n";
    return kWorkerUsage;
  }

  const auto assignments = plan_shards(config, shards).shards[shard];
  const RunOptions options{config.termination_policy, Millis(step_timeout_ms)};
  auto make_bench = [&config] { return make_benchmark(config); };
  auto connect = websocket_connector(ep);

  std::ofstream sink(out, std::ios::trunc);
  if (!sink) {
    std::cerr << "vla-eval-worker: cannot write " << out << "\n";
    return kWorkerUsage;
  }
  RunReport report;
  if (duration_s > 0.0) {
    report = run_for_duration(make_bench, connect, assignments, options, std::chrono::duration<double>(duration_s));
    for (const auto& r : report.results) sink << to_json(r).dump() << "\n";
  } else {
    report = run_assignments(make_bench, connect, assignments, options, [&sink](const EpisodeResult& r) {
      sink << to_json(r).dump() << "\n";
      sink.flush();
    });
  }
  sink.close();
  if (!stats.empty()) {
    std::ofstream s(stats);
    s << Json{{"observations", report.observations},
              {"elapsed_s", report.wall_time_s},
              {"episodes", report.results.size()}}
             .dump()
      << "\n";
  }
  return report.connection_lost ? kWorkerConnectionLost : kWorkerOk;
}
