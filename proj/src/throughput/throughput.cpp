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

#include "vlaeval/throughput.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "vlaeval/orchestrator.hpp"
#include "vlaeval/runner.hpp"

namespace vlaeval {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

void ThroughputProfile::validate() const {
  if (lambda_samples.empty() || mu_samples.empty()) {
    throw std::invalid_argument("profile needs at least one lambda and one mu sample");
  }
  for (const auto* side : {&lambda_samples, &mu_samples}) {
    for (const auto& [x, rate] : *side) {
      if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("throughput samples must be positive");
      if (x == 0) throw std::invalid_argument("N and B must be >= 1");
    }
  }
}

OperatingPoint select_operating_point(const ThroughputProfile& profile, double headroom) {
  profile.validate();
  if (!(headroom > 0.0 && headroom < 1.0)) throw std::invalid_argument("headroom must lie in (0, 1)");
  OperatingPoint op;
  op.headroom = headroom;
  double mu = 0.0;
  // Maps iterate in ascending key order, so strict comparisons keep the
  // smallest key on ties.
  for (const auto& [b, rate] : profile.mu_samples) {
    if (rate > mu) {
      mu = rate;
      op.b_star = b;
    }
  }
  const double limit = headroom * mu;
  double lambda = -1.0;
  for (const auto& [n, rate] : profile.lambda_samples) {
    if (rate < limit && rate > lambda) {
      lambda = rate;
      op.n_star = n;
    }
  }
  if (lambda < 0.0) {
    std::ostringstream msg;
    msg << "every sampled lambda(N) is >= " << headroom << " * mu(B*) = " << limit << " obs/s";
    throw NoFeasiblePoint(msg.str());
  }
  op.utilization = lambda / mu;
  return op;
}

double project_wall_time(std::uint64_t total_episodes, double mean_steps, const OperatingPoint& op,
                         const ThroughputProfile& profile) {
  const auto it = profile.lambda_samples.find(op.n_star);
  if (it == profile.lambda_samples.end() || !(it->second > 0.0)) {
    throw std::invalid_argument("lambda(N*) is not in the profile");
  }
  return static_cast<double>(total_episodes) * mean_steps / it->second;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  // Nearest rank.
  const double rank = std::ceil(q * static_cast<double>(values.size()));
  const std::size_t index = rank < 1.0 ? 0 : std::min(values.size() - 1, static_cast<std::size_t>(rank) - 1);
  return values[index];
}

Measurement measure_lambda(const BenchmarkConfig& base, const std::vector<std::uint64_t>& shard_counts,
                           std::chrono::duration<double> duration, const LambdaOptions& options) {
  ModelServerConfig echo;
  echo.policy = {"echo", Json::object()};
  echo.port = 0;
  echo.max_wait_ms = 0.0;
  ServerHandle server(echo);

  const fs::path worker = options.worker_path.empty() ? default_worker_path() : options.worker_path;
  Measurement m;
  for (std::uint64_t n : shard_counts) {
    if (n == 0) {
      m.failures[n] = "N must be >= 1";
      continue;
    }
    BenchmarkConfig config = base;
    const std::uint64_t per_task = (n + config.tasks.size() - 1) / config.tasks.size();
    config.episodes_per_task = std::max(config.episodes_per_task, per_task);

    const fs::path dir = make_work_dir();
    const fs::path config_path = dir / "benchmark.json";
    std::ofstream(config_path) << to_json(config).dump(2) << "\n";
    std::vector<std::vector<std::string>> commands;
    for (std::uint64_t shard = 0; shard < n; ++shard) {
      std::vector<std::string> argv = options.container_cmd;
      argv.insert(argv.end(),
                  {worker.string(), "--bench-config", config_path.string(), "--shard", std::to_string(shard), "--shards",
                   std::to_string(n), "--endpoint", server.endpoint().url(), "--out",
                   (dir / ("shard-" + std::to_string(shard) + ".jsonl")).string(), "--duration-s",
                   std::to_string(duration.count()), "--stats",
                   (dir / ("stats-" + std::to_string(shard) + ".json")).string()});
      commands.push_back(std::move(argv));
    }
    const auto status = run_processes(commands);
    double lambda = 0.0;
    std::string failure;
    for (std::uint64_t shard = 0; shard < n && failure.empty(); ++shard) {
      if (status[shard] != kWorkerOk) {
        failure = "worker " + std::to_string(shard) + " exited with status " + std::to_string(status[shard]);
        break;
      }
      try {
        std::ifstream in(dir / ("stats-" + std::to_string(shard) + ".json"));
        const Json stats = Json::parse(in);
        const double elapsed = stats.at("elapsed_s").get<double>();
        const double obs = stats.at("observations").get<double>();
        if (!(elapsed > 0.0) || !(obs > 0.0)) throw std::runtime_error("no observations recorded");
        lambda += obs / elapsed;
      } catch (const std::exception& e) {
        failure = "worker " + std::to_string(shard) + ": " + e.what();
      }
    }
    fs::remove_all(dir);
    if (failure.empty()) {
      m.samples[n] = lambda;
    } else {
      m.failures[n] = failure;
    }
  }
  return m;
}

namespace {

ObservationPayload load_observation() {
  ObservationPayload obs;
  obs.states = {0.1, -0.2, 0.3, 0.0, 0.0, 0.0, 0.0};
  obs.task_description = "load";
  return obs;
}

}  // namespace

Measurement measure_mu(const ModelServerConfig& base, const std::vector<std::uint64_t>& batch_sizes,
                       std::chrono::duration<double> duration) {
  Measurement m;
  const Value::Object payload = observation_to_payload(load_observation());
  for (std::uint64_t b : batch_sizes) {
    if (b == 0) {
      m.failures[b] = "B must be >= 1";
      continue;
    }
    try {
      ModelServerConfig config = base;
      config.max_batch_size = b;
      config.replan_interval = 1;
      config.host = "127.0.0.1";
      config.port = 0;
      ServerHandle server(config);

      std::atomic<bool> stop{false};
      std::atomic<int> errors{0};
      std::vector<std::thread> clients;
      for (std::uint64_t i = 0; i < 2 * b; ++i) {
        clients.emplace_back([&, i] {
          try {
            auto conn = websocket_connector(server.endpoint())();
            conn->send(MessageType::kEpisodeStart, Value::Object{{"episode_id", Value("load#" + std::to_string(i))},
                                                                 {"task_id", Value("load")}});
            while (!stop.load()) {
              conn->send(MessageType::kObservation, payload);
              if (conn->receive(Millis(30000)).type != MessageType::kAction) ++errors;
            }
            conn->close();
          } catch (const std::exception&) {
            ++errors;
          }
        });
      }
      const auto warmup = std::chrono::duration<double>(std::max(0.2, 0.1 * duration.count()));
      std::this_thread::sleep_for(warmup);
      const std::uint64_t before = server.model().completed();
      const auto t0 = Clock::now();
      std::this_thread::sleep_for(duration);
      const std::uint64_t after = server.model().completed();
      const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
      stop = true;
      for (auto& t : clients) t.join();
      server.stop();
      if (errors.load() > 0) {
        m.failures[b] = std::to_string(errors.load()) + " load-generator errors";
      } else if (after == before) {
        m.failures[b] = "no requests completed";
      } else {
        m.samples[b] = static_cast<double>(after - before) / elapsed;
      }
    } catch (const std::exception& e) {
      m.failures[b] = e.what();
    }
  }
  return m;
}

QueueTrace simulate_queue(const ModelServerConfig& config, double arrival_rate, std::chrono::duration<double> duration,
                          std::chrono::milliseconds sample_interval, std::uint64_t seed) {
  if (!(arrival_rate > 0.0)) throw std::invalid_argument("arrival rate must be > 0");
  ModelServer server(config);
  const PredictRequest request{load_observation(), {"queue", 0, "load"}};
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> submitted{0};

  const auto start = Clock::now();
  std::thread arrivals([&] {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(arrival_rate);
    auto next = start;
    while (!stop.load()) {
      next += std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(gap(rng)));
      std::this_thread::sleep_until(next);
      if (stop.load()) break;
      server.submit(request);
      ++submitted;
    }
  });

  QueueTrace trace;
  std::vector<double> lengths;
  for (auto tick = start + sample_interval; tick <= start + duration; tick += sample_interval) {
    std::this_thread::sleep_until(tick);
    trace.samples.push_back(server.pending());
    lengths.push_back(static_cast<double>(trace.samples.back()));
  }
  stop = true;
  arrivals.join();
  trace.final_length = server.pending();
  trace.submitted = submitted.load();
  trace.completed = server.completed();
  trace.p95 = percentile(lengths, 0.95);
  server.abort();
  return trace;
}

Json to_json(const ThroughputProfile& p) {
  Json lambda = Json::object(), mu = Json::object();
  for (const auto& [n, r] : p.lambda_samples) lambda[std::to_string(n)] = r;
  for (const auto& [b, r] : p.mu_samples) mu[std::to_string(b)] = r;
  return {{"lambda_samples", lambda}, {"mu_samples", mu}, {"measurement_duration_s", p.measurement_duration_s}};
}

Json to_json(const OperatingPoint& op) {
  return {{"n_star", op.n_star}, {"b_star", op.b_star}, {"utilization", op.utilization}, {"headroom", op.headroom}};
}

std::string profile_csv(const ThroughputProfile& p) {
  std::ostringstream out;
  out.precision(10);
  out << "curve,x,obs_per_s\n";
  for (const auto& [n, r] : p.lambda_samples) out << "lambda," << n << "," << r << "\n";
  for (const auto& [b, r] : p.mu_samples) out << "mu," << b << "," << r << "\n";
  return out.str();
}

}  // namespace vlaeval
