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

#include <signal.h>
#include <spawn.h>
#include <stdlib.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <set>

#include "vlaeval/orchestrator.hpp"

extern char** environ;

namespace vlaeval {

namespace fs = std::filesystem;

fs::path default_worker_path() {
  std::error_code ec;
  const fs::path self = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    for (const fs::path& candidate : {self.parent_path() / "vla-eval-worker",
                                      self.parent_path().parent_path() / "tools" / "vla-eval-worker"}) {
      if (fs::exists(candidate, ec)) return candidate;
    }
  }
  if (const char* env = std::getenv("VLA_EVAL_WORKER")) return env;
  return "vla-eval-worker";
}

namespace {

fs::path make_temp_dir() {
  std::string pattern = (fs::temp_directory_path() / "vla-eval-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) {
    throw std::runtime_error(std::string("cannot create a work directory: ") + std::strerror(errno));
  }
  return pattern;
}

// Returns the pid, or -1 when the process could not be started.
pid_t spawn(const std::vector<std::string>& argv) {
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = -1;
  if (::posix_spawnp(&pid, args[0], nullptr, nullptr, args.data(), environ) != 0) return -1;
  return pid;
}

int wait_for(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

void read_results(const fs::path& path, std::map<std::string, EpisodeResult>& out) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      EpisodeResult r = episode_result_from_json(Json::parse(line));
      out[r.episode_id] = std::move(r);
    } catch (const std::exception&) {
      // A worker killed mid-write leaves a torn last line.
    }
  }
}

}  // namespace

std::vector<int> run_processes(const std::vector<std::vector<std::string>>& commands) {
  std::vector<pid_t> pids;
  for (const auto& argv : commands) pids.push_back(argv.empty() ? -1 : spawn(argv));
  std::vector<int> status;
  for (pid_t pid : pids) status.push_back(pid < 0 ? 127 : wait_for(pid));
  return status;
}

fs::path make_work_dir() { return make_temp_dir(); }

ShardedRun run_sharded(const BenchmarkConfig& config, std::uint64_t shard_count, const Endpoint& endpoint,
                       const ShardedRunOptions& options) {
  const ShardPlan plan = plan_shards(config, shard_count);
  const fs::path dir = options.work_dir.empty() ? make_temp_dir() : options.work_dir;
  fs::create_directories(dir);
  const fs::path config_path = dir / "benchmark.json";
  {
    std::ofstream out(config_path);
    out << to_json(config).dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + config_path.string());
  }
  const fs::path worker = options.worker_path.empty() ? default_worker_path() : options.worker_path;

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::vector<std::string>> commands;
  std::vector<fs::path> outputs;
  for (std::uint64_t shard = 0; shard < shard_count; ++shard) {
    const fs::path out = dir / ("shard-" + std::to_string(shard) + ".jsonl");
    fs::remove(out);
    std::vector<std::string> argv = options.container_cmd;
    argv.insert(argv.end(), {worker.string(), "--bench-config", config_path.string(), "--shard", std::to_string(shard),
                             "--shards", std::to_string(shard_count), "--endpoint", endpoint.url(), "--out",
                             out.string(), "--step-timeout-ms", std::to_string(options.step_timeout.count())});
    commands.push_back(std::move(argv));
    outputs.push_back(out);
  }

  ShardedRun run;
  run.worker_status = run_processes(commands);
  std::map<std::string, EpisodeResult> by_id;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (run.worker_status[i] == kWorkerConnectionLost) run.connection_lost = true;
    read_results(outputs[i], by_id);
  }
  run.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<const EpisodeAssignment*> order(plan.total_episodes());
  for (const auto& shard : plan.shards) {
    for (const auto& a : shard) order[a.global_index] = &a;
  }
  for (const EpisodeAssignment* a : order) {
    const std::string id = make_episode_id(a->task.task_id, a->episode_index);
    auto it = by_id.find(id);
    if (it != by_id.end()) {
      run.observations += it->second.obs_count;
      run.results.push_back(it->second);
    } else {
      EpisodeResult r;
      r.episode_id = id;
      r.task_id = a->task.task_id;
      r.seed = a->seed;
      r.failure_reason = FailureReason::kEnvCrash;
      run.results.push_back(r);
    }
  }
  if (options.work_dir.empty()) fs::remove_all(dir);
  return run;
}

}  // namespace vlaeval
