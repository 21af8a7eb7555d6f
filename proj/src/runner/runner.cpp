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

#include "vlaeval/runner.hpp"

#include <chrono>

namespace vlaeval {

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::kEnvCrash: return "env_crash";
    case FailureReason::kTimeout: return "timeout";
    case FailureReason::kProtocolError: return "protocol_error";
    case FailureReason::kModelError: return "model_error";
  }
  return "?";
}

FailureReason parse_failure_reason(std::string_view name) {
  for (auto r : {FailureReason::kEnvCrash, FailureReason::kTimeout, FailureReason::kProtocolError,
                 FailureReason::kModelError}) {
    if (to_string(r) == name) return r;
  }
  throw std::invalid_argument("unknown failure reason '" + std::string(name) + "'");
}

EpisodeResult EpisodeResult::without_timing() const {
  EpisodeResult copy = *this;
  copy.wall_time_s = 0.0;
  return copy;
}

Json to_json(const EpisodeResult& r) {
  Json doc = Json::object();
  doc["episode_id"] = r.episode_id;
  doc["task_id"] = r.task_id;
  doc["seed"] = r.seed;
  doc["final_success"] = r.final_success;
  doc["transient_success_step"] = r.transient_success_step ? Json(*r.transient_success_step) : Json(nullptr);
  doc["steps_executed"] = r.steps_executed;
  doc["failure_reason"] = r.failure_reason ? Json(std::string(to_string(*r.failure_reason))) : Json(nullptr);
  doc["wall_time_s"] = r.wall_time_s;
  doc["obs_count"] = r.obs_count;
  doc["chain_length"] = r.chain_length ? Json(*r.chain_length) : Json(nullptr);
  return doc;
}

EpisodeResult episode_result_from_json(const Json& doc) {
  EpisodeResult r;
  ParamReader p(doc, "episode");
  r.episode_id = p.string("episode_id");
  r.task_id = p.string("task_id");
  r.seed = p.unsigned_int("seed");
  r.final_success = p.boolean("final_success");
  if (p.has("transient_success_step")) r.transient_success_step = p.unsigned_int("transient_success_step");
  p.raw("transient_success_step");
  r.steps_executed = p.unsigned_int("steps_executed");
  if (p.has("failure_reason")) {
    const std::string reason = p.string("failure_reason");
    try {
      r.failure_reason = parse_failure_reason(reason);
    } catch (const std::invalid_argument& e) {
      throw SchemaViolation(p.child_path("failure_reason"), e.what());
    }
  }
  p.raw("failure_reason");
  r.wall_time_s = p.number("wall_time_s", 0.0);
  r.obs_count = p.unsigned_int("obs_count");
  if (p.has("chain_length")) r.chain_length = static_cast<std::uint32_t>(p.unsigned_int("chain_length"));
  p.raw("chain_length");
  p.finish();
  if (r.failure_reason && r.final_success) {
    throw SchemaViolation("episode.final_success", "a failed episode cannot be successful");
  }
  return r;
}

std::string make_episode_id(std::string_view task_id, std::uint64_t episode_index) {
  return std::string(task_id) + "#" + std::to_string(episode_index);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct EpisodeFailure {
  FailureReason reason;
};

}  // namespace

EpisodeResult run_episode(StepBenchmark& bench, Connection& conn, const TaskSpec& task, std::uint64_t seed,
                          const std::string& episode_id, const RunOptions& options) {
  const auto start = Clock::now();
  EpisodeResult r;
  r.episode_id = episode_id;
  r.task_id = task.task_id;
  r.seed = seed;

  auto fail = [&](FailureReason reason) {
    r.failure_reason = reason;
    r.final_success = false;
    if (reason == FailureReason::kTimeout || reason == FailureReason::kProtocolError) conn.mark_broken();
  };

  try {
    conn.send(MessageType::kEpisodeStart, Value::Object{{"episode_id", Value(episode_id)},
                                                        {"task_id", Value(task.task_id)},
                                                        {"task_description", Value(task.task_description)},
                                                        {"seed", Value(seed)}});
    ObservationPayload obs;
    try {
      obs = bench.reset(task.task_id, seed);
    } catch (const std::exception&) {
      throw EpisodeFailure{FailureReason::kEnvCrash};
    }
    for (;;) {
      conn.send(MessageType::kObservation, observation_to_payload(obs));
      ++r.obs_count;
      Message reply = conn.receive(options.step_timeout);
      if (reply.type == MessageType::kError) {
        const Value* kind = find_key(reply.payload, "kind");
        const bool model = kind != nullptr && kind->is_string() && kind->as_string() == "model_error";
        throw EpisodeFailure{model ? FailureReason::kModelError : FailureReason::kProtocolError};
      }
      if (reply.type != MessageType::kAction) throw EpisodeFailure{FailureReason::kProtocolError};
      const std::vector<double> action = action_from_payload(reply.payload);
      try {
        bench.step(action);
      } catch (const BadActionShape&) {
        throw EpisodeFailure{FailureReason::kModelError};
      } catch (const std::exception&) {
        throw EpisodeFailure{FailureReason::kEnvCrash};
      }
      ++r.steps_executed;
      StepResult step;
      try {
        step = bench.get_step_result();
      } catch (const std::exception&) {
        throw EpisodeFailure{FailureReason::kEnvCrash};
      }
      if (step.success_event && !r.transient_success_step) r.transient_success_step = r.steps_executed;
      const bool stop = options.termination == TerminationPolicy::kStopOnTerminated
                            ? (step.terminated || step.truncated)
                            : step.truncated;
      if (stop) {
        r.final_success = options.termination == TerminationPolicy::kStopOnTerminated
                              ? step.terminated && step.success_event
                              : step.success_event;
        break;
      }
      obs = std::move(step.obs);
    }
  } catch (const EpisodeFailure& f) {
    fail(f.reason);
  } catch (const ReceiveTimeout&) {
    fail(FailureReason::kTimeout);
  } catch (const ConnectionClosed&) {
    fail(FailureReason::kProtocolError);
  } catch (const ProtocolError&) {
    fail(FailureReason::kProtocolError);
  }

  r.chain_length = bench.chained_subtask_progress();
  if (!conn.broken()) {
    try {
      conn.send(MessageType::kEpisodeEnd, Value::Object{{"episode_id", Value(episode_id)},
                                                      {"success", Value(r.final_success)}});
    } catch (const ConnectionClosed&) {
      conn.mark_broken();
    }
  }
  r.wall_time_s = seconds_since(start);
  return r;
}

ConnectionFactory websocket_connector(Endpoint endpoint, Millis timeout) {
  return [endpoint, timeout]() {
    auto conn = std::make_unique<Connection>(connect_websocket(endpoint, timeout));
    conn->handshake("runner", timeout);
    return conn;
  };
}

std::vector<EpisodeAssignment> all_assignments(const BenchmarkConfig& config) {
  std::vector<EpisodeAssignment> out;
  std::uint64_t global = 0;
  for (const auto& task : config.tasks) {
    for (std::uint64_t i = 0; i < config.episodes_per_task; ++i, ++global) {
      out.push_back({task, i, global, config.episode_seed(global)});
    }
  }
  return out;
}

namespace {

// Sequential episode loop shared by the count- and duration-bounded runs.
class EpisodeLoop {
 public:
  EpisodeLoop(const BenchmarkFactory& make_bench, const ConnectionFactory& connect, const RunOptions& options,
              RunReport& report)
      : make_bench_(make_bench), connect_(connect), options_(options), report_(report) {}
  ~EpisodeLoop() {
    if (conn_) conn_->close();
  }

  const EpisodeResult& run(const EpisodeAssignment& a);

 private:
  const BenchmarkFactory& make_bench_;
  const ConnectionFactory& connect_;
  const RunOptions& options_;
  RunReport& report_;
  std::unique_ptr<StepBenchmark> bench_;
  std::unique_ptr<Connection> conn_;
};

const EpisodeResult& EpisodeLoop::run(const EpisodeAssignment& a) {
  const std::string id = make_episode_id(a.task.task_id, a.episode_index);
  auto record = [&](EpisodeResult r) -> const EpisodeResult& {
    report_.results.push_back(std::move(r));
    return report_.results.back();
  };
  auto unrun = [&](FailureReason reason) {
    EpisodeResult r;
    r.episode_id = id;
    r.task_id = a.task.task_id;
    r.seed = a.seed;
    r.failure_reason = reason;
    return r;
  };
  if (report_.connection_lost) return record(unrun(FailureReason::kProtocolError));
  if (!conn_ || conn_->broken()) {
    if (conn_) conn_->close();
    conn_.reset();
    try {
      conn_ = connect_();
    } catch (const std::exception&) {
      report_.connection_lost = true;
      return record(unrun(FailureReason::kProtocolError));
    }
  }
  if (!bench_) {
    try {
      bench_ = make_bench_();
    } catch (const std::exception&) {
      return record(unrun(FailureReason::kEnvCrash));
    }
  }
  EpisodeResult r = run_episode(*bench_, *conn_, a.task, a.seed, id, options_);
  report_.observations += r.obs_count;
  if (r.failed()) bench_.reset();
  return record(std::move(r));
}

}  // namespace

RunReport run_assignments(const BenchmarkFactory& make_bench, const ConnectionFactory& connect,
                          const std::vector<EpisodeAssignment>& assignments, const RunOptions& options,
                          const ResultSink& sink) {
  const auto start = Clock::now();
  RunReport report;
  {
    EpisodeLoop loop(make_bench, connect, options, report);
    for (const auto& a : assignments) {
      const EpisodeResult& r = loop.run(a);
      if (sink) sink(r);
    }
  }
  report.wall_time_s = seconds_since(start);
  return report;
}

RunReport run_for_duration(const BenchmarkFactory& make_bench, const ConnectionFactory& connect,
                           const std::vector<EpisodeAssignment>& assignments, const RunOptions& options,
                           std::chrono::duration<double> duration) {
  const auto start = Clock::now();
  RunReport report;
  if (!assignments.empty()) {
    EpisodeLoop loop(make_bench, connect, options, report);
    for (std::size_t i = 0; Clock::now() - start < duration && !report.connection_lost; ++i) {
      loop.run(assignments[i % assignments.size()]);
    }
  }
  report.wall_time_s = seconds_since(start);
  return report;
}

RunReport run_task(const BenchmarkFactory& make_bench, const ConnectionFactory& connect, const TaskSpec& task,
                   std::uint64_t episodes, std::uint64_t base_seed, const RunOptions& options) {
  std::vector<EpisodeAssignment> assignments;
  for (std::uint64_t i = 0; i < episodes; ++i) assignments.push_back({task, i, i, base_seed + i});
  return run_assignments(make_bench, connect, assignments, options);
}

}  // namespace vlaeval
