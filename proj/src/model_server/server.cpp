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
#include <utility>

#include "vlaeval/model_server.hpp"

namespace vlaeval {

std::chrono::nanoseconds LatencyModel::for_batch(std::size_t batch_size) const {
  const double ms = base_ms + per_item_ms * static_cast<double>(batch_size);
  return std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(ms * 1e6)));
}

void ModelServerConfig::validate() const {
  if (chunk_horizon == 0) throw SchemaViolation("chunk_horizon", "must be >= 1");
  if (action_dim == 0) throw SchemaViolation("action_dim", "must be >= 1");
  if (replan_interval == 0 || replan_interval > chunk_horizon)
    throw SchemaViolation("replan_interval", "must lie in [1, chunk_horizon]");
  if (max_batch_size == 0) throw SchemaViolation("max_batch_size", "must be >= 1");
  if (!(max_wait_ms >= 0.0) || !std::isfinite(max_wait_ms))
    throw SchemaViolation("max_wait_ms", "must be a finite value >= 0");
  if (!(ensemble.alpha > 0.0 && ensemble.alpha <= 1.0))
    throw SchemaViolation("ensemble.alpha", "must lie in (0, 1]");
  if (!(latency.base_ms >= 0.0) || !(latency.per_item_ms >= 0.0))
    throw SchemaViolation("latency", "must be >= 0");
}

Json to_json(const ModelServerConfig& c) {
  Json doc = Json::object();
  doc["policy"] = {{"name", c.policy.name}, {"params", c.policy.params}};
  doc["chunk_horizon"] = c.chunk_horizon;
  doc["action_dim"] = c.action_dim;
  doc["ensemble"] = {{"kind", std::string(to_string(c.ensemble.kind))}, {"alpha", c.ensemble.alpha}};
  doc["replan_interval"] = c.replan_interval;
  doc["max_buffered_chunks"] = c.max_buffered_chunks;
  doc["max_batch_size"] = c.max_batch_size;
  doc["max_wait_ms"] = c.max_wait_ms;
  doc["latency"] = {{"base_ms", c.latency.base_ms}, {"per_item_ms", c.latency.per_item_ms}};
  doc["host"] = c.host;
  doc["port"] = c.port;
  return doc;
}

ModelServerConfig model_server_config_from_json(const Json& doc, const std::string& path) {
  if (!doc.is_object()) throw SchemaViolation(path, "expected an object");
  ModelServerConfig c;
  ParamReader r(doc, path);

  ParamReader policy = r.object("policy");
  c.policy.name = policy.string("name", c.policy.name);
  if (const Json* params = policy.raw("params")) {
    if (!params->is_object()) throw SchemaViolation(policy.child_path("params"), "expected an object");
    c.policy.params = *params;
  }
  policy.finish();

  c.chunk_horizon = r.unsigned_int("chunk_horizon", c.chunk_horizon);
  c.action_dim = r.unsigned_int("action_dim", c.action_dim);

  ParamReader ens = r.object("ensemble");
  const std::string kind = ens.string("kind", std::string(to_string(c.ensemble.kind)));
  try {
    c.ensemble.kind = parse_ensemble_kind(kind);
  } catch (const std::invalid_argument& e) {
    throw SchemaViolation(ens.child_path("kind"), e.what());
  }
  c.ensemble.alpha = ens.number("alpha", c.ensemble.alpha);
  ens.finish();

  c.replan_interval = r.unsigned_int("replan_interval", c.replan_interval);
  c.max_buffered_chunks = r.unsigned_int("max_buffered_chunks", c.max_buffered_chunks);

  c.max_batch_size = r.unsigned_int("max_batch_size", c.max_batch_size);
  c.max_wait_ms = r.number("max_wait_ms", c.max_wait_ms);

  ParamReader latency = r.object("latency");
  c.latency.base_ms = latency.number("base_ms", c.latency.base_ms);
  c.latency.per_item_ms = latency.number("per_item_ms", c.latency.per_item_ms);
  latency.finish();

  c.host = r.string("host", c.host);
  const std::uint64_t port = r.unsigned_int("port", c.port);
  if (port > 65535) throw SchemaViolation(r.child_path("port"), "must be <= 65535");
  c.port = static_cast<std::uint16_t>(port);
  r.finish();

  try {
    c.validate();
  } catch (const SchemaViolation& e) {
    throw SchemaViolation(path.empty() ? e.path() : path + "." + e.path(), e.what());
  }
  // Surface bad policy params at load time.
  make_policy(c.policy, c.chunk_horizon, c.action_dim, path.empty() ? "policy" : path + ".policy");
  return c;
}

namespace {

BatchingOptions batching_options(const ModelServerConfig& c) {
  c.validate();
  return BatchingOptions{c.max_batch_size,
                         std::chrono::microseconds(static_cast<std::int64_t>(std::llround(c.max_wait_ms * 1000.0)))};
}

PredictOutcome failed(std::string message) {
  PredictOutcome out;
  out.error = std::move(message);
  return out;
}

}  // namespace

ModelServer::ModelServer(ModelServerConfig config, std::unique_ptr<Policy> policy)
    : config_(std::move(config)), policy_(std::move(policy)), queue_(batching_options(config_)) {
  if (!policy_) policy_ = make_policy(config_.policy, config_.chunk_horizon, config_.action_dim);
  worker_ = std::thread([this] { inference_loop(); });
}

ModelServer::~ModelServer() { shutdown(); }

std::future<PredictOutcome> ModelServer::submit(PredictRequest request) {
  Job job{std::move(request), {}};
  auto future = job.promise.get_future();
  if (!queue_.submit(std::move(job))) {
    std::promise<PredictOutcome> rejected;
    rejected.set_value(failed("model server is shutting down"));
    return rejected.get_future();
  }
  return future;
}

std::vector<PredictOutcome> ModelServer::predict_batch(std::span<const PredictRequest> batch) {
  return run_batch(batch);
}

std::vector<PredictOutcome> ModelServer::run_batch(std::span<const PredictRequest> batch) {
  if (batch.empty()) return {};
  const auto start = std::chrono::steady_clock::now();
  std::vector<PredictOutcome> out;
  {
    std::lock_guard<std::mutex> lock(policy_mu_);
    try {
      out = policy_->predict_batch(batch);
    } catch (const std::exception& e) {
      out.assign(batch.size(), failed(e.what()));
    }
    if (out.size() != batch.size()) out.assign(batch.size(), failed("policy returned a wrong-sized batch"));
    std::this_thread::sleep_until(start + config_.latency.for_batch(batch.size()));
  }
  std::uint64_t failures = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& o = out[i];
    if (o.chunk) {
      if (!o.chunk->valid() || o.chunk->horizon != config_.chunk_horizon || o.chunk->dim != config_.action_dim) {
        o = failed("policy returned a malformed chunk");
      } else {
        o.chunk->issued_step = batch[i].ctx.step_index;
      }
    } else if (o.error.empty()) {
      o.error = "policy returned no chunk";
    }
    if (!o.ok()) ++failures;
  }
  {
    std::lock_guard<std::mutex> lock(stats_mu_);
    stats_.requests_completed += batch.size();
    stats_.batches += 1;
    stats_.failures += failures;
    stats_.batch_sizes[batch.size()] += 1;
  }
  completed_.fetch_add(batch.size());
  return out;
}

void ModelServer::inference_loop() {
  for (;;) {
    std::vector<Job> jobs = queue_.collect_batch();
    if (jobs.empty()) return;
    std::vector<PredictRequest> requests;
    requests.reserve(jobs.size());
    for (auto& j : jobs) requests.push_back(std::move(j.request));
    auto outcomes = run_batch(requests);
    for (std::size_t i = 0; i < jobs.size(); ++i) jobs[i].promise.set_value(std::move(outcomes[i]));
  }
}

void ModelServer::shutdown() {
  std::call_once(shutdown_once_, [this] {
    queue_.shutdown();
    if (worker_.joinable()) worker_.join();
  });
}

void ModelServer::abort() {
  std::call_once(shutdown_once_, [this] {
    queue_.shutdown();
    for (Job& job : queue_.take_all()) job.promise.set_value(failed("model server aborted"));
    if (worker_.joinable()) worker_.join();
  });
}

ServerStats ModelServer::stats() const {
  std::lock_guard<std::mutex> lock(stats_mu_);
  return stats_;
}

ModelSession::ModelSession(ModelServer& server)
    : server_(server), buffer_(server.config().buffer_capacity()) {}

std::vector<Reply> ModelSession::fail(std::string_view kind, const std::string& message, bool close) {
  if (close) closing_ = true;
  return {Reply{MessageType::kError, error_payload(kind, message)}};
}

std::vector<Reply> ModelSession::handle(const Message& in) {
  if (closing_) return {};
  if (!handshaken_) {
    if (in.type != MessageType::kHandshake)
      return fail("protocol_error", "expected handshake, got " + std::string(to_string(in.type)), true);
    try {
      check_handshake(in, "runner");
    } catch (const VersionMismatch& e) {
      return fail("version_mismatch", e.what(), true);
    } catch (const ProtocolError& e) {
      return fail("protocol_error", e.what(), true);
    }
    handshaken_ = true;
    const auto& c = server_.config();
    Value::Object extra{{"action_dim", Value(c.action_dim)},
                        {"chunk_horizon", Value(c.chunk_horizon)},
                        {"server_config", Value(to_json(c).dump())}};
    return {Reply{MessageType::kHandshake, handshake_payload("model", std::move(extra))}};
  }

  switch (in.type) {
    case MessageType::kEpisodeStart: {
      PredictContext ctx;
      try {
        if (const Value* v = find_key(in.payload, "episode_id")) ctx.episode_id = v->as_string();
        if (const Value* v = find_key(in.payload, "task_id")) ctx.task_id = v->as_string();
      } catch (const std::exception& e) {
        return fail("protocol_error", std::string("bad episode_start payload: ") + e.what(), true);
      }
      ctx_ = std::move(ctx);
      buffer_.clear(0);
      in_episode_ = true;
      return {};
    }
    case MessageType::kEpisodeEnd:
      in_episode_ = false;
      return {};
    case MessageType::kObservation:
      return on_observation(in);
    default:
      return fail("protocol_error", "unexpected " + std::string(to_string(in.type)) + " from runner", true);
  }
}

std::vector<Reply> ModelSession::on_observation(const Message& in) {
  ObservationPayload obs;
  try {
    obs = observation_from_payload(in.payload);
  } catch (const ProtocolError& e) {
    return fail("protocol_error", e.what(), true);
  }
  const std::uint64_t step = ctx_.step_index;
  buffer_.advance_to(step);
  if (step % server_.config().replan_interval == 0 || buffer_.empty()) {
    PredictRequest req{std::move(obs), ctx_};
    PredictOutcome outcome = server_.submit(std::move(req)).get();
    if (!outcome.ok()) {
      ctx_.step_index = step + 1;
      return fail("model_error", outcome.error, false);
    }
    buffer_.push(std::move(*outcome.chunk));
  }
  std::vector<double> action = ensemble_action(buffer_, server_.config().ensemble);
  ctx_.step_index = step + 1;
  return {Reply{MessageType::kAction, action_to_payload(action)}};
}

void serve_connection(ModelServer& server, FrameTransport& transport) {
  ModelSession session(server);
  SequencedCodec codec;
  for (;;) {
    Bytes frame;
    try {
      frame = transport.receive_frame(kNoTimeout);
    } catch (const ConnectionClosed&) {
      return;
    } catch (const ReceiveTimeout&) {
      return;
    }
    std::vector<Reply> replies;
    bool close = false;
    try {
      replies = session.handle(codec.unpack(frame));
      close = session.closing();
    } catch (const ProtocolError& e) {
      replies = {Reply{MessageType::kError, error_payload("protocol_error", e.what())}};
      close = true;
    }
    try {
      for (auto& [type, payload] : replies) transport.send_frame(codec.pack(type, std::move(payload)));
    } catch (const ConnectionClosed&) {
      return;
    }
    if (close) {
      transport.close();
      return;
    }
  }
}

LoopbackTransport::LoopbackTransport(ModelServer& server) : server_(server), session_(server) {}

void LoopbackTransport::send_frame(std::span<const std::uint8_t> frame) {
  if (closed_) throw ConnectionClosed("loopback transport closed");
  std::vector<Reply> replies;
  try {
    replies = session_.handle(codec_.unpack(frame));
    if (session_.closing()) closed_ = true;
  } catch (const ProtocolError& e) {
    replies = {Reply{MessageType::kError, error_payload("protocol_error", e.what())}};
    closed_ = true;
  }
  for (auto& [type, payload] : replies) inbox_.push_back(codec_.pack(type, std::move(payload)));
}

Bytes LoopbackTransport::receive_frame(Millis) {
  if (inbox_.empty()) {
    if (closed_) throw ConnectionClosed("loopback transport closed");
    throw ReceiveTimeout("no reply pending");
  }
  Bytes frame = std::move(inbox_.front());
  inbox_.pop_front();
  return frame;
}

ServerHandle::ServerHandle(ModelServerConfig config, std::unique_ptr<Policy> policy)
    : model_(std::move(config), std::move(policy)) {
  ws_ = std::make_unique<WebSocketServer>(model_.config().host, model_.config().port,
                                          [this](FrameTransport& t) { serve_connection(model_, t); });
  ws_->start();
}

ServerHandle::~ServerHandle() { stop(); }

void ServerHandle::stop() {
  if (stopped_) return;
  stopped_ = true;
  ws_->stop();
  model_.shutdown();
}

}  // namespace vlaeval
