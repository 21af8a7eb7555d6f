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

#include <atomic>
#include <chrono>
#include <deque>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "vlaeval/batching.hpp"
#include "vlaeval/chunking.hpp"
#include "vlaeval/params.hpp"
#include "vlaeval/policies.hpp"
#include "vlaeval/protocol.hpp"
#include "vlaeval/transport.hpp"

namespace vlaeval {

// Synthetic inference cost per batch: base_ms + per_item_ms * B.
struct LatencyModel {
  double base_ms = 0.0;
  double per_item_ms = 0.0;

  std::chrono::nanoseconds for_batch(std::size_t batch_size) const;
};

struct ModelServerConfig {
  PolicySpec policy;
  std::size_t chunk_horizon = 8;
  std::size_t action_dim = 7;
  EnsembleStrategy ensemble;  // ema, alpha 0.5
  std::size_t replan_interval = 1;
  std::size_t max_buffered_chunks = 0;  // 0 means chunk_horizon
  std::size_t max_batch_size = 1;
  double max_wait_ms = 5.0;
  LatencyModel latency;
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;

  // Throws SchemaViolation.
  void validate() const;
  std::size_t buffer_capacity() const { return max_buffered_chunks == 0 ? chunk_horizon : max_buffered_chunks; }
};

Json to_json(const ModelServerConfig& config);
// Strict: unknown keys are rejected. Throws SchemaViolation.
ModelServerConfig model_server_config_from_json(const Json& doc, const std::string& path = "");

struct ServerStats {
  std::uint64_t requests_completed = 0;
  std::uint64_t batches = 0;
  std::uint64_t failures = 0;
  std::map<std::size_t, std::uint64_t> batch_sizes;  // size -> count
};

// The in-process half of a model server: owns the policy, the batch queue
// and the single inference thread. Transport-agnostic.
class ModelServer {
 public:
  explicit ModelServer(ModelServerConfig config, std::unique_ptr<Policy> policy = nullptr);
  ~ModelServer();

  ModelServer(const ModelServer&) = delete;
  ModelServer& operator=(const ModelServer&) = delete;

  // Queues one request for the inference thread. After shutdown the future
  // resolves immediately with an error outcome.
  std::future<PredictOutcome> submit(PredictRequest request);

  // Direct batch call on the caller's thread (latency model applied).
  std::vector<PredictOutcome> predict_batch(std::span<const PredictRequest> batch);

  // Answers everything still queued, then stops the inference thread.
  void shutdown();
  // Errors everything still queued instead of running it, then stops.
  void abort();

  const ModelServerConfig& config() const { return config_; }
  std::size_t pending() const { return queue_.pending(); }
  ServerStats stats() const;
  // Monotonic count of completed requests, cheap to poll.
  std::uint64_t completed() const { return completed_.load(); }

 private:
  struct Job {
    PredictRequest request;
    std::promise<PredictOutcome> promise;
  };

  void inference_loop();
  std::vector<PredictOutcome> run_batch(std::span<const PredictRequest> batch);

  ModelServerConfig config_;
  std::unique_ptr<Policy> policy_;
  BatchQueue<Job> queue_;
  std::mutex policy_mu_;
  mutable std::mutex stats_mu_;
  ServerStats stats_;
  std::atomic<std::uint64_t> completed_{0};
  std::thread worker_;
  std::once_flag shutdown_once_;
};

using Reply = std::pair<MessageType, Value::Object>;

// Per-connection protocol state: handshake, episode context, chunk buffer.
class ModelSession {
 public:
  explicit ModelSession(ModelServer& server);

  // Handles one inbound message (already sequence-checked) and returns the
  // replies to send, in order.
  std::vector<Reply> handle(const Message& in);
  // Set after a fatal protocol error; the transport should close.
  bool closing() const { return closing_; }

  const ChunkBuffer& buffer() const { return buffer_; }
  const PredictContext& context() const { return ctx_; }

 private:
  std::vector<Reply> fail(std::string_view kind, const std::string& message, bool close);
  std::vector<Reply> on_observation(const Message& in);

  ModelServer& server_;
  ChunkBuffer buffer_;
  PredictContext ctx_;
  bool handshaken_ = false;
  bool in_episode_ = false;
  bool closing_ = false;
};

// Runs one connection until the peer leaves or the session closes it.
// Protocol errors are answered with an Error message before closing.
void serve_connection(ModelServer& server, FrameTransport& transport);

// In-process transport wired straight to a ModelSession; the model side runs
// synchronously inside send_frame().
class LoopbackTransport : public FrameTransport {
 public:
  explicit LoopbackTransport(ModelServer& server);

  void send_frame(std::span<const std::uint8_t> frame) override;
  Bytes receive_frame(Millis timeout) override;
  void close() override { closed_ = true; }

 private:
  ModelServer& server_;
  ModelSession session_;
  SequencedCodec codec_;
  std::deque<Bytes> inbox_;
  bool closed_ = false;
};

// A listening model server.
class ServerHandle {
 public:
  // Binds host:port from the config (port 0 picks one). Throws BindFailure.
  explicit ServerHandle(ModelServerConfig config, std::unique_ptr<Policy> policy = nullptr);
  ~ServerHandle();

  std::uint16_t port() const { return ws_->port(); }
  Endpoint endpoint() const { return Endpoint{model_.config().host, port()}; }
  ModelServer& model() { return model_; }
  // Stops accepting, drains in-flight inference and closes connections.
  void stop();

 private:
  ModelServer model_;
  std::unique_ptr<WebSocketServer> ws_;
  bool stopped_ = false;
};

}  // namespace vlaeval
