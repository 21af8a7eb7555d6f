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

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vlaeval/protocol.hpp"
#include "vlaeval/value.hpp"

namespace vlaeval {

class ConnectionClosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReceiveTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BindFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ws://host:port
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static Endpoint parse(std::string_view url);  // throws std::invalid_argument
  std::string url() const;
};

using Millis = std::chrono::milliseconds;
inline constexpr Millis kNoTimeout = Millis::max();

// One message per frame, in both directions.
class FrameTransport {
 public:
  virtual ~FrameTransport() = default;
  // Throws ConnectionClosed.
  virtual void send_frame(std::span<const std::uint8_t> frame) = 0;
  // Throws ReceiveTimeout or ConnectionClosed. A transport that timed out
  // is not reusable: the late frame would desynchronize sequence numbers.
  virtual Bytes receive_frame(Millis timeout) = 0;
  virtual void close() = 0;
};

// Binary-frame WebSocket client.
std::unique_ptr<FrameTransport> connect_websocket(const Endpoint& endpoint,
                                                  Millis connect_timeout = Millis(5000));

// Client side of the protocol: sequence discipline over a transport.
class Connection {
 public:
  explicit Connection(std::unique_ptr<FrameTransport> transport);

  void send(MessageType type, Value::Object payload);
  // Throws ReceiveTimeout, ConnectionClosed, MalformedFrame,
  // UnknownMessageType or SequenceGap.
  Message receive(Millis timeout);
  // Sends {"protocol_version", "role"} and validates the model's reply.
  Message handshake(std::string_view role, Millis timeout, Value::Object extra = {});
  void close();

  bool broken() const { return broken_; }
  void mark_broken() { broken_ = true; }

 private:
  std::unique_ptr<FrameTransport> transport_;
  SequencedCodec codec_;
  bool broken_ = false;
};

// Accepts WebSocket connections and runs handler(transport) for each one on
// its own thread. Binding happens in the constructor.
class WebSocketServer {
 public:
  using Handler = std::function<void(FrameTransport&)>;

  // port 0 picks an ephemeral port. Throws BindFailure.
  WebSocketServer(const std::string& host, std::uint16_t port, Handler handler);
  ~WebSocketServer();

  WebSocketServer(const WebSocketServer&) = delete;
  WebSocketServer& operator=(const WebSocketServer&) = delete;

  std::uint16_t port() const;
  void start();
  // Stops accepting and shuts down every live connection; joins all threads.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vlaeval
