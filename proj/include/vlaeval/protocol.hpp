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

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vlaeval/value.hpp"

namespace vlaeval {

inline constexpr std::int64_t kProtocolVersion = 1;

enum class MessageType { kHandshake, kObservation, kAction, kEpisodeStart, kEpisodeEnd, kError };

std::string_view to_string(MessageType type);
std::optional<MessageType> parse_message_type(std::string_view name);

// One protocol envelope. seq is per connection and per direction, starting
// at 0. timestamp is seconds since the Unix epoch and is informational only.
struct Message {
  MessageType type = MessageType::kHandshake;
  Value::Object payload;
  std::uint64_t seq = 0;
  double timestamp = 0.0;

  friend bool operator==(const Message& a, const Message& b);
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedFrame : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class UnknownMessageType : public ProtocolError {
 public:
  explicit UnknownMessageType(const std::string& type)
      : ProtocolError("unknown message type '" + type + "'"), type_(type) {}
  const std::string& type() const { return type_; }

 private:
  std::string type_;
};

class UnencodablePayload : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class SequenceGap : public ProtocolError {
 public:
  SequenceGap(std::uint64_t expected, std::uint64_t got);
  std::uint64_t expected() const { return expected_; }
  std::uint64_t got() const { return got_; }

 private:
  std::uint64_t expected_;
  std::uint64_t got_;
};

class VersionMismatch : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// Single msgpack map with keys "type", "payload", "seq", "ts" in that order.
Bytes encode_message(const Message& msg);

// Throws MalformedFrame (bad msgpack, missing/extra key, wrong field type)
// or UnknownMessageType.
Message decode_message(std::span<const std::uint8_t> data);

// Returns expected + 1 when msg.seq == expected, throws SequenceGap otherwise.
std::uint64_t check_sequence(std::uint64_t expected, const Message& msg);

double wall_clock_seconds();

// Sequence discipline for one side of a connection: stamps outbound frames
// and validates inbound ones. Owned by exactly one thread.
class SequencedCodec {
 public:
  Bytes pack(MessageType type, Value::Object payload);
  Message unpack(std::span<const std::uint8_t> frame);

  std::uint64_t next_outbound() const { return next_outbound_; }
  std::uint64_t expected_inbound() const { return expected_inbound_; }

 private:
  std::uint64_t next_outbound_ = 0;
  std::uint64_t expected_inbound_ = 0;
};

// Handshake payload helpers. role is "model" or "runner".
Value::Object handshake_payload(std::string_view role, Value::Object extra = {});
// Throws VersionMismatch when the peer speaks another protocol version and
// MalformedFrame when the payload lacks the required fields.
void check_handshake(const Message& msg, std::string_view expected_peer_role);

// Error payload: {"kind": ..., "message": ...}.
Value::Object error_payload(std::string_view kind, std::string_view message);

}  // namespace vlaeval
