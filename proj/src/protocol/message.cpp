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

#include "vlaeval/protocol.hpp"

#include <array>
#include <bit>
#include <chrono>
#include <limits>

#include "vlaeval/msgpack.hpp"

namespace vlaeval {

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 6> kTypeNames{{
    {MessageType::kHandshake, "handshake"},
    {MessageType::kObservation, "observation"},
    {MessageType::kAction, "action"},
    {MessageType::kEpisodeStart, "episode_start"},
    {MessageType::kEpisodeEnd, "episode_end"},
    {MessageType::kError, "error"},
}};

}  // namespace

std::string_view to_string(MessageType type) {
  for (const auto& [t, name] : kTypeNames) {
    if (t == type) return name;
  }
  return "?";
}

std::optional<MessageType> parse_message_type(std::string_view name) {
  for (const auto& [t, n] : kTypeNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

bool operator==(const Message& a, const Message& b) {
  return a.type == b.type && a.seq == b.seq &&
         std::bit_cast<std::uint64_t>(a.timestamp) == std::bit_cast<std::uint64_t>(b.timestamp) &&
         Value(a.payload) == Value(b.payload);
}

SequenceGap::SequenceGap(std::uint64_t expected, std::uint64_t got)
    : ProtocolError("sequence gap: expected " + std::to_string(expected) + ", got " +
                    std::to_string(got)),
      expected_(expected),
      got_(got) {}

Bytes encode_message(const Message& msg) {
  if (msg.seq > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw UnencodablePayload("sequence number out of range");
  }
  Value::Object envelope;
  envelope.reserve(4);
  envelope.emplace_back("type", Value(std::string(to_string(msg.type))));
  envelope.emplace_back("payload", Value(msg.payload));
  envelope.emplace_back("seq", Value(static_cast<std::int64_t>(msg.seq)));
  envelope.emplace_back("ts", Value(msg.timestamp));
  try {
    return msgpack::encode(Value(std::move(envelope)));
  } catch (const msgpack::EncodeError& e) {
    throw UnencodablePayload(e.what());
  }
}

Message decode_message(std::span<const std::uint8_t> data) {
  Value root;
  try {
    root = msgpack::decode(data);
  } catch (const msgpack::DecodeError& e) {
    throw MalformedFrame(std::string("not a valid msgpack frame: ") + e.what());
  }
  if (!root.is_map()) throw MalformedFrame("frame is not a map");
  const auto& entries = root.as_map();
  if (entries.size() != 4) {
    throw MalformedFrame("frame must carry exactly type/payload/seq/ts, got " +
                         std::to_string(entries.size()) + " keys");
  }
  const Value* type = root.find("type");
  const Value* payload = root.find("payload");
  const Value* seq = root.find("seq");
  const Value* ts = root.find("ts");
  if (type == nullptr || payload == nullptr || seq == nullptr || ts == nullptr) {
    throw MalformedFrame("frame is missing one of type/payload/seq/ts");
  }
  if (!type->is_string()) throw MalformedFrame("'type' must be a string");
  if (!payload->is_map()) throw MalformedFrame("'payload' must be a map");
  if (!seq->is_int() || seq->as_int() < 0) throw MalformedFrame("'seq' must be an unsigned int");
  if (!ts->is_float()) throw MalformedFrame("'ts' must be a float");

  auto parsed = parse_message_type(type->as_string());
  if (!parsed) throw UnknownMessageType(type->as_string());

  Message msg;
  msg.type = *parsed;
  msg.payload = payload->as_map();
  msg.seq = seq->as_uint();
  msg.timestamp = ts->as_double();
  return msg;
}

std::uint64_t check_sequence(std::uint64_t expected, const Message& msg) {
  if (msg.seq != expected) throw SequenceGap(expected, msg.seq);
  return expected + 1;
}

double wall_clock_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

Bytes SequencedCodec::pack(MessageType type, Value::Object payload) {
  Message msg{type, std::move(payload), next_outbound_, wall_clock_seconds()};
  Bytes frame = encode_message(msg);
  ++next_outbound_;
  return frame;
}

Message SequencedCodec::unpack(std::span<const std::uint8_t> frame) {
  Message msg = decode_message(frame);
  expected_inbound_ = check_sequence(expected_inbound_, msg);
  return msg;
}

Value::Object handshake_payload(std::string_view role, Value::Object extra) {
  Value::Object payload;
  payload.emplace_back("protocol_version", Value(kProtocolVersion));
  payload.emplace_back("role", Value(std::string(role)));
  for (auto& entry : extra) payload.push_back(std::move(entry));
  return payload;
}

void check_handshake(const Message& msg, std::string_view expected_peer_role) {
  if (msg.type != MessageType::kHandshake) {
    throw MalformedFrame("expected handshake, got " + std::string(to_string(msg.type)));
  }
  const Value* version = find_key(msg.payload, "protocol_version");
  const Value* role = find_key(msg.payload, "role");
  if (version == nullptr || !version->is_int() || role == nullptr || !role->is_string()) {
    throw MalformedFrame("handshake requires integer protocol_version and string role");
  }
  if (version->as_int() != kProtocolVersion) {
    throw VersionMismatch("peer speaks protocol version " + std::to_string(version->as_int()) +
                          ", this build speaks " + std::to_string(kProtocolVersion));
  }
  if (role->as_string() != expected_peer_role) {
    throw MalformedFrame("unexpected peer role '" + role->as_string() + "'");
  }
}

Value::Object error_payload(std::string_view kind, std::string_view message) {
  return Value::Object{{"kind", Value(std::string(kind))},
                       {"message", Value(std::string(message))}};
}

}  // namespace vlaeval
