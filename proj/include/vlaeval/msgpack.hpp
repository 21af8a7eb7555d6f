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
#include <span>
#include <stdexcept>
#include <string>

#include "vlaeval/value.hpp"

namespace vlaeval::msgpack {

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Canonical msgpack encoding: smallest integer/str/bin/array/map headers,
// floats always as float64 (0xcb), map entries in insertion order.
// Throws EncodeError naming the offending key path for Opaque values.
void encode(const Value& value, Bytes& out);
Bytes encode(const Value& value);

// Accepts any well-formed msgpack in the supported subset (float32 widens,
// non-minimal headers are fine). Map keys must be strings. Rejects trailing
// bytes, ext types, uint64 values above INT64_MAX and nesting deeper than
// kMaxDepth.
Value decode(std::span<const std::uint8_t> data);

inline constexpr int kMaxDepth = 64;

}  // namespace vlaeval::msgpack
