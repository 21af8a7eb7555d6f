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

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "vlaeval/protocol.hpp"
#include "vlaeval/value.hpp"

namespace vlaeval::testing {

// Random payload values covering every wire kind and every header width
// boundary the canonical encoder distinguishes.
class ValueGenerator {
 public:
  explicit ValueGenerator(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t next() { return rng_(); }
  std::uint64_t below(std::uint64_t n) { return rng_() % n; }

  std::int64_t integer() {
    static constexpr std::int64_t kEdges[] = {0, 1, 31, 32, 127, 128, 255, 256, 65535, 65536,
                                              4294967295LL, 4294967296LL, INT64_MAX, -1, -32,
                                              -33, -128, -129, -32768, -32769, -2147483648LL,
                                              -2147483649LL, INT64_MIN};
    if (below(3) == 0) return kEdges[below(std::size(kEdges))];
    return static_cast<std::int64_t>(rng_()) >> below(64);
  }

  double real() {
    switch (below(4)) {
      case 0: return std::bit_cast<double>(rng_());  // any bit pattern, NaNs included
      case 1: return 0.0;
      case 2: return -0.0;
      default: return std::ldexp(static_cast<double>(rng_() >> 11), -53) * 200.0 - 100.0;
    }
  }

  std::string text(std::size_t max_len) {
    static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz_0123456789 \xc3\xa9";
    std::size_t len = below(max_len + 1);
    // Occasionally cross the fixstr/str8 and str8/str16 boundaries.
    if (below(10) == 0) len = std::size_t{31} + below(3);
    if (below(40) == 0) len = std::size_t{255} + below(3);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(kAlphabet[below(sizeof(kAlphabet) - 1)]);
    return s;
  }

  Bytes binary() {
    std::size_t len = below(40);
    if (below(10) == 0) len = std::size_t{255} + below(3);
    Bytes b(len);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng_());
    return b;
  }

  Value value(int depth) {
    const std::uint64_t pick = below(depth > 3 ? 6 : 8);
    switch (pick) {
      case 0: return Value();
      case 1: return Value(below(2) == 0);
      case 2: return Value(integer());
      case 3: return Value(real());
      case 4: return Value(text(40));
      case 5: return Value(binary());
      case 6: {
        Value::Array items;
        std::size_t n = below(below(8) == 0 ? 20 : 6);
        for (std::size_t i = 0; i < n; ++i) items.push_back(value(depth + 1));
        return Value(std::move(items));
      }
      default: return Value(object(depth + 1));
    }
  }

  Value::Object object(int depth) {
    Value::Object entries;
    std::size_t n = below(below(8) == 0 ? 20 : 6);
    for (std::size_t i = 0; i < n; ++i) {
      std::string key = "k" + std::to_string(i) + ":" + text(6);
      entries.emplace_back(std::move(key), value(depth + 1));
    }
    return entries;
  }

  Message message() {
    Message m;
    m.type = static_cast<MessageType>(below(6));
    m.payload = object(0);
    m.seq = below(2) == 0 ? below(100) : (rng_() >> 1);
    m.timestamp = real();
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace vlaeval::testing
