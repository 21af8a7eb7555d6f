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
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace vlaeval {

using Bytes = std::vector<std::uint8_t>;

// A host object that has no wire representation (a callback, a simulator
// handle stuffed into an info map). Holding one is legal; encoding one is not.
struct Opaque {
  std::string type_name;
  std::shared_ptr<const void> handle;
};

// Schemaless payload value: the subset of msgpack the protocol carries.
// Maps keep insertion order so encoding is deterministic.
class Value {
 public:
  using Array = std::vector<Value>;
  using Entry = std::pair<std::string, Value>;
  using Object = std::vector<Entry>;

  enum class Kind { kNil, kBool, kInt, kFloat, kString, kBinary, kArray, kMap, kOpaque };

  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : storage_(b) {}
  Value(int v) : storage_(static_cast<std::int64_t>(v)) {}
  Value(unsigned v) : storage_(static_cast<std::int64_t>(v)) {}
  Value(long v) : storage_(static_cast<std::int64_t>(v)) {}
  Value(long long v) : storage_(static_cast<std::int64_t>(v)) {}
  Value(unsigned long v);
  Value(unsigned long long v);
  Value(double v) : storage_(v) {}
  Value(const char* s) : storage_(std::string(s)) {}
  Value(std::string s) : storage_(std::move(s)) {}
  Value(std::string_view s) : storage_(std::string(s)) {}
  Value(Bytes b) : storage_(std::move(b)) {}
  Value(Array a) : storage_(std::move(a)) {}
  Value(Object o) : storage_(std::move(o)) {}
  Value(Opaque o) : storage_(std::move(o)) {}

  static Value array(std::initializer_list<Value> items) { return Value(Array(items)); }
  static Value object(std::initializer_list<Entry> items) { return Value(Object(items)); }
  static Value from_doubles(std::span<const double> xs);

  Kind kind() const { return static_cast<Kind>(storage_.index()); }
  bool is_nil() const { return kind() == Kind::kNil; }
  bool is_bool() const { return kind() == Kind::kBool; }
  bool is_int() const { return kind() == Kind::kInt; }
  bool is_float() const { return kind() == Kind::kFloat; }
  bool is_number() const { return is_int() || is_float(); }
  bool is_string() const { return kind() == Kind::kString; }
  bool is_binary() const { return kind() == Kind::kBinary; }
  bool is_array() const { return kind() == Kind::kArray; }
  bool is_map() const { return kind() == Kind::kMap; }

  // Typed access; throws std::invalid_argument on kind mismatch.
  bool as_bool() const;
  std::int64_t as_int() const;
  std::uint64_t as_uint() const;
  double as_double() const;  // accepts ints
  const std::string& as_string() const;
  const Bytes& as_binary() const;
  const Array& as_array() const;
  Array& as_array();
  const Object& as_map() const;
  Object& as_map();
  const Opaque& as_opaque() const;
  std::vector<double> as_doubles() const;

  // Map lookup; nullptr when absent or when this is not a map.
  const Value* find(std::string_view key) const;
  const Value& at(std::string_view key) const;

  // Bitwise comparison for floats: NaN payloads and signed zeros count.
  friend bool operator==(const Value& a, const Value& b);
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string, Bytes, Array, Object,
               Opaque>
      storage_;
};

const char* kind_name(Value::Kind kind);

// Linear lookup in an ordered object.
const Value* find_key(const Value::Object& object, std::string_view key);

}  // namespace vlaeval
