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

#include "vlaeval/value.hpp"

#include <bit>
#include <limits>

namespace vlaeval {

namespace {

std::int64_t checked_signed(unsigned long long v) {
  if (v > static_cast<unsigned long long>(std::numeric_limits<std::int64_t>::max())) {
    throw std::out_of_range("integer payload value exceeds int64 range");
  }
  return static_cast<std::int64_t>(v);
}

[[noreturn]] void kind_mismatch(const char* wanted, Value::Kind got) {
  throw std::invalid_argument(std::string("expected ") + wanted + ", got " + kind_name(got));
}

}  // namespace

Value::Value(unsigned long v) : storage_(checked_signed(v)) {}
Value::Value(unsigned long long v) : storage_(checked_signed(v)) {}

Value Value::from_doubles(std::span<const double> xs) {
  Array out;
  out.reserve(xs.size());
  for (double x : xs) out.emplace_back(x);
  return Value(std::move(out));
}

bool Value::as_bool() const {
  if (!is_bool()) kind_mismatch("bool", kind());
  return std::get<bool>(storage_);
}

std::int64_t Value::as_int() const {
  if (!is_int()) kind_mismatch("int", kind());
  return std::get<std::int64_t>(storage_);
}

std::uint64_t Value::as_uint() const {
  std::int64_t v = as_int();
  if (v < 0) throw std::invalid_argument("expected non-negative int");
  return static_cast<std::uint64_t>(v);
}

double Value::as_double() const {
  if (is_int()) return static_cast<double>(std::get<std::int64_t>(storage_));
  if (!is_float()) kind_mismatch("float", kind());
  return std::get<double>(storage_);
}

const std::string& Value::as_string() const {
  if (!is_string()) kind_mismatch("string", kind());
  return std::get<std::string>(storage_);
}

const Bytes& Value::as_binary() const {
  if (!is_binary()) kind_mismatch("binary", kind());
  return std::get<Bytes>(storage_);
}

const Value::Array& Value::as_array() const {
  if (!is_array()) kind_mismatch("array", kind());
  return std::get<Array>(storage_);
}

Value::Array& Value::as_array() {
  if (!is_array()) kind_mismatch("array", kind());
  return std::get<Array>(storage_);
}

const Value::Object& Value::as_map() const {
  if (!is_map()) kind_mismatch("map", kind());
  return std::get<Object>(storage_);
}

Value::Object& Value::as_map() {
  if (!is_map()) kind_mismatch("map", kind());
  return std::get<Object>(storage_);
}

const Opaque& Value::as_opaque() const {
  if (kind() != Kind::kOpaque) kind_mismatch("opaque", kind());
  return std::get<Opaque>(storage_);
}

std::vector<double> Value::as_doubles() const {
  const Array& items = as_array();
  std::vector<double> out;
  out.reserve(items.size());
  for (const Value& v : items) out.push_back(v.as_double());
  return out;
}

const Value* Value::find(std::string_view key) const {
  if (!is_map()) return nullptr;
  return find_key(std::get<Object>(storage_), key);
}

const Value& Value::at(std::string_view key) const {
  const Value* v = find(key);
  if (v == nullptr) throw std::out_of_range("missing key '" + std::string(key) + "'");
  return *v;
}

bool operator==(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Value::Kind::kFloat:
      return std::bit_cast<std::uint64_t>(std::get<double>(a.storage_)) ==
             std::bit_cast<std::uint64_t>(std::get<double>(b.storage_));
    case Value::Kind::kOpaque:
      return std::get<Opaque>(a.storage_).handle == std::get<Opaque>(b.storage_).handle;
    default:
      break;
  }
  // Remaining alternatives compare structurally; Array/Object recurse here.
  switch (a.kind()) {
    case Value::Kind::kNil: return true;
    case Value::Kind::kBool: return a.as_bool() == b.as_bool();
    case Value::Kind::kInt: return a.as_int() == b.as_int();
    case Value::Kind::kString: return a.as_string() == b.as_string();
    case Value::Kind::kBinary: return a.as_binary() == b.as_binary();
    case Value::Kind::kArray: return a.as_array() == b.as_array();
    case Value::Kind::kMap: return a.as_map() == b.as_map();
    default: return false;
  }
}

const char* kind_name(Value::Kind kind) {
  switch (kind) {
    case Value::Kind::kNil: return "nil";
    case Value::Kind::kBool: return "bool";
    case Value::Kind::kInt: return "int";
    case Value::Kind::kFloat: return "float";
    case Value::Kind::kString: return "string";
    case Value::Kind::kBinary: return "binary";
    case Value::Kind::kArray: return "array";
    case Value::Kind::kMap: return "map";
    case Value::Kind::kOpaque: return "opaque";
  }
  return "?";
}

const Value* find_key(const Value::Object& object, std::string_view key) {
  for (const auto& [k, v] : object) {
    if (k == key) return &v;
  }
  return nullptr;
}

}  // namespace vlaeval
