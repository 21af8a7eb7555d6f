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

#include "vlaeval/params.hpp"

#include <algorithm>
#include <cmath>

namespace vlaeval {

ParamReader::ParamReader(const Json& object, std::string path)
    : object_(&object), path_(std::move(path)) {
  static const Json kEmpty = Json::object();
  if (object.is_null()) {
    object_ = &kEmpty;
  } else if (!object.is_object()) {
    throw SchemaViolation(path_, "expected a mapping");
  }
}

std::string ParamReader::child_path(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

bool ParamReader::has(std::string_view key) const {
  return object_->contains(key) && !(*object_)[std::string(key)].is_null();
}

const Json* ParamReader::raw(std::string_view key) {
  seen_.emplace_back(key);
  return has(key) ? &object_->at(std::string(key)) : nullptr;
}

const Json& ParamReader::require(std::string_view key, const char* what) {
  seen_.emplace_back(key);
  if (!has(key)) throw SchemaViolation(child_path(key), std::string("required ") + what + " is missing");
  return object_->at(std::string(key));
}

double ParamReader::number(std::string_view key, std::optional<double> fallback) {
  if (!has(key) && fallback) {
    seen_.emplace_back(key);
    return *fallback;
  }
  const Json& v = require(key, "number");
  if (!v.is_number()) throw SchemaViolation(child_path(key), "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaViolation(child_path(key), "must be finite");
  return d;
}

std::uint64_t ParamReader::unsigned_int(std::string_view key, std::optional<std::uint64_t> fallback) {
  if (!has(key) && fallback) {
    seen_.emplace_back(key);
    return *fallback;
  }
  const Json& v = require(key, "integer");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw SchemaViolation(child_path(key), "expected a non-negative integer");
}

bool ParamReader::boolean(std::string_view key, std::optional<bool> fallback) {
  if (!has(key) && fallback) {
    seen_.emplace_back(key);
    return *fallback;
  }
  const Json& v = require(key, "boolean");
  if (!v.is_boolean()) throw SchemaViolation(child_path(key), "expected true or false");
  return v.get<bool>();
}

std::string ParamReader::string(std::string_view key, std::optional<std::string> fallback) {
  if (!has(key) && fallback) {
    seen_.emplace_back(key);
    return *fallback;
  }
  const Json& v = require(key, "string");
  if (!v.is_string()) throw SchemaViolation(child_path(key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> ParamReader::numbers(std::string_view key, std::optional<std::vector<double>> fallback) {
  if (!has(key) && fallback) {
    seen_.emplace_back(key);
    return *fallback;
  }
  const Json& v = require(key, "list of numbers");
  if (!v.is_array()) throw SchemaViolation(child_path(key), "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      throw SchemaViolation(child_path(key) + "[" + std::to_string(i) + "]", "expected a finite number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<std::uint64_t> ParamReader::unsigned_ints(std::string_view key,
                                                      std::optional<std::vector<std::uint64_t>> fallback) {
  if (!has(key) && fallback) {
    seen_.emplace_back(key);
    return *fallback;
  }
  const Json& v = require(key, "list of integers");
  if (!v.is_array()) throw SchemaViolation(child_path(key), "expected a list of integers");
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].is_number_unsigned() || (v[i].is_number_integer() && v[i].get<std::int64_t>() >= 0)) {
      out.push_back(v[i].get<std::uint64_t>());
    } else {
      throw SchemaViolation(child_path(key) + "[" + std::to_string(i) + "]", "expected a non-negative integer");
    }
  }
  return out;
}

ParamReader ParamReader::object(std::string_view key) {
  seen_.emplace_back(key);
  if (!has(key)) return ParamReader(Json(), child_path(key));
  return ParamReader(object_->at(std::string(key)), child_path(key));
}

void ParamReader::finish() const {
  for (const auto& [key, value] : object_->items()) {
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
      throw SchemaViolation(child_path(key), "unknown key");
    }
  }
}

}  // namespace vlaeval
