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
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlaeval/errors.hpp"

namespace vlaeval {

using Json = nlohmann::json;

// Strict typed reader over one JSON object. Every accessor records the key
// as known; finish() rejects anything that was never asked for.
class ParamReader {
 public:
  ParamReader(const Json& object, std::string path);

  bool has(std::string_view key) const;
  const Json* raw(std::string_view key);

  double number(std::string_view key, std::optional<double> fallback = std::nullopt);
  std::uint64_t unsigned_int(std::string_view key, std::optional<std::uint64_t> fallback = std::nullopt);
  bool boolean(std::string_view key, std::optional<bool> fallback = std::nullopt);
  std::string string(std::string_view key, std::optional<std::string> fallback = std::nullopt);
  std::vector<double> numbers(std::string_view key, std::optional<std::vector<double>> fallback = std::nullopt);
  std::vector<std::uint64_t> unsigned_ints(std::string_view key,
                                           std::optional<std::vector<std::uint64_t>> fallback = std::nullopt);
  // Sub-object reader; an absent key yields an empty object.
  ParamReader object(std::string_view key);

  std::string child_path(std::string_view key) const;
  // Throws SchemaViolation naming the first unknown key.
  void finish() const;

 private:
  const Json& require(std::string_view key, const char* what);

  const Json* object_;
  std::string path_;
  std::vector<std::string> seen_;
};

}  // namespace vlaeval
