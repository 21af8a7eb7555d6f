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

#include <stdexcept>
#include <string>

namespace vlaeval {

// A configuration value is missing, unknown or out of range. path is a
// dotted key path such as "benchmark.tasks[0].max_episode_steps".
class SchemaViolation : public std::runtime_error {
 public:
  SchemaViolation(std::string path, const std::string& message)
      : std::runtime_error((path.empty() ? std::string("<root>") : path) + ": " + message),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// normalize=true with no statistics supplied.
class MissingNormalizationStats : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vlaeval
