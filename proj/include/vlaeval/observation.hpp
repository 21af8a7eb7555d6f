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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vlaeval/value.hpp"

namespace vlaeval {

// H x W x C unsigned 8-bit image, row-major, channels interleaved.
struct Image {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 3;
  Bytes pixels;

  friend bool operator==(const Image&, const Image&) = default;
};

// The observe half of the wire: named images, a state vector and the task
// instruction. No image shape is imposed; benchmarks pick their own.
struct ObservationPayload {
  std::map<std::string, Image> images;
  std::vector<double> states;
  std::string task_description;

  friend bool operator==(const ObservationPayload&, const ObservationPayload&) = default;
};

// {"shape": [H, W, C], "dtype": "u8", "data": <bin>}
Value image_to_value(const Image& image);
Image image_from_value(const Value& value);

Value::Object observation_to_payload(const ObservationPayload& obs);
// Throws MalformedFrame when a field is missing or has the wrong shape.
ObservationPayload observation_from_payload(const Value::Object& payload);

// Action messages carry {"actions": [[a_0 .. a_{D-1}]]} (a 1 x D matrix).
Value::Object action_to_payload(std::span<const double> action);
std::vector<double> action_from_payload(const Value::Object& payload);

// Row-major rows x cols matrix as nested arrays.
Value matrix_to_value(std::span<const double> values, std::size_t rows, std::size_t cols);

}  // namespace vlaeval
