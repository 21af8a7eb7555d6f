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

#include "vlaeval/observation.hpp"

#include "vlaeval/protocol.hpp"

namespace vlaeval {

Value image_to_value(const Image& image) {
  return Value::object({
      {"shape", Value::array({Value(image.height), Value(image.width), Value(image.channels)})},
      {"dtype", Value("u8")},
      {"data", Value(image.pixels)},
  });
}

Image image_from_value(const Value& value) {
  const Value* shape = value.find("shape");
  const Value* dtype = value.find("dtype");
  const Value* data = value.find("data");
  if (shape == nullptr || dtype == nullptr || data == nullptr || !shape->is_array() ||
      shape->as_array().size() != 3 || !dtype->is_string() || !data->is_binary()) {
    throw MalformedFrame("image must be {shape: [H, W, C], dtype, data: bin}");
  }
  if (dtype->as_string() != "u8") {
    throw MalformedFrame("unsupported image dtype '" + dtype->as_string() + "'");
  }
  Image image;
  try {
    image.height = static_cast<std::uint32_t>(shape->as_array()[0].as_uint());
    image.width = static_cast<std::uint32_t>(shape->as_array()[1].as_uint());
    image.channels = static_cast<std::uint32_t>(shape->as_array()[2].as_uint());
  } catch (const std::invalid_argument& e) {
    throw MalformedFrame(std::string("image shape: ") + e.what());
  }
  image.pixels = data->as_binary();
  const std::uint64_t expected =
      std::uint64_t{image.height} * image.width * image.channels;
  if (image.pixels.size() != expected) {
    throw MalformedFrame("image data has " + std::to_string(image.pixels.size()) +
                         " bytes, shape implies " + std::to_string(expected));
  }
  return image;
}

Value::Object observation_to_payload(const ObservationPayload& obs) {
  Value::Object images;
  for (const auto& [name, image] : obs.images) images.emplace_back(name, image_to_value(image));
  return Value::Object{
      {"images", Value(std::move(images))},
      {"states", Value::from_doubles(obs.states)},
      {"task_description", Value(obs.task_description)},
  };
}

ObservationPayload observation_from_payload(const Value::Object& payload) {
  const Value* images = find_key(payload, "images");
  const Value* states = find_key(payload, "states");
  const Value* task = find_key(payload, "task_description");
  if (images == nullptr || !images->is_map() || states == nullptr || !states->is_array() ||
      task == nullptr || !task->is_string()) {
    throw MalformedFrame("observation requires images (map), states (array), task_description");
  }
  ObservationPayload obs;
  for (const auto& [name, image] : images->as_map()) obs.images[name] = image_from_value(image);
  try {
    obs.states = states->as_doubles();
  } catch (const std::invalid_argument& e) {
    throw MalformedFrame(std::string("states: ") + e.what());
  }
  obs.task_description = task->as_string();
  return obs;
}

Value matrix_to_value(std::span<const double> values, std::size_t rows, std::size_t cols) {
  Value::Array out;
  out.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) out.push_back(Value::from_doubles(values.subspan(r * cols, cols)));
  return Value(std::move(out));
}

Value::Object action_to_payload(std::span<const double> action) {
  return Value::Object{{"actions", matrix_to_value(action, 1, action.size())}};
}

std::vector<double> action_from_payload(const Value::Object& payload) {
  const Value* actions = find_key(payload, "actions");
  if (actions == nullptr || !actions->is_array() || actions->as_array().empty()) {
    throw MalformedFrame("action payload requires a non-empty 'actions' matrix");
  }
  try {
    return actions->as_array().front().as_doubles();
  } catch (const std::invalid_argument& e) {
    throw MalformedFrame(std::string("actions: ") + e.what());
  }
}

}  // namespace vlaeval
