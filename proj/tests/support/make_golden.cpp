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

// Regenerates tests/golden/ from the corpus definition. Existing frames must
// not change; run this only after appending a new corpus entry.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "golden_corpus.hpp"
#include "reference_msgpack.hpp"
#include "vlaeval/protocol.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <golden-dir>\n", argv[0]);
    return 2;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir / "frames");
  nlohmann::ordered_json manifest;
  manifest["protocol_version"] = vlaeval::kProtocolVersion;
  manifest["frames"] = nlohmann::ordered_json::array();
  int index = 0;
  for (const auto& [name, message] : vlaeval::testing::golden_messages()) {
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%02d_", index++);
    const std::string file = "frames/" + std::string(prefix) + name + ".msgpack";
    vlaeval::Bytes frame = vlaeval::encode_message(message);
    std::ofstream(dir / file, std::ios::binary)
        .write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    manifest["frames"].push_back({{"name", name},
                                  {"file", file},
                                  {"type", std::string(vlaeval::to_string(message.type))},
                                  {"seq", message.seq},
                                  {"ts", message.timestamp},
                                  {"size", frame.size()},
                                  {"frame_hex", [&] {
                                     std::string hex;
                                     static const char* digits = "0123456789abcdef";
                                     for (auto b : frame) {
                                       hex.push_back(digits[b >> 4]);
                                       hex.push_back(digits[b & 0xf]);
                                     }
                                     return hex;
                                   }()}});
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  return 0;
}
