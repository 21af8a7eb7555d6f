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

// Conformance corpus check: every checked-in frame decodes and re-encodes
// byte-identically, and the corpus messages still encode to those bytes.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "golden_corpus.hpp"
#include "reference_msgpack.hpp"
#include "vlaeval/protocol.hpp"

namespace vlaeval {
namespace {

namespace fs = std::filesystem;

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

TEST(GoldenFrameTest, CorpusIsLargeEnough) {
  EXPECT_GE(testing::golden_messages().size(), 20u);
}

TEST(GoldenFrameTest, FramesAreByteStable) {
  const fs::path dir = VLAEVAL_GOLDEN_DIR;
  std::ifstream manifest_in(dir / "manifest.json");
  ASSERT_TRUE(manifest_in.good()) << "missing " << (dir / "manifest.json");
  auto manifest = nlohmann::json::parse(manifest_in);
  auto corpus = testing::golden_messages();
  ASSERT_EQ(manifest.at("frames").size(), corpus.size());

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& entry = manifest["frames"][i];
    const auto& [name, message] = corpus[i];
    ASSERT_EQ(entry.at("name").get<std::string>(), name);
    Bytes frame = read_file(dir / entry.at("file").get<std::string>());
    ASSERT_FALSE(frame.empty()) << name;

    Message decoded = decode_message(frame);
    EXPECT_EQ(decoded, message) << name;
    EXPECT_EQ(encode_message(decoded), frame) << name;
    EXPECT_EQ(encode_message(message), frame) << name;
    EXPECT_EQ(entry.at("type").get<std::string>(), std::string(to_string(message.type))) << name;
    EXPECT_EQ(entry.at("seq").get<std::uint64_t>(), message.seq) << name;
  }
}

}  // namespace
}  // namespace vlaeval
