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

#include <filesystem>
#include <string>
#include <vector>

#include "vlaeval/benchmark.hpp"
#include "vlaeval/model_server.hpp"
#include "vlaeval/orchestrator.hpp"
#include "vlaeval/params.hpp"
#include "vlaeval/runner.hpp"

namespace vlaeval {

inline constexpr const char* kHarnessVersion = "0.1.0";

// Reads a YAML (or JSON) document. Quoted scalars stay strings; plain
// scalars become null, bool, integer or float when they parse as one.
// Throws SchemaViolation on syntax errors or duplicate keys.
Json load_document(const std::filesystem::path& path);
Json parse_document(const std::string& text);

struct RunSection {
  std::uint64_t shards = 1;
  double step_timeout_s = 30.0;
  std::string server_endpoint = "ws://127.0.0.1:8765";
  std::vector<std::string> container_cmd;
  bool fail_on_infra = true;

  Millis step_timeout() const;
};

struct Provenance {
  std::string image_tag = "local";
  std::string config_hash;
};

struct EvalConfig {
  BenchmarkConfig benchmark;
  RunSection run;
  Provenance provenance;
};

// Resolved form, every default filled in.
Json to_json(const EvalConfig& config);
// Strict parse; computes provenance.config_hash. A supplied hash must match.
// Throws SchemaViolation or MissingNormalizationStats.
EvalConfig eval_config_from_json(const Json& doc);
EvalConfig load_eval_config(const std::filesystem::path& path);
ModelServerConfig load_model_server_config(const std::filesystem::path& path);

// SHA-256 hex of the resolved config with provenance.config_hash removed.
std::string config_hash(const EvalConfig& config);
std::string sha256_hex(const std::string& data);

struct ResultRecord {
  Json eval_config;
  Json model_server_config;  // null when the server did not report one
  Json metrics;
  std::vector<EpisodeResult> episodes;
  std::string harness_version = kHarnessVersion;
  std::string started_at;
  std::string finished_at;
};

Json to_json(const ResultRecord& record);
ResultRecord result_record_from_json(const Json& doc);
// Writes result.json and episodes.jsonl into dir.
void write_result_record(const ResultRecord& record, const std::filesystem::path& dir);
ResultRecord read_result_record(const std::filesystem::path& result_json);

std::string utc_timestamp();

}  // namespace vlaeval
