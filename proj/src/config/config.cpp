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

#include "vlaeval/config.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace vlaeval {

namespace fs = std::filesystem;

namespace {

Json scalar_to_json(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text.empty() || text == "~" || text == "null" || text == "Null" || text == "NULL") return nullptr;
  if (text == "true" || text == "True" || text == "TRUE") return true;
  if (text == "false" || text == "False" || text == "FALSE") return false;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (text[0] == '-') {
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(begin, end, i);
    if (ec == std::errc() && p == end) return i;
  } else {
    std::uint64_t u = 0;
    auto [p, ec] = std::from_chars(begin + (text[0] == '+' ? 1 : 0), end, u);
    if (ec == std::errc() && p == end) return u;
  }
  if (text == ".inf" || text == "+.inf" || text == "-.inf" || text == ".nan") return text;
  char* stop = nullptr;
  const double d = std::strtod(text.c_str(), &stop);
  if (stop == text.c_str() + text.size() && std::isfinite(d)) return d;
  return text;
}

Json node_to_json(const YAML::Node& node, const std::string& path) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      std::size_t i = 0;
      for (const auto& item : node) out.push_back(node_to_json(item, path + "[" + std::to_string(i++) + "]"));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : node) {
        if (!kv.first.IsScalar()) throw SchemaViolation(path, "mapping keys must be scalars");
        const std::string key = kv.first.Scalar();
        const std::string child = path.empty() ? key : path + "." + key;
        if (out.contains(key)) throw SchemaViolation(child, "duplicate key");
        out[key] = node_to_json(kv.second, child);
      }
      return out;
    }
  }
  return nullptr;
}

std::string strings_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

}  // namespace

Json parse_document(const std::string& text) {
  try {
    return node_to_json(YAML::Load(text), "");
  } catch (const YAML::Exception& e) {
    throw SchemaViolation("", std::string("not valid YAML: ") + e.what());
  }
}

Json load_document(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaViolation("", "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_document(buf.str());
}

Millis RunSection::step_timeout() const {
  return Millis(static_cast<std::int64_t>(std::llround(step_timeout_s * 1000.0)));
}

Json to_json(const EvalConfig& c) {
  return {{"benchmark", to_json(c.benchmark)},
          {"run",
           {{"shards", c.run.shards},
            {"step_timeout_s", c.run.step_timeout_s},
            {"server_endpoint", c.run.server_endpoint},
            {"container_cmd", c.run.container_cmd},
            {"fail_on_infra", c.run.fail_on_infra}}},
          {"provenance", {{"image_tag", c.provenance.image_tag}, {"config_hash", c.provenance.config_hash}}}};
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string config_hash(const EvalConfig& config) {
  Json doc = to_json(config);
  doc["provenance"].erase("config_hash");
  return sha256_hex(doc.dump());
}

EvalConfig eval_config_from_json(const Json& doc) {
  EvalConfig c;
  ParamReader r(doc, "");
  const Json* bench = r.raw("benchmark");
  if (bench == nullptr) throw SchemaViolation("benchmark", "required section is missing");
  c.benchmark = benchmark_config_from_json(*bench, "benchmark");

  ParamReader run = r.object("run");
  c.run.shards = run.unsigned_int("shards", c.run.shards);
  if (c.run.shards == 0) throw SchemaViolation("run.shards", "must be >= 1");
  c.run.step_timeout_s = run.number("step_timeout_s", c.run.step_timeout_s);
  if (!(c.run.step_timeout_s > 0.0)) throw SchemaViolation("run.step_timeout_s", "must be > 0");
  c.run.server_endpoint = run.string("server_endpoint", c.run.server_endpoint);
  try {
    Endpoint::parse(c.run.server_endpoint);
  } catch (const std::invalid_argument& e) {
    throw SchemaViolation("run.server_endpoint", e.what());
  }
  if (const Json* cmd = run.raw("container_cmd")) {
    if (!cmd->is_array()) throw SchemaViolation("run.container_cmd", "expected a list of strings");
    for (std::size_t i = 0; i < cmd->size(); ++i) {
      if (!(*cmd)[i].is_string()) throw SchemaViolation(strings_path("run.container_cmd", i), "expected a string");
      c.run.container_cmd.push_back((*cmd)[i].get<std::string>());
    }
  }
  c.run.fail_on_infra = run.boolean("fail_on_infra", c.run.fail_on_infra);
  run.finish();

  ParamReader prov = r.object("provenance");
  c.provenance.image_tag = prov.string("image_tag", c.provenance.image_tag);
  const std::string supplied = prov.string("config_hash", "");
  prov.finish();
  r.finish();

  c.provenance.config_hash = config_hash(c);
  if (!supplied.empty() && supplied != c.provenance.config_hash) {
    throw SchemaViolation("provenance.config_hash", "does not match the configuration (expected " +
                                                         c.provenance.config_hash + ")");
  }
  return c;
}

EvalConfig load_eval_config(const fs::path& path) { return eval_config_from_json(load_document(path)); }

ModelServerConfig load_model_server_config(const fs::path& path) {
  return model_server_config_from_json(load_document(path), "");
}

Json to_json(const ResultRecord& r) {
  Json episodes = Json::array();
  for (const auto& e : r.episodes) episodes.push_back(to_json(e));
  return {{"harness_version", r.harness_version},
          {"started_at", r.started_at},
          {"finished_at", r.finished_at},
          {"eval_config", r.eval_config},
          {"model_server_config", r.model_server_config},
          {"metrics", r.metrics},
          {"episodes", episodes}};
}

ResultRecord result_record_from_json(const Json& doc) {
  ResultRecord r;
  ParamReader p(doc, "");
  r.harness_version = p.string("harness_version");
  r.started_at = p.string("started_at", "");
  r.finished_at = p.string("finished_at", "");
  const Json* eval = p.raw("eval_config");
  if (eval == nullptr) throw SchemaViolation("eval_config", "required section is missing");
  r.eval_config = *eval;
  const Json* server = p.raw("model_server_config");
  r.model_server_config = server ? *server : Json(nullptr);
  const Json* metrics = p.raw("metrics");
  r.metrics = metrics ? *metrics : Json(nullptr);
  const Json* episodes = p.raw("episodes");
  if (episodes != nullptr) {
    if (!episodes->is_array()) throw SchemaViolation("episodes", "expected a list");
    for (const auto& e : *episodes) r.episodes.push_back(episode_result_from_json(e));
  }
  p.finish();
  return r;
}

void write_result_record(const ResultRecord& record, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "result.json");
    out << to_json(record).dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + (dir / "result.json").string());
  }
  std::ofstream lines(dir / "episodes.jsonl");
  for (const auto& e : record.episodes) lines << to_json(e).dump() << "\n";
  if (!lines) throw std::runtime_error("cannot write " + (dir / "episodes.jsonl").string());
}

ResultRecord read_result_record(const fs::path& result_json) {
  std::ifstream in(result_json);
  if (!in) throw SchemaViolation("", "cannot read " + result_json.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw SchemaViolation("", std::string("not valid JSON: ") + e.what());
  }
  return result_record_from_json(doc);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace vlaeval
