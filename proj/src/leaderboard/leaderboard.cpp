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

#include "vlaeval/leaderboard.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace vlaeval {

namespace fs = std::filesystem;

std::string_view to_string(CuratedBy who) {
  switch (who) {
    case CuratedBy::kAgent:
      return "agent";
    case CuratedBy::kHuman:
      return "human";
    case CuratedBy::kHarness:
      return "harness";
  }
  return "human";
}

std::optional<CuratedBy> parse_curated_by(std::string_view name) {
  for (CuratedBy who : {CuratedBy::kAgent, CuratedBy::kHuman, CuratedBy::kHarness}) {
    if (to_string(who) == name) return who;
  }
  return std::nullopt;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kSchema:
      return "schema";
    case ViolationKind::kUnknownProtocol:
      return "unknown protocol";
    case ViolationKind::kRange:
      return "range";
    case ViolationKind::kDuplicate:
      return "uniqueness";
  }
  return "schema";
}

namespace {

auto identity(const LeaderboardEntry& e) {
  return std::tie(e.model, e.benchmark, e.protocol_id, e.metric_name, e.source);
}

}  // namespace

std::vector<Violation> validate_entry(const LeaderboardEntry& entry, const ProtocolRegistry& protocols,
                                      const std::vector<LeaderboardEntry>& accepted) {
  std::vector<Violation> out;
  const std::pair<const char*, const std::string*> required[] = {{"model", &entry.model},
                                                                 {"benchmark", &entry.benchmark},
                                                                 {"protocol_id", &entry.protocol_id},
                                                                 {"metric_name", &entry.metric_name},
                                                                 {"source", &entry.source}};
  for (const auto& [field, text] : required) {
    if (text->empty()) out.push_back({ViolationKind::kSchema, field, "must be a non-empty string"});
  }
  if (!std::isfinite(entry.value)) out.push_back({ViolationKind::kSchema, "value", "must be a finite number"});

  const auto it = protocols.find(entry.protocol_id);
  if (it == protocols.end()) {
    out.push_back({ViolationKind::kUnknownProtocol, "protocol_id", "unknown protocol '" + entry.protocol_id + "'"});
  } else {
    const CanonicalProtocol& p = it->second;
    if (entry.benchmark != p.benchmark) {
      out.push_back({ViolationKind::kSchema, "benchmark",
                     "protocol '" + p.protocol_id + "' belongs to benchmark '" + p.benchmark + "'"});
    }
    if (entry.metric_name != p.metric_name) {
      out.push_back({ViolationKind::kSchema, "metric_name",
                     "protocol '" + p.protocol_id + "' reports '" + p.metric_name + "'"});
    }
    if (std::isfinite(entry.value) && (entry.value < p.min_value || entry.value > p.max_value)) {
      std::ostringstream msg;
      msg << "value " << entry.value << " outside [" << p.min_value << ", " << p.max_value << "]";
      out.push_back({ViolationKind::kRange, "value", msg.str()});
    }
  }

  for (const auto& other : accepted) {
    if (identity(other) == identity(entry)) {
      out.push_back({ViolationKind::kDuplicate, "entry",
                     "duplicate (model, benchmark, protocol_id, metric_name, source) for '" + entry.model + "'"});
      break;
    }
  }
  return out;
}

std::vector<Violation> validate_entries(const std::vector<LeaderboardEntry>& entries,
                                        const ProtocolRegistry& protocols) {
  std::vector<Violation> out;
  std::vector<LeaderboardEntry> accepted;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (auto v : validate_entry(entries[i], protocols, accepted)) {
      v.where = "entries[" + std::to_string(i) + "]." + v.where;
      out.push_back(std::move(v));
    }
    accepted.push_back(entries[i]);
  }
  return out;
}

std::map<std::uint32_t, CoverageBin> coverage_distribution(const std::vector<LeaderboardEntry>& entries) {
  std::map<std::string, std::set<std::string>> benchmarks;
  for (const auto& e : entries) benchmarks[e.model].insert(e.benchmark);
  if (benchmarks.empty()) throw EmptyRegistry("no leaderboard entries");
  std::map<std::uint32_t, CoverageBin> out;
  for (const auto& [model, set] : benchmarks) ++out[static_cast<std::uint32_t>(set.size())].count;
  const double total = static_cast<double>(benchmarks.size());
  for (auto& [k, bin] : out) bin.fraction = static_cast<double>(bin.count) / total;
  return out;
}

std::vector<RankedGroup> query(const std::vector<LeaderboardEntry>& entries, const ProtocolRegistry& protocols,
                               const QueryFilter& filter) {
  std::map<std::string, std::vector<LeaderboardEntry>> groups;
  for (const auto& e : entries) {
    const auto it = protocols.find(e.protocol_id);
    if (it == protocols.end()) continue;
    const std::string& group = it->second.comparability_group;
    if (filter.benchmark && e.benchmark != *filter.benchmark) continue;
    if (filter.model && e.model != *filter.model) continue;
    if (filter.group && group != *filter.group) continue;
    groups[group].push_back(e);
  }
  std::vector<RankedGroup> out;
  for (auto& [name, rows] : groups) {
    std::sort(rows.begin(), rows.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
      if (a.value != b.value) return a.value > b.value;
      return std::tie(a.model, a.source) < std::tie(b.model, b.source);
    });
    RankedGroup g{name, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) g.rows.push_back({static_cast<std::uint32_t>(i + 1), rows[i]});
    out.push_back(std::move(g));
  }
  return out;
}

Json to_json(const LeaderboardEntry& e) {
  Json j = {{"model", e.model},           {"benchmark", e.benchmark}, {"protocol_id", e.protocol_id},
            {"metric_name", e.metric_name}, {"value", e.value},         {"source", e.source},
            {"curated_by", to_string(e.curated_by)}};
  if (e.notes) j["notes"] = *e.notes;
  return j;
}

Json to_json(const std::vector<RankedGroup>& groups) {
  Json out = Json::array();
  for (const auto& g : groups) {
    Json rows = Json::array();
    for (const auto& r : g.rows) {
      Json row = to_json(r.entry);
      row["rank"] = r.rank;
      rows.push_back(std::move(row));
    }
    out.push_back({{"comparability_group", g.comparability_group}, {"rows", std::move(rows)}});
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_value(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

std::string query_csv(const std::vector<RankedGroup>& groups) {
  std::ostringstream out;
  out << "comparability_group,rank,model,benchmark,protocol_id,metric_name,value,source,curated_by\n";
  for (const auto& g : groups) {
    for (const auto& r : g.rows) {
      const auto& e = r.entry;
      out << csv_field(g.comparability_group) << "," << r.rank << "," << csv_field(e.model) << ","
          << csv_field(e.benchmark) << "," << csv_field(e.protocol_id) << "," << csv_field(e.metric_name) << ","
          << format_value(e.value) << "," << csv_field(e.source) << "," << to_string(e.curated_by) << "\n";
    }
  }
  return out.str();
}

std::string query_table(const std::vector<RankedGroup>& groups) {
  std::ostringstream out;
  for (const auto& g : groups) {
    std::size_t model_w = 5, metric_w = 6;
    for (const auto& r : g.rows) {
      model_w = std::max(model_w, r.entry.model.size());
      metric_w = std::max(metric_w, r.entry.metric_name.size());
    }
    out << "== " << g.comparability_group << " ==\n";
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - std::min(w, s.size()), ' '); };
    out << pad("rank", 5) << pad("model", model_w + 2) << pad("metric", metric_w + 2) << pad("value", 10) << "source\n";
    for (const auto& r : g.rows) {
      out << pad(std::to_string(r.rank), 5) << pad(r.entry.model, model_w + 2) << pad(r.entry.metric_name, metric_w + 2)
          << pad(format_value(r.entry.value), 10) << r.entry.source << "\n";
    }
  }
  return out.str();
}

namespace {

Json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaViolation(file.string(), "cannot read file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaViolation(file.string(), std::string("invalid JSON: ") + e.what());
  }
}

LeaderboardEntry entry_from_json(const Json& doc, const std::string& path) {
  if (!doc.is_object()) throw SchemaViolation(path, "expected an object");
  ParamReader r(doc, path);
  LeaderboardEntry e;
  e.model = r.string("model");
  e.benchmark = r.string("benchmark");
  e.protocol_id = r.string("protocol_id");
  e.metric_name = r.string("metric_name");
  e.value = r.number("value");
  e.source = r.string("source");
  const std::string who = r.string("curated_by");
  const auto parsed = parse_curated_by(who);
  if (!parsed) throw SchemaViolation(r.child_path("curated_by"), "expected agent, human or harness");
  e.curated_by = *parsed;
  if (r.has("notes")) e.notes = r.string("notes");
  r.finish();
  return e;
}

}  // namespace

ProtocolRegistry protocols_from_json(const Json& doc, const std::string& path) {
  ParamReader top(doc, path);
  const Json* list = top.raw("protocols");
  top.finish();
  if (list == nullptr || !list->is_array()) throw SchemaViolation(path + ".protocols", "expected a list");
  ProtocolRegistry out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string at = path + ".protocols[" + std::to_string(i) + "]";
    if (!(*list)[i].is_object()) throw SchemaViolation(at, "expected an object");
    ParamReader r((*list)[i], at);
    CanonicalProtocol p;
    p.protocol_id = r.string("protocol_id");
    p.benchmark = r.string("benchmark");
    p.metric_name = r.string("metric_name");
    const auto range = r.numbers("value_range");
    if (range.size() != 2 || !(range[0] < range[1])) {
      throw SchemaViolation(r.child_path("value_range"), "expected [min, max] with min < max");
    }
    p.min_value = range[0];
    p.max_value = range[1];
    p.comparability_group = r.string("comparability_group");
    r.finish();
    if (p.protocol_id.empty()) throw SchemaViolation(r.child_path("protocol_id"), "must be non-empty");
    if (!out.emplace(p.protocol_id, p).second) {
      throw SchemaViolation(r.child_path("protocol_id"), "duplicate protocol '" + p.protocol_id + "'");
    }
  }
  return out;
}

Registry load_registry(const fs::path& dir) {
  Registry reg;
  const fs::path protocols = dir / "protocols.json";
  reg.protocols = protocols_from_json(read_json(protocols), protocols.string());

  std::vector<fs::path> files;
  const fs::path entries_dir = dir / "entries";
  if (fs::is_directory(entries_dir)) {
    for (const auto& f : fs::directory_iterator(entries_dir)) {
      if (f.is_regular_file() && f.path().extension() == ".json") files.push_back(f.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const std::string name = file.filename().string();
    Json doc;
    try {
      doc = read_json(file);
    } catch (const SchemaViolation& e) {
      reg.load_violations.push_back({ViolationKind::kSchema, name, e.what()});
      continue;
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array() || doc.size() != 1) {
      reg.load_violations.push_back({ViolationKind::kSchema, name, "expected {\"entries\": [...]}"});
      continue;
    }
    const Json& list = doc["entries"];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = name + ":entries[" + std::to_string(i) + "]";
      try {
        reg.entries.push_back(entry_from_json(list[i], at));
        reg.origins.push_back(at);
      } catch (const SchemaViolation& e) {
        reg.load_violations.push_back({ViolationKind::kSchema, at, e.what()});
      }
    }
  }
  return reg;
}

}  // namespace vlaeval
