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
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vlaeval/params.hpp"

namespace vlaeval {

enum class CuratedBy { kAgent, kHuman, kHarness };

std::string_view to_string(CuratedBy who);
std::optional<CuratedBy> parse_curated_by(std::string_view name);

struct LeaderboardEntry {
  std::string model;
  std::string benchmark;
  std::string protocol_id;
  std::string metric_name;
  double value = 0.0;
  std::string source;
  CuratedBy curated_by = CuratedBy::kHuman;
  std::optional<std::string> notes;

  friend bool operator==(const LeaderboardEntry&, const LeaderboardEntry&) = default;
};

struct CanonicalProtocol {
  std::string protocol_id;
  std::string benchmark;
  std::string metric_name;
  double min_value = 0.0;
  double max_value = 100.0;
  std::string comparability_group;
};

using ProtocolRegistry = std::map<std::string, CanonicalProtocol>;

enum class ViolationKind { kSchema, kUnknownProtocol, kRange, kDuplicate };

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string where;  // file and entry index, or field
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Checks one entry against the protocols and the entries accepted so far.
// Never throws.
std::vector<Violation> validate_entry(const LeaderboardEntry& entry, const ProtocolRegistry& protocols,
                                      const std::vector<LeaderboardEntry>& accepted = {});

// Validates entries in order; each one is checked against those before it.
std::vector<Violation> validate_entries(const std::vector<LeaderboardEntry>& entries,
                                        const ProtocolRegistry& protocols);

class EmptyRegistry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CoverageBin {
  std::uint64_t count = 0;
  double fraction = 0.0;

  friend bool operator==(const CoverageBin&, const CoverageBin&) = default;
};

// k -> models evaluated on exactly k distinct benchmarks.
std::map<std::uint32_t, CoverageBin> coverage_distribution(const std::vector<LeaderboardEntry>& entries);

struct QueryFilter {
  std::optional<std::string> benchmark = std::nullopt;
  std::optional<std::string> model = std::nullopt;
  std::optional<std::string> group = std::nullopt;
};

struct RankedRow {
  std::uint32_t rank = 0;  // 1-based within the group
  LeaderboardEntry entry;
};

struct RankedGroup {
  std::string comparability_group;
  std::vector<RankedRow> rows;
};

// Groups ascending by name; rows by value descending, then model, then source.
// Entries with unknown protocols are skipped.
std::vector<RankedGroup> query(const std::vector<LeaderboardEntry>& entries, const ProtocolRegistry& protocols,
                               const QueryFilter& filter = {});

Json to_json(const LeaderboardEntry& entry);
Json to_json(const std::vector<RankedGroup>& groups);
std::string query_csv(const std::vector<RankedGroup>& groups);
std::string query_table(const std::vector<RankedGroup>& groups);

// On-disk registry: <dir>/protocols.json plus <dir>/entries/*.json, one file
// per source, each {"entries": [...]}. Malformed entries become kSchema
// violations; an unreadable or malformed protocols.json throws SchemaViolation.
struct Registry {
  ProtocolRegistry protocols;
  std::vector<LeaderboardEntry> entries;
  std::vector<std::string> origins;  // "<file>:entries[i]", parallel to entries
  std::vector<Violation> load_violations;
};

Registry load_registry(const std::filesystem::path& dir);
ProtocolRegistry protocols_from_json(const Json& doc, const std::string& path = "protocols");

}  // namespace vlaeval
