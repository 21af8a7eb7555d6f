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

#include <CLI11.hpp>

#include <signal.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>

#include "vlaeval/config.hpp"
#include "vlaeval/leaderboard.hpp"
#include "vlaeval/throughput.hpp"

namespace vlaeval {
namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfigError = 2;

[[noreturn]] void fail(int code, const std::string& message) {
  std::cerr << "vla-eval: " << message << "\n";
  std::exit(code);
}

// "30s", "500ms", "2m" or plain seconds.
std::chrono::duration<double> parse_duration(const std::string& text) {
  static const std::regex pattern(R"(^\s*([0-9]+(?:\.[0-9]+)?)\s*(ms|s|m)?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw std::invalid_argument("bad duration '" + text + "'");
  const double value = std::stod(m[1]);
  const std::string unit = m[2];
  if (unit == "ms") return std::chrono::duration<double>(value / 1000.0);
  if (unit == "m") return std::chrono::duration<double>(value * 60.0);
  return std::chrono::duration<double>(value);
}

std::vector<std::uint64_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const auto v = std::stoull(item, &used);
    if (used != item.size() || v == 0) throw std::invalid_argument(std::string("bad ") + what + " entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + " is empty");
  return out;
}

// ---- serve

int cmd_serve(const std::string& config_path) {
  ModelServerConfig config;
  try {
    config = load_model_server_config(config_path);
  } catch (const std::exception& e) {
    fail(kExitConfigError, e.what());
  }
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  // Block before any thread starts so only sigwait sees them.
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<ServerHandle> server;
  try {
    server = std::make_unique<ServerHandle>(config);
  } catch (const BindFailure& e) {
    fail(kExitRunFailure, e.what());
  } catch (const std::exception& e) {
    fail(kExitConfigError, e.what());
  }
  std::cout << "serving " << config.policy.name << " on " << server->endpoint().url() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  std::cout << "received " << (sig == SIGTERM ? "SIGTERM" : "SIGINT") << ", draining" << std::endl;
  server->stop();
  const auto stats = server->model().stats();
  std::cout << "served " << stats.requests_completed << " requests in " << stats.batches << " batches" << std::endl;
  return kExitOk;
}

// ---- run

void print_plan(const EvalConfig& config) {
  const auto plan = plan_shards(config.benchmark, config.run.shards);
  std::cout << "benchmark " << config.benchmark.name << ": " << config.benchmark.tasks.size() << " tasks x "
            << config.benchmark.episodes_per_task << " episodes = " << plan.total_episodes() << " episodes\n";
  std::cout << "termination_policy " << to_string(config.benchmark.termination_policy) << ", server "
            << config.run.server_endpoint << "\n";
  for (std::size_t i = 0; i < plan.shards.size(); ++i) {
    std::cout << "  shard " << i << ": " << plan.shards[i].size() << " episodes\n";
  }
  std::cout << "config_hash " << config.provenance.config_hash << "\n";
}

void print_metrics(const AggregateMetrics& m) {
  std::cout << std::left << std::setw(28) << "task" << std::right << std::setw(10) << "episodes" << std::setw(10)
            << "success" << std::setw(8) << "infra" << std::setw(10) << "rate" << "\n";
  std::cout << std::fixed << std::setprecision(3);
  for (const auto& [task, t] : m.per_task) {
    std::cout << std::left << std::setw(28) << task << std::right << std::setw(10) << t.episodes << std::setw(10)
              << t.succeeded << std::setw(8) << t.failed_infra << std::setw(10) << t.success_rate << "\n";
  }
  std::cout << std::left << std::setw(28) << "suite" << std::right << std::setw(10) << m.episodes_total
            << std::setw(10) << m.succeeded << std::setw(8) << m.failed_infra << std::setw(10) << m.suite_success_rate
            << "\n";
  if (m.avg_chain_length) std::cout << "avg_chain_length " << *m.avg_chain_length << "\n";
  std::cout << "wall_time_s " << m.wall_time_s << ", obs_per_s " << m.obs_per_s << "\n";
  std::cout << std::defaultfloat;
}

// Handshake probe; returns the server's reported config or null.
Json probe_server(const Endpoint& endpoint) {
  Connection conn(connect_websocket(endpoint, Millis(5000)));
  const Message reply = conn.handshake("runner", Millis(5000));
  conn.close();
  const Value* text = find_key(reply.payload, "server_config");
  if (text == nullptr || !text->is_string()) return nullptr;
  try {
    return Json::parse(text->as_string());
  } catch (const Json::parse_error&) {
    return nullptr;
  }
}

bool chain_mode(const std::vector<EpisodeResult>& results) {
  return std::any_of(results.begin(), results.end(), [](const EpisodeResult& r) { return r.chain_length.has_value(); });
}

struct RunOutcome {
  ResultRecord record;
  AggregateMetrics metrics;
  bool connection_lost = false;
};

RunOutcome execute(const EvalConfig& config, const Endpoint& endpoint, Json server_config) {
  RunOutcome out;
  out.record.eval_config = to_json(config);
  out.record.model_server_config = std::move(server_config);
  out.record.started_at = utc_timestamp();
  ShardedRunOptions options;
  options.container_cmd = config.run.container_cmd;
  options.step_timeout = config.run.step_timeout();
  const ShardedRun run = run_sharded(config.benchmark, config.run.shards, endpoint, options);
  out.record.finished_at = utc_timestamp();
  out.record.episodes = run.results;
  out.metrics = aggregate(run.results, chain_mode(run.results), run.wall_time_s);
  out.metrics.obs_per_s = run.wall_time_s > 0 ? static_cast<double>(run.observations) / run.wall_time_s : 0.0;
  out.record.metrics = to_json(out.metrics, true);
  out.connection_lost = run.connection_lost;
  return out;
}

fs::path default_out_dir(const EvalConfig& config) {
  const char* env = std::getenv("VLA_EVAL_OUT");
  const fs::path root = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("results");
  std::string stamp = utc_timestamp();
  stamp.erase(std::remove_if(stamp.begin(), stamp.end(), [](char c) { return c == ':' || c == '-'; }), stamp.end());
  return root / (config.benchmark.name + "-" + config.provenance.config_hash.substr(0, 12) + "-" + stamp);
}

int cmd_run(const std::string& config_path, bool dry_run, const std::string& out_dir) {
  EvalConfig config;
  Endpoint endpoint;
  try {
    config = load_eval_config(config_path);
    endpoint = Endpoint::parse(config.run.server_endpoint);
  } catch (const std::exception& e) {
    fail(kExitConfigError, e.what());
  }
  if (dry_run) {
    print_plan(config);
    return kExitOk;
  }
  Json server_config;
  try {
    server_config = probe_server(endpoint);
  } catch (const std::exception& e) {
    fail(kExitRunFailure, "model server at " + endpoint.url() + " is not reachable: " + e.what());
  }

  RunOutcome outcome = execute(config, endpoint, std::move(server_config));
  const fs::path dir = out_dir.empty() ? default_out_dir(config) : fs::path(out_dir);
  write_result_record(outcome.record, dir);
  print_metrics(outcome.metrics);
  std::cout << "result record: " << (dir / "result.json").string() << "\n";

  if (outcome.connection_lost) {
    std::cerr << "vla-eval: lost the model server connection\n";
    return kExitRunFailure;
  }
  if (config.run.fail_on_infra && outcome.metrics.failed_infra > 0) {
    std::cerr << "vla-eval: " << outcome.metrics.failed_infra << " episodes failed for infrastructure reasons\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

// ---- reproduce

int cmd_reproduce(const std::string& record_path, const std::string& out_dir) {
  ResultRecord original;
  EvalConfig config;
  ModelServerConfig server_config;
  try {
    original = read_result_record(record_path);
    config = eval_config_from_json(original.eval_config);
    if (original.model_server_config.is_null()) throw SchemaViolation("model_server_config", "missing from record");
    server_config = model_server_config_from_json(original.model_server_config, "model_server_config");
  } catch (const std::exception& e) {
    fail(kExitConfigError, e.what());
  }
  if (original.harness_version != kHarnessVersion) {
    std::cerr << "vla-eval: record was written by harness " << original.harness_version << ", this is "
              << kHarnessVersion << "\n";
  }
  server_config.host = "127.0.0.1";
  server_config.port = 0;
  ServerHandle server(server_config);
  RunOutcome again = execute(config, server.endpoint(), to_json(server_config));
  server.stop();
  if (!out_dir.empty()) write_result_record(again.record, out_dir);

  const Json want = to_json(aggregate(original.episodes, chain_mode(original.episodes)), false);
  const Json got = to_json(aggregate(again.record.episodes, chain_mode(again.record.episodes)), false);
  bool same_episodes = original.episodes.size() == again.record.episodes.size();
  for (std::size_t i = 0; same_episodes && i < original.episodes.size(); ++i) {
    same_episodes = original.episodes[i].without_timing() == again.record.episodes[i].without_timing();
  }
  print_metrics(again.metrics);
  if (want != got || !same_episodes) {
    std::cout << "MISMATCH\nrecorded: " << want.dump() << "\nrerun:    " << got.dump() << "\n";
    return kExitRunFailure;
  }
  std::cout << "reproduced: metrics and " << original.episodes.size() << " episode results match\n";
  return kExitOk;
}

// ---- tune

int cmd_tune(const std::string& bench_path, const std::string& server_path, const std::string& ns,
             const std::string& bs, const std::string& duration_text, double headroom, const std::string& json_out,
             const std::string& csv_out) {
  BenchmarkConfig bench;
  ModelServerConfig server;
  std::vector<std::uint64_t> n_list, b_list;
  std::chrono::duration<double> duration{};
  try {
    Json doc = load_document(bench_path);
    if (doc.is_object() && doc.contains("benchmark")) doc = doc["benchmark"];
    bench = benchmark_config_from_json(doc);
    server = load_model_server_config(server_path);
    n_list = parse_list(ns, "--Ns");
    b_list = parse_list(bs, "--Bs");
    duration = parse_duration(duration_text);
    if (!(headroom > 0.0 && headroom < 1.0)) throw std::invalid_argument("--headroom must lie in (0, 1)");
  } catch (const std::exception& e) {
    fail(kExitConfigError, e.what());
  }

  ThroughputProfile profile;
  profile.measurement_duration_s = duration.count();
  const Measurement lambda = measure_lambda(bench, n_list, duration);
  const Measurement mu = measure_mu(server, b_list, duration);
  profile.lambda_samples = lambda.samples;
  profile.mu_samples = mu.samples;

  Json report = {{"profile", to_json(profile)}, {"operating_point", nullptr}};
  Json failures = Json::object();
  for (const auto& [n, why] : lambda.failures) failures["lambda/" + std::to_string(n)] = why;
  for (const auto& [b, why] : mu.failures) failures["mu/" + std::to_string(b)] = why;
  report["failures"] = failures;
  int code = kExitOk;
  try {
    const OperatingPoint op = select_operating_point(profile, headroom);
    report["operating_point"] = to_json(op);
  } catch (const std::exception& e) {
    report["error"] = e.what();
    code = kExitRunFailure;
  }
  std::cout << report.dump(2) << "\n";
  if (!json_out.empty()) std::ofstream(json_out) << report.dump(2) << "\n";
  if (!csv_out.empty()) std::ofstream(csv_out) << profile_csv(profile);
  return code;
}

// ---- board

int cmd_board_validate(const std::string& dir) {
  Registry reg;
  try {
    reg = load_registry(dir);
  } catch (const std::exception& e) {
    fail(kExitConfigError, e.what());
  }
  std::size_t problems = 0;
  for (const auto& v : reg.load_violations) {
    std::cout << v.where << ": " << to_string(v.kind) << ": " << v.message << "\n";
    ++problems;
  }
  std::vector<LeaderboardEntry> accepted;
  for (std::size_t i = 0; i < reg.entries.size(); ++i) {
    for (const auto& v : validate_entry(reg.entries[i], reg.protocols, accepted)) {
      std::cout << reg.origins[i] << "." << v.where << ": " << to_string(v.kind) << ": " << v.message << "\n";
      ++problems;
    }
    accepted.push_back(reg.entries[i]);
  }
  std::cout << reg.entries.size() << " entries, " << reg.protocols.size() << " protocols, " << problems
            << " violations\n";
  return problems == 0 ? kExitOk : kExitRunFailure;
}

int cmd_board_query(const std::string& dir, const QueryFilter& filter, const std::string& format) {
  Registry reg;
  try {
    reg = load_registry(dir);
  } catch (const std::exception& e) {
    fail(kExitConfigError, e.what());
  }
  const auto groups = query(reg.entries, reg.protocols, filter);
  if (format == "csv") {
    std::cout << query_csv(groups);
  } else if (format == "json") {
    std::cout << to_json(groups).dump(2) << "\n";
  } else {
    std::cout << query_table(groups);
  }
  return kExitOk;
}

int cmd_board_coverage(const std::string& dir) {
  Registry reg;
  try {
    reg = load_registry(dir);
  } catch (const std::exception& e) {
    fail(kExitConfigError, e.what());
  }
  try {
    std::cout << "benchmarks,models,fraction\n";
    for (const auto& [k, bin] : coverage_distribution(reg.entries)) {
      std::cout << k << "," << bin.count << "," << bin.fraction << "\n";
    }
  } catch (const EmptyRegistry& e) {
    fail(kExitRunFailure, e.what());
  }
  return kExitOk;
}

}  // namespace
}  // namespace vlaeval

int main(int argc, char** argv) {
  using namespace vlaeval;
  CLI::App app{"vla-eval: evaluation harness for action-chunking policies"};
  app.require_subcommand(1);

  std::string config, out, bench_config, server_config, ns = "1,2,4", bs = "1,2,4", duration = "30s", json_out,
                                                        csv_out, record, dir, format = "table";
  bool dry_run = false;
  double headroom = 0.8;
  QueryFilter filter;
  std::string benchmark, model, group;

  auto* serve = app.add_subcommand("serve", "run a model server until SIGINT/SIGTERM");
  serve->add_option("--config", config, "model server config")->required();

  auto* run = app.add_subcommand("run", "evaluate a benchmark against a running model server");
  run->add_option("--config", config, "benchmark config")->required();
  run->add_flag("--dry-run", dry_run, "print the shard plan and exit");
  run->add_option("--out", out, "result directory (default $VLA_EVAL_OUT or ./results)");

  auto* reproduce = app.add_subcommand("reproduce", "re-run a result record and compare metrics");
  reproduce->add_option("record", record, "result.json")->required();
  reproduce->add_option("--out", out, "write the rerun's record here");

  auto* tune = app.add_subcommand("tune", "measure demand and supply curves and pick an operating point");
  tune->add_option("--bench-config", bench_config, "benchmark config")->required();
  tune->add_option("--server-config", server_config, "model server config")->required();
  tune->add_option("--Ns", ns, "shard counts, comma separated");
  tune->add_option("--Bs", bs, "batch sizes, comma separated");
  tune->add_option("--duration", duration, "per-sample measurement time, e.g. 30s");
  tune->add_option("--headroom", headroom, "utilization ceiling");
  tune->add_option("--json", json_out, "also write the report here");
  tune->add_option("--csv", csv_out, "plot-ready curves");

  auto* board = app.add_subcommand("board", "leaderboard registry tools");
  board->require_subcommand(1);
  auto* validate = board->add_subcommand("validate", "check every entry");
  validate->add_option("dir", dir, "registry directory")->required();
  auto* board_query = board->add_subcommand("query", "ranked tables per comparability group");
  board_query->add_option("dir", dir, "registry directory")->required();
  board_query->add_option("--benchmark", benchmark);
  board_query->add_option("--model", model);
  board_query->add_option("--group", group);
  board_query->add_option("--out", format, "table, csv or json")->check(CLI::IsMember({"table", "csv", "json"}));
  auto* coverage = board->add_subcommand("coverage", "models per number of benchmarks");
  coverage->add_option("dir", dir, "registry directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*serve) return cmd_serve(config);
  if (*run) return cmd_run(config, dry_run, out);
  if (*reproduce) return cmd_reproduce(record, out);
  if (*tune) return cmd_tune(bench_config, server_config, ns, bs, duration, headroom, json_out, csv_out);
  if (*validate) return cmd_board_validate(dir);
  if (*board_query) {
    if (!benchmark.empty()) filter.benchmark = benchmark;
    if (!model.empty()) filter.model = model;
    if (!group.empty()) filter.group = group;
    return cmd_board_query(dir, filter, format);
  }
  if (*coverage) return cmd_board_coverage(dir);
  return 2;
}
