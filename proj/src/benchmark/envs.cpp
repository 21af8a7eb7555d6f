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

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "vlaeval/benchmark.hpp"

namespace vlaeval {
namespace {

using Vec3 = std::array<double, 3>;

constexpr std::size_t kActionDim = 7;
constexpr std::size_t kSubgoals = 5;

double distance(const Vec3& a, const Vec3& b) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// mt19937_64 with an explicit [0, 1) mapping so draws do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view task_id) : engine_(seed ^ fnv1a(task_id)) {}
  double unit() { return std::ldexp(static_cast<double>(engine_() >> 11), -53); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  std::mt19937_64 engine_;
};

struct CommonParams {
  double delta = 0.05;
  double step_cost_ms = 0.0;
  std::uint32_t image_size = 64;
  std::size_t state_dim = 7;

  static CommonParams read(ParamReader& p) {
    CommonParams c;
    c.delta = p.number("delta", c.delta);
    if (!(c.delta > 0.0)) throw SchemaViolation(p.child_path("delta"), "must be > 0");
    c.step_cost_ms = p.number("step_cost_ms", c.step_cost_ms);
    if (c.step_cost_ms < 0.0) throw SchemaViolation(p.child_path("step_cost_ms"), "must be >= 0");
    const auto size = p.unsigned_int("image_size", c.image_size);
    if (size < 8 || size > 1024) throw SchemaViolation(p.child_path("image_size"), "must lie in [8, 1024]");
    c.image_size = static_cast<std::uint32_t>(size);
    c.state_dim = p.unsigned_int("state_dim", c.state_dim);
    if (c.state_dim < 7) throw SchemaViolation(p.child_path("state_dim"), "must be >= 7");
    return c;
  }
};

// Point-mass reaching with a seeded goal. The variants override the goal
// schedule and the success judgement.
class ReachEnv : public StepBenchmark {
 public:
  ReachEnv(const BenchmarkConfig& config, ParamReader& params)
      : tasks_(config.tasks), normalize_(config.normalize), stats_(config.normalization_stats),
        common_(CommonParams::read(params)) {
    if (normalize_ && !stats_) throw MissingNormalizationStats("normalize is true but no statistics were supplied");
    if (stats_) stats_->validate(common_.state_dim, "benchmark.normalization_stats");
  }

  ObservationPayload reset(const std::string& task_id, std::uint64_t seed) override {
    const TaskSpec* task = nullptr;
    for (const auto& t : tasks_) {
      if (t.task_id == task_id) task = &t;
    }
    if (task == nullptr) throw UnknownTask("unknown task '" + task_id + "'");
    task_ = *task;
    Rng rng(seed, task_id);
    pos_ = {0.0, 0.0, 0.0};
    for (double& g : goal_) g = rng.uniform(-0.5, 0.5);
    on_reset(rng);
    scene_.assign(common_.state_dim - first_scene_index(), 0.0);
    for (double& s : scene_) s = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    active_ = true;
    return make_obs();
  }

  void step(std::span<const double> action) override {
    if (!active_) throw std::logic_error("step() called before reset()");
    if (action.size() != kActionDim) {
      throw BadActionShape("expected " + std::to_string(kActionDim) + " action entries, got " +
                           std::to_string(action.size()));
    }
    for (double a : action) {
      if (!std::isfinite(a)) throw BadActionShape("action contains a non-finite entry");
    }
    for (int k = 0; k < 3; ++k) pos_[k] += std::clamp(action[k], -common_.delta, common_.delta);
    ++steps_;
    after_step();
    if (common_.step_cost_ms > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(common_.step_cost_ms));
    }
  }

  ObservationPayload make_obs() const override {
    ObservationPayload obs;
    obs.task_description = task_.task_description;
    std::vector<double> raw(common_.state_dim, 0.0);
    for (int k = 0; k < 3; ++k) {
      raw[k] = goal_[k] - pos_[k];
      raw[3 + k] = pos_[k];
    }
    const std::size_t first = first_scene_index();
    fill_extra_states(raw);
    std::copy(scene_.begin(), scene_.end(), raw.begin() + static_cast<std::ptrdiff_t>(first));
    if (normalize_) {
      if (!stats_) throw MissingNormalizationStats("normalize is true but no statistics were supplied");
      obs.states = stats_->normalize(raw);
    } else {
      obs.states = std::move(raw);
    }
    obs.images["primary"] = render();
    return obs;
  }

  StepResult get_step_result() const override {
    StepResult r;
    r.obs = make_obs();
    r.success_event = success_now();
    r.terminated = terminated_now(r.success_event);
    r.truncated = steps_ >= task_.max_episode_steps;
    r.info = {{"distance", Value(distance(pos_, goal_))}, {"step", Value(steps_)}};
    add_info(r.info);
    return r;
  }

  std::size_t action_dim() const override { return kActionDim; }
  std::size_t state_dim() const override { return common_.state_dim; }
  std::uint64_t steps_taken() const override { return steps_; }

 protected:
  virtual void on_reset(Rng&) {}
  virtual void after_step() {}
  virtual bool success_now() const { return distance(pos_, goal_) <= task_.success_tolerance; }
  virtual bool terminated_now(bool success) const { return success; }
  virtual std::size_t first_scene_index() const { return 6; }
  virtual void fill_extra_states(std::vector<double>&) const {}
  virtual void add_info(Value::Object&) const {}

  Image render() const {
    const std::uint32_t n = common_.image_size;
    Image img{n, n, 3, Bytes(static_cast<std::size_t>(n) * n * 3, 0)};
    auto to_px = [n](double x) {
      const double u = (x + 0.75) / 1.5;
      return static_cast<std::int64_t>(std::floor(std::clamp(u, 0.0, 1.0) * (n - 1)));
    };
    auto mark = [&](const Vec3& p, std::size_t channel) {
      const std::int64_t cx = to_px(p[0]), cy = to_px(p[1]);
      for (std::int64_t y = cy - 1; y <= cy + 1; ++y) {
        for (std::int64_t x = cx - 1; x <= cx + 1; ++x) {
          if (x < 0 || y < 0 || x >= n || y >= n) continue;
          img.pixels[(static_cast<std::size_t>(y) * n + static_cast<std::size_t>(x)) * 3 + channel] = 255;
        }
      }
    };
    // Dark blue floor, goal in red, agent in green.
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) img.pixels[i + 2] = 40;
    mark(goal_, 0);
    mark(pos_, 1);
    return img;
  }

  std::vector<TaskSpec> tasks_;
  bool normalize_;
  std::optional<NormalizationStats> stats_;
  CommonParams common_;
  TaskSpec task_;
  Vec3 pos_{};
  Vec3 goal_{};
  std::vector<double> scene_;
  std::uint64_t steps_ = 0;
  bool active_ = false;
};

class PointReach : public ReachEnv {
 public:
  PointReach(const BenchmarkConfig& config, ParamReader& params) : ReachEnv(config, params) { params.finish(); }
  std::string_view name() const override { return "point_reach"; }
};

// The first success knocks the goal: from the next step on it slides away
// along a seeded direction and success can no longer be reported.
class TransientReach : public ReachEnv {
 public:
  TransientReach(const BenchmarkConfig& config, ParamReader& params) : ReachEnv(config, params) {
    slide_speed_ = params.number("slide_speed", 0.2);
    if (slide_speed_ < 0.0) throw SchemaViolation(params.child_path("slide_speed"), "must be >= 0");
    params.finish();
  }
  std::string_view name() const override { return "transient_reach"; }

 protected:
  void on_reset(Rng& rng) override {
    Vec3 d;
    double norm = 0.0;
    do {
      for (double& x : d) x = rng.uniform(-1.0, 1.0);
      norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    } while (norm < 1e-3);
    for (int k = 0; k < 3; ++k) direction_[k] = d[k] / norm;
    knocked_ = false;
    knock_step_ = 0;
  }

  void after_step() override {
    if (knocked_) {
      for (int k = 0; k < 3; ++k) goal_[k] += slide_speed_ * direction_[k];
    } else if (distance(pos_, goal_) <= task_.success_tolerance) {
      knocked_ = true;
      knock_step_ = steps_;
    }
  }

  bool success_now() const override { return knocked_ && steps_ == knock_step_; }

  void add_info(Value::Object& info) const override { info.emplace_back("knocked", Value(knocked_)); }

 private:
  double slide_speed_ = 0.2;
  Vec3 direction_{};
  bool knocked_ = false;
  std::uint64_t knock_step_ = 0;
};

// Five sub-goals in sequence, each with max_episode_steps / 5 steps of
// budget. An exhausted budget fails that sub-goal and moves on.
class Chained : public ReachEnv {
 public:
  Chained(const BenchmarkConfig& config, ParamReader& params) : ReachEnv(config, params) {
    offset_ = params.number("subgoal_offset", 0.25);
    if (offset_ < 0.0) throw SchemaViolation(params.child_path("subgoal_offset"), "must be >= 0");
    params.finish();
  }
  std::string_view name() const override { return "chained"; }

  std::optional<std::uint32_t> chained_subtask_progress() const override {
    std::uint32_t n = 0;
    while (n < kSubgoals && reached_[n]) ++n;
    return n;
  }

 protected:
  void on_reset(Rng& rng) override {
    goals_[0] = goal_;
    for (std::size_t j = 1; j < kSubgoals; ++j) {
      for (int k = 0; k < 3; ++k) goals_[j][k] = goals_[j - 1][k] + rng.uniform(-offset_, offset_);
    }
    reached_.fill(false);
    subtask_ = 0;
    subtask_start_ = 0;
  }

  void after_step() override {
    if (subtask_ >= kSubgoals) return;
    const std::uint64_t budget = std::max<std::uint64_t>(1, task_.max_episode_steps / kSubgoals);
    if (distance(pos_, goal_) <= task_.success_tolerance) {
      reached_[subtask_] = true;
      advance();
    } else if (steps_ - subtask_start_ >= budget) {
      advance();
    }
  }

  bool success_now() const override { return chained_subtask_progress() == kSubgoals; }
  bool terminated_now(bool) const override { return subtask_ >= kSubgoals; }

  void fill_extra_states(std::vector<double>& raw) const override { raw[6] = static_cast<double>(subtask_); }
  std::size_t first_scene_index() const override { return 7; }

  void add_info(Value::Object& info) const override {
    info.emplace_back("subtask", Value(static_cast<std::int64_t>(subtask_)));
    info.emplace_back("chain_progress", Value(static_cast<std::int64_t>(*chained_subtask_progress())));
  }

 private:
  void advance() {
    ++subtask_;
    subtask_start_ = steps_;
    // Past the last sub-goal the agent idles at its final target.
    if (subtask_ < kSubgoals) goal_ = goals_[subtask_];
  }

  double offset_ = 0.25;
  std::array<Vec3, kSubgoals> goals_{};
  std::array<bool, kSubgoals> reached_{};
  std::size_t subtask_ = 0;
  std::uint64_t subtask_start_ = 0;
};

// Delegates to an inner benchmark and throws EnvCrash on the step that
// follows crash_at_step completed steps of the listed episodes.
class FaultInjection : public StepBenchmark {
 public:
  FaultInjection(const BenchmarkConfig& config, ParamReader& params) : base_seed_(config.base_seed) {
    BenchmarkConfig inner = config;
    inner.name = params.string("inner", "point_reach");
    if (inner.name == "fault_injection") throw SchemaViolation(params.child_path("inner"), "cannot nest fault_injection");
    const Json* inner_params = params.raw("inner_params");
    inner.params = inner_params ? *inner_params : Json::object();
    for (auto e : params.unsigned_ints("crash_episodes", std::vector<std::uint64_t>{})) crash_episodes_.insert(e);
    crash_at_step_ = params.unsigned_int("crash_at_step", 10);
    params.finish();
    inner_ = make_benchmark(inner);
  }

  std::string_view name() const override { return "fault_injection"; }

  ObservationPayload reset(const std::string& task_id, std::uint64_t seed) override {
    armed_ = seed >= base_seed_ && crash_episodes_.count(seed - base_seed_) > 0;
    return inner_->reset(task_id, seed);
  }

  void step(std::span<const double> action) override {
    if (armed_ && inner_->steps_taken() >= crash_at_step_) {
      throw EnvCrash("injected crash after " + std::to_string(inner_->steps_taken()) + " steps");
    }
    inner_->step(action);
  }

  ObservationPayload make_obs() const override { return inner_->make_obs(); }
  StepResult get_step_result() const override { return inner_->get_step_result(); }
  std::optional<std::uint32_t> chained_subtask_progress() const override { return inner_->chained_subtask_progress(); }
  std::size_t action_dim() const override { return inner_->action_dim(); }
  std::size_t state_dim() const override { return inner_->state_dim(); }
  std::uint64_t steps_taken() const override { return inner_->steps_taken(); }

 private:
  std::uint64_t base_seed_;
  std::set<std::uint64_t> crash_episodes_;
  std::uint64_t crash_at_step_ = 10;
  bool armed_ = false;
  std::unique_ptr<StepBenchmark> inner_;
};

}  // namespace

std::vector<std::string> builtin_benchmark_names() {
  return {"point_reach", "transient_reach", "chained", "fault_injection"};
}

std::unique_ptr<StepBenchmark> make_benchmark(const BenchmarkConfig& config) {
  if (config.tasks.empty()) throw SchemaViolation("benchmark.tasks", "expected a non-empty list of tasks");
  ParamReader params(config.params, "benchmark.params");
  if (config.name == "point_reach") return std::make_unique<PointReach>(config, params);
  if (config.name == "transient_reach") return std::make_unique<TransientReach>(config, params);
  if (config.name == "chained") return std::make_unique<Chained>(config, params);
  if (config.name == "fault_injection") return std::make_unique<FaultInjection>(config, params);
  throw SchemaViolation("benchmark.name", "unknown benchmark '" + config.name + "'");
}

}  // namespace vlaeval
