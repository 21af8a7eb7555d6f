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
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vlaeval {

// T x D block of future actions, row-major. Row i is the action planned for
// step issued_step + i.
struct ActionChunk {
  std::size_t horizon = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  std::uint64_t issued_step = 0;

  ActionChunk() = default;
  ActionChunk(std::size_t horizon, std::size_t dim, std::uint64_t issued_step = 0);
  // horizon copies of one action.
  static ActionChunk repeat(std::span<const double> action, std::size_t horizon, std::uint64_t issued_step = 0);

  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }
  bool covers(std::uint64_t step) const { return step >= issued_step && step < issued_step + horizon; }
  // T >= 1, D >= 1, size consistent, every entry finite.
  bool valid() const;

  friend bool operator==(const ActionChunk&, const ActionChunk&) = default;
};

enum class EnsembleKind { kNewest, kAverage, kEma };

std::string_view to_string(EnsembleKind kind);
EnsembleKind parse_ensemble_kind(std::string_view name);  // throws std::invalid_argument

struct EnsembleStrategy {
  EnsembleKind kind = EnsembleKind::kEma;
  double alpha = 0.5;  // used only by kEma, must lie in (0, 1]

  static EnsembleStrategy newest() { return {EnsembleKind::kNewest, 0.5}; }
  static EnsembleStrategy average() { return {EnsembleKind::kAverage, 0.5}; }
  static EnsembleStrategy ema(double alpha);  // throws std::invalid_argument
};

class EmptyBuffer : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Chunks that still have a row for the current step, oldest first.
class ChunkBuffer {
 public:
  explicit ChunkBuffer(std::size_t max_chunks);

  std::uint64_t current_step() const { return current_step_; }
  std::size_t size() const { return chunks_.size(); }
  bool empty() const { return chunks_.empty(); }
  std::size_t max_chunks() const { return max_chunks_; }

  // Moves to a later step and drops chunks whose horizon no longer covers it.
  void advance_to(std::uint64_t step);
  // Requires chunk.issued_step == current_step(). Drops stale chunks, then the
  // oldest ones beyond max_chunks.
  void push(ActionChunk chunk);
  void clear(std::uint64_t step = 0);

  // Rows proposed for the current step, newest chunk first.
  std::vector<std::span<const double>> candidates() const;

 private:
  void evict();

  std::size_t max_chunks_;
  std::uint64_t current_step_ = 0;
  std::deque<ActionChunk> chunks_;
};

// Normalized weights for count candidates, index 0 = newest.
std::vector<double> ensemble_weights(std::size_t count, const EnsembleStrategy& strategy);

// Newest: row of the newest chunk. Average: arithmetic mean of all rows.
// EMA: sum_j w_j a_j with w_j proportional to (1 - alpha)^j, j = 0 newest.
// Throws EmptyBuffer when nothing covers the current step.
std::vector<double> ensemble_action(const ChunkBuffer& buffer, const EnsembleStrategy& strategy);

}  // namespace vlaeval
