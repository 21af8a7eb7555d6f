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

#include "vlaeval/chunking.hpp"

#include <cmath>

namespace vlaeval {

ActionChunk::ActionChunk(std::size_t horizon, std::size_t dim, std::uint64_t issued_step)
    : horizon(horizon), dim(dim), values(horizon * dim, 0.0), issued_step(issued_step) {}

ActionChunk ActionChunk::repeat(std::span<const double> action, std::size_t horizon, std::uint64_t issued_step) {
  ActionChunk chunk(horizon, action.size(), issued_step);
  for (std::size_t t = 0; t < horizon; ++t) {
    std::copy(action.begin(), action.end(), chunk.row(t).begin());
  }
  return chunk;
}

bool ActionChunk::valid() const {
  if (horizon == 0 || dim == 0 || values.size() != horizon * dim) return false;
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string_view to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::kNewest: return "newest";
    case EnsembleKind::kAverage: return "average";
    case EnsembleKind::kEma: return "ema";
  }
  return "?";
}

EnsembleKind parse_ensemble_kind(std::string_view name) {
  if (name == "newest") return EnsembleKind::kNewest;
  if (name == "average") return EnsembleKind::kAverage;
  if (name == "ema") return EnsembleKind::kEma;
  throw std::invalid_argument("unknown ensemble kind '" + std::string(name) +
                              "' (expected newest, average or ema)");
}

EnsembleStrategy EnsembleStrategy::ema(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("EMA alpha must lie in (0, 1]");
  return {EnsembleKind::kEma, alpha};
}

ChunkBuffer::ChunkBuffer(std::size_t max_chunks) : max_chunks_(max_chunks) {
  if (max_chunks == 0) throw std::invalid_argument("chunk buffer needs room for at least one chunk");
}

void ChunkBuffer::advance_to(std::uint64_t step) {
  if (step < current_step_) throw std::invalid_argument("chunk buffer cannot move backwards");
  current_step_ = step;
  evict();
}

void ChunkBuffer::push(ActionChunk chunk) {
  if (chunk.issued_step != current_step_) {
    throw std::invalid_argument("chunk issued at step " + std::to_string(chunk.issued_step) +
                                " pushed at step " + std::to_string(current_step_));
  }
  chunks_.push_back(std::move(chunk));
  evict();
}

void ChunkBuffer::clear(std::uint64_t step) {
  chunks_.clear();
  current_step_ = step;
}

void ChunkBuffer::evict() {
  std::erase_if(chunks_, [this](const ActionChunk& c) { return c.issued_step + c.horizon <= current_step_; });
  while (chunks_.size() > max_chunks_) chunks_.pop_front();
}

std::vector<std::span<const double>> ChunkBuffer::candidates() const {
  std::vector<std::span<const double>> rows;
  for (auto it = chunks_.rbegin(); it != chunks_.rend(); ++it) {
    if (it->covers(current_step_)) rows.push_back(it->row(current_step_ - it->issued_step));
  }
  return rows;
}

std::vector<double> ensemble_weights(std::size_t count, const EnsembleStrategy& strategy) {
  std::vector<double> weights(count, 0.0);
  if (count == 0) return weights;
  if (strategy.kind == EnsembleKind::kNewest) {
    weights[0] = 1.0;
    return weights;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    weights[j] = strategy.kind == EnsembleKind::kEma ? std::pow(1.0 - strategy.alpha, static_cast<double>(j)) : 1.0;
    total += weights[j];
  }
  for (double& w : weights) w /= total;
  return weights;
}

std::vector<double> ensemble_action(const ChunkBuffer& buffer, const EnsembleStrategy& strategy) {
  const auto rows = buffer.candidates();
  if (rows.empty()) {
    throw EmptyBuffer("no buffered chunk covers step " + std::to_string(buffer.current_step()));
  }
  const std::size_t dim = rows.front().size();
  std::vector<double> out(rows.front().begin(), rows.front().end());
  if (strategy.kind == EnsembleKind::kNewest || rows.size() == 1) return out;

  const std::vector<double> weights = ensemble_weights(rows.size(), strategy);

  // Accumulate offsets from the newest row so identical candidates (and
  // vanishing older weights) reproduce it exactly.
  for (std::size_t j = 1; j < rows.size(); ++j) {
    if (rows[j].size() != dim) throw std::invalid_argument("buffered chunks disagree on action dimension");
    const double w = weights[j];
    for (std::size_t d = 0; d < dim; ++d) out[d] += w * (rows[j][d] - rows[0][d]);
  }
  return out;
}

}  // namespace vlaeval
