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

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace vlaeval {

struct BatchingOptions {
  std::size_t max_batch_size = 1;
  std::chrono::microseconds max_wait{5000};
};

// Cross-connection rendezvous for inference requests. Producers submit from
// any thread; a single consumer drains batches with collect_batch().
template <typename T>
class BatchQueue {
 public:
  using Clock = std::chrono::steady_clock;

  explicit BatchQueue(BatchingOptions options) : options_(options) {
    if (options_.max_batch_size == 0) throw std::invalid_argument("max_batch_size must be >= 1");
  }

  // Returns false (and drops the item) once shut down.
  bool submit(T item) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (shutdown_) return false;
      pending_.push_back(Slot{std::move(item), Clock::now()});
    }
    cv_.notify_all();
    return true;
  }

  // Blocks until at least one item is pending. Returns as soon as
  // max_batch_size items are available, otherwise whatever is pending when
  // the oldest item has waited max_wait. After shutdown, drains what is left
  // and then returns an empty batch.
  std::vector<T> collect_batch() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return shutdown_ || !pending_.empty(); });
    if (!pending_.empty() && !shutdown_) {
      const auto deadline = pending_.front().enqueued + options_.max_wait;
      cv_.wait_until(lock, deadline,
                     [&] { return shutdown_ || pending_.size() >= options_.max_batch_size; });
    }
    const std::size_t n = std::min(pending_.size(), options_.max_batch_size);
    std::vector<T> batch;
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      batch.push_back(std::move(pending_.front().item));
      pending_.pop_front();
    }
    return batch;
  }

  void shutdown() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      shutdown_ = true;
    }
    cv_.notify_all();
  }

  // Removes and returns everything still pending.
  std::vector<T> take_all() {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<T> out;
    out.reserve(pending_.size());
    for (auto& slot : pending_) out.push_back(std::move(slot.item));
    pending_.clear();
    return out;
  }

  bool is_shutdown() const {
    std::lock_guard<std::mutex> lock(mu_);
    return shutdown_;
  }

  std::size_t pending() const {
    std::lock_guard<std::mutex> lock(mu_);
    return pending_.size();
  }

  const BatchingOptions& options() const { return options_; }

 private:
  struct Slot {
    T item;
    Clock::time_point enqueued;
  };

  const BatchingOptions options_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Slot> pending_;
  bool shutdown_ = false;
};

}  // namespace vlaeval
