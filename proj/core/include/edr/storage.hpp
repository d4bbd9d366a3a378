/*
 * Copyright 2026 The edr Authors.
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
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string_view>
#include <vector>

#include "edr/buffering.hpp"

namespace edr {

enum class RetentionPolicy { kPriority, kFifo };

std::string_view policy_name(RetentionPolicy p);
RetentionPolicy parse_policy(std::string_view name);

enum class InsertOutcome { kStored, kStoredAfterEvicting, kRejected };

struct InsertResult {
  InsertOutcome outcome = InsertOutcome::kStored;
  std::vector<std::uint64_t> evicted;
};

enum class EvictionReason { kLowestValue, kOldest, kRejected };

struct EvictionRecord {
  std::uint64_t buffer_id = 0;
  double value = 0.0;
  double cost = 0.0;
  EvictionReason reason = EvictionReason::kLowestValue;

  bool operator==(const EvictionRecord&) const = default;
};

using TagPredicate = std::function<bool(const BufferTag&)>;

// Comma-separated conjunction of clauses over buffer tags, e.g.
// "class=OC*,max_s>0.8". Keys: class, object, track (equality) and mean_s,
// max_s, var_s (compared with <, <=, >, >=, =, !=). "*" matches everything.
TagPredicate parse_tag_predicate(std::string_view expr);

// Capacity-bounded long-term store of finalized buffers. Under the priority
// policy buffers sit in a binary min-heap keyed by V_k and the cheapest-value
// buffers make room for more valuable ones; under FIFO the oldest go first.
// Capacity and costs share the normalized cost unit of the buffers.
class BufferStore {
 public:
  static constexpr double kUnlimited = std::numeric_limits<double>::infinity();

  BufferStore(RetentionPolicy policy, double capacity);

  // Throws std::invalid_argument when the buffer alone exceeds capacity.
  InsertResult insert(FrameBuffer buffer);

  // Stored buffers whose tags satisfy the predicate, highest V_k first.
  std::vector<std::uint64_t> query(const TagPredicate& predicate) const;

  const FrameBuffer* find(std::uint64_t id) const;
  // Buffer ids in storage order: heap array order or arrival order.
  std::vector<std::uint64_t> ids() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double total_cost() const { return total_cost_; }
  double capacity() const { return capacity_; }
  RetentionPolicy policy() const { return policy_; }
  const std::vector<EvictionRecord>& eviction_log() const { return log_; }

  // Full scan of the heap array (always true under FIFO).
  bool heap_property_holds() const;

  // Writes index.json plus one buffer_<k>/ directory per stored buffer.
  void persist(const std::filesystem::path& dir) const;
  // Throws InputError naming the buffer whose manifest is missing or corrupt.
  static BufferStore load(const std::filesystem::path& dir);

  bool operator==(const BufferStore&) const = default;

 private:
  struct HeapKey {
    double value;
    std::uint64_t id;
    bool operator==(const HeapKey&) const = default;
  };
  // Orders the heap so that the front is the smallest (value, id).
  static bool heap_after(const HeapKey& a, const HeapKey& b) {
    return a.value > b.value || (a.value == b.value && a.id > b.id);
  }

  InsertResult insert_priority(FrameBuffer buffer);
  InsertResult insert_fifo(FrameBuffer buffer);
  void store(FrameBuffer buffer);
  void drop(std::uint64_t id, EvictionReason reason);

  RetentionPolicy policy_;
  double capacity_;
  double total_cost_ = 0.0;
  std::map<std::uint64_t, FrameBuffer> entries_;
  std::vector<HeapKey> heap_;
  std::deque<std::uint64_t> arrival_;
  std::vector<EvictionRecord> log_;
};

}  // namespace edr
