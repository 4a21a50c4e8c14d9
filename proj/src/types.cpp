/*
 * Copyright 2026 The ultr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "ultr/types.hpp"

#include <algorithm>

namespace ultr {

void QueryCollection::validate() const {
  if (items.empty()) {
    throw ValidationError("query '" + query_id + "' has no items");
  }
  const std::size_t dim = items.front().features.size();
  std::vector<char> seen(items.size(), 0);
  for (const Item& item : items) {
    if (item.golden_label < kMinLabel || item.golden_label > kMaxLabel) {
      throw ValidationError("query '" + query_id + "': golden label " +
                            std::to_string(item.golden_label) +
                            " outside {0..4}");
    }
    if (item.features.size() != dim) {
      throw ValidationError("query '" + query_id +
                            "': inconsistent feature dimension");
    }
    if (item.initial_rank < 1 || item.initial_rank > n()) {
      throw ValidationError("query '" + query_id + "': rank " +
                            std::to_string(item.initial_rank) +
                            " outside {1.." + std::to_string(n()) + "}");
    }
    if (seen[item.initial_rank - 1]) {
      throw ValidationError("query '" + query_id + "': duplicate rank " +
                            std::to_string(item.initial_rank));
    }
    seen[item.initial_rank - 1] = 1;
    if (item.relevance && item.examined && item.click) {
      const bool expected = *item.relevance && *item.examined;
      if (*item.click != expected) {
        throw ValidationError("query '" + query_id +
                              "': click != examined * relevance");
      }
    }
  }
}

GridLayout::GridLayout(std::vector<int> row_sizes)
    : row_sizes_(std::move(row_sizes)) {
  starts_.reserve(row_sizes_.size());
  for (int size : row_sizes_) {
    if (size < 1) throw ValidationError("grid row size must be positive");
    starts_.push_back(total_);
    total_ += size;
  }
}

int GridLayout::row_of(int rank) const {
  if (rank < 1 || rank > total_) {
    throw ValidationError("rank " + std::to_string(rank) +
                          " outside grid of " + std::to_string(total_) +
                          " items");
  }
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), rank - 1);
  return static_cast<int>(it - starts_.begin());
}

}  // namespace ultr
