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
#ifndef ULTR_TYPES_HPP_
#define ULTR_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ultr/errors.hpp"

namespace ultr {

constexpr int kMinLabel = 0;
constexpr int kMaxLabel = 4;

/*!
 * \brief One ranked item: features, editorial grade, display position, and
 * (for simulated data) the latent relevance/examination bits and the click.
 *
 * All fields are set at construction time and never mutated afterwards, so
 * items can be shared freely across workers.
 */
struct Item {
  std::vector<double> features;
  int golden_label = 0;  // editorial grade in {0..4}
  int initial_rank = 0;  // 1-based display position in the logging ranking
  std::optional<bool> relevance;
  std::optional<bool> examined;
  std::optional<bool> click;
};

/*! \brief All items shown for one request, in initial-rank order. */
struct QueryCollection {
  std::string query_id;
  int repetition = 0;  // > 0 for collections produced by the click simulator
  std::vector<Item> items;

  int n() const { return static_cast<int>(items.size()); }

  //! Checks the structural invariants: ranks form {1..n}, grades in range,
  //! one feature dimension, and click = examined * relevance where all
  //! three are present. Throws ValidationError.
  void validate() const;
};

using Dataset = std::vector<QueryCollection>;

/*!
 * \brief Presentation grid: items per row, top to bottom. A plain list is a
 * grid with a single row (or one item per row; the math agrees).
 */
class GridLayout {
 public:
  GridLayout() = default;
  explicit GridLayout(std::vector<int> row_sizes);

  int num_rows() const { return static_cast<int>(row_sizes_.size()); }
  int total_items() const { return total_; }
  int row_size(int row) const { return row_sizes_[row - 1]; }  // N(m)
  //! Items before row m (the paper's S(m)); S(1) = 0.
  int items_before(int row) const { return starts_[row - 1]; }
  //! 1-based row containing the given 1-based rank.
  int row_of(int rank) const;

  const std::vector<int>& row_sizes() const { return row_sizes_; }

 private:
  std::vector<int> row_sizes_;
  std::vector<int> starts_;
  int total_ = 0;
};

}  // namespace ultr

#endif  // ULTR_TYPES_HPP_
