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
#ifndef ULTR_CLICK_SIM_HPP_
#define ULTR_CLICK_SIM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ultr/exam_models.hpp"
#include "ultr/types.hpp"

namespace ultr {

struct SimulationConfig {
  int truncation_position = 10;
  int repetitions = 16;
  std::uint64_t seed = 2022;
  ExamModelConfig model;
  bool drop_queries_without_relevant = true;
  //! Persist relevance/examination next to clicks (simulation-only columns).
  bool keep_latent = false;

  std::string to_json() const;
  static SimulationConfig from_json(const std::string& json_text);
};

//! P{relevant} for an editorial grade: (2^grade - 1) / 15.
double relevance_probability(int label);

/*!
 * \brief Semi-synthetic click generation: per repetition and query, truncate,
 * draw relevance ~ Bernoulli((2^y-1)/15), draw examinations from the model,
 * and set click = examined * relevance.
 *
 * Queries whose truncated list has no positively-labelled item are dropped
 * up front when the config says so (their click columns would stay all-zero
 * forever). Output is ordered by (query file order, repetition) and is a
 * pure function of (dataset, config).
 */
std::vector<QueryCollection> simulate(const Dataset& dataset,
                                      const SimulationConfig& config);

/*!
 * \brief Click-log text format.
 *
 * Header comments record the seed, model hash, truncation, repetitions and
 * the feature-file reference; data lines are
 * `<query_id> <repetition> <rank> <click> [<relevance> <examined>]`.
 */
void write_click_log(const std::string& path,
                     const std::vector<QueryCollection>& log,
                     const SimulationConfig& config,
                     const std::string& features_ref);

struct ClickLogHeader {
  std::uint64_t seed = 0;
  std::uint64_t model_hash = 0;
  int truncation = 0;
  int repetitions = 0;
  bool has_latent = false;
  std::string features_ref;
};

ClickLogHeader read_click_log_header(const std::string& path);

/*!
 * \brief Joins a click log back with its feature file: each (query,
 * repetition) group becomes a truncated QueryCollection with clicks (and
 * latent columns when present) filled in.
 */
std::vector<QueryCollection> read_click_log(const std::string& path,
                                            const Dataset& features);

}  // namespace ultr

#endif  // ULTR_CLICK_SIM_HPP_
