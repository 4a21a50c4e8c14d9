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
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "ultr/click_sim.hpp"
#include "ultr/dataset.hpp"

using ultr::Dataset;
using ultr::Item;
using ultr::QueryCollection;
using ultr::SimulationConfig;

namespace {

Dataset make_dataset(int queries, int items, int label) {
  Dataset data;
  for (int qi = 0; qi < queries; ++qi) {
    QueryCollection q;
    q.query_id = "q" + std::to_string(qi + 1);
    for (int i = 0; i < items; ++i) {
      Item item;
      item.features = {static_cast<double>(i), static_cast<double>(qi)};
      item.golden_label = label;
      item.initial_rank = i + 1;
      q.items.push_back(item);
    }
    data.push_back(q);
  }
  return data;
}

SimulationConfig base_config() {
  SimulationConfig config;
  config.truncation_position = 5;
  config.repetitions = 3;
  config.seed = 91;
  config.model.variant = ultr::ExamVariant::kContinuous;
  config.model.theta_inverse_rank = true;
  config.keep_latent = true;
  return config;
}

}  // namespace

TEST_CASE("relevance_probability follows (2^y - 1)/15") {
  CHECK(ultr::relevance_probability(0) == 0.0);
  CHECK(ultr::relevance_probability(1) == doctest::Approx(1.0 / 15.0));
  CHECK(ultr::relevance_probability(2) == doctest::Approx(0.2));
  CHECK(ultr::relevance_probability(3) == doctest::Approx(7.0 / 15.0));
  CHECK(ultr::relevance_probability(4) == 1.0);
  CHECK_THROWS_AS(ultr::relevance_probability(5), ultr::ValidationError);
  CHECK_THROWS_AS(ultr::relevance_probability(-1), ultr::ValidationError);
}

TEST_CASE("simulate drops all-zero-label queries when asked") {
  const Dataset data = make_dataset(4, 6, 0);
  SimulationConfig config = base_config();
  CHECK(ultr::simulate(data, config).empty());

  config.drop_queries_without_relevant = false;
  const auto log = ultr::simulate(data, config);
  CHECK(log.size() == 4 * 3);
  for (const auto& q : log) {
    for (const auto& item : q.items) CHECK(*item.click == false);
  }
}

TEST_CASE("simulate with certain examination and grade 4 clicks everything") {
  const Dataset data = make_dataset(2, 4, 4);
  SimulationConfig config = base_config();
  config.model.variant = ultr::ExamVariant::kIndependent;
  config.model.theta_inverse_rank = false;
  config.model.theta_table = {1.0, 1.0, 1.0, 1.0, 1.0};
  const auto log = ultr::simulate(data, config);
  CHECK(log.size() == 2 * 3);
  for (const auto& q : log) {
    for (const auto& item : q.items) {
      CHECK(*item.click == true);
      CHECK(*item.relevance == true);
      CHECK(*item.examined == true);
    }
  }
}

TEST_CASE("simulate output structure: repetitions x retained, truncated") {
  Dataset data = make_dataset(5, 8, 2);
  data[2].items[0].golden_label = 0;  // still has positives at other ranks
  for (auto& item : data[4].items) item.golden_label = 0;  // dropped
  const SimulationConfig config = base_config();
  const auto log = ultr::simulate(data, config);
  CHECK(log.size() == 4 * 3);
  for (const auto& q : log) {
    CHECK(q.n() == 5);  // truncation
    CHECK(q.repetition >= 1);
    CHECK(q.repetition <= 3);
    q.validate();  // click = examined * relevance by construction
  }
  // canonical order: query file order, then repetition
  CHECK(log[0].query_id == "q1");
  CHECK(log[0].repetition == 1);
  CHECK(log[1].query_id == "q1");
  CHECK(log[1].repetition == 2);
  CHECK(log[3].query_id == "q2");
}

TEST_CASE("simulate is deterministic in (dataset, config)") {
  const Dataset data = make_dataset(6, 6, 3);
  const SimulationConfig config = base_config();
  const auto log1 = ultr::simulate(data, config);
  const auto log2 = ultr::simulate(data, config);
  REQUIRE(log1.size() == log2.size());
  for (std::size_t i = 0; i < log1.size(); ++i) {
    for (int j = 0; j < log1[i].n(); ++j) {
      CHECK(*log1[i].items[j].click == *log2[i].items[j].click);
      CHECK(*log1[i].items[j].examined == *log2[i].items[j].examined);
      CHECK(*log1[i].items[j].relevance == *log2[i].items[j].relevance);
    }
  }
}

TEST_CASE("simulate respects the examination model range") {
  const Dataset data = make_dataset(1, 6, 2);
  SimulationConfig config = base_config();
  config.model.theta_inverse_rank = false;
  config.model.theta_table = {1.0, 0.5};  // too short for truncation 5
  CHECK_THROWS_AS(ultr::simulate(data, config), ultr::ConfigError);
}

TEST_CASE("empirical click rate approaches theta(k) * (2^g - 1)/15") {
  // Independent examination so per-rank clicks are independent Bernoulli.
  const int queries = 60;
  Dataset data = make_dataset(queries, 5, 3);
  SimulationConfig config = base_config();
  config.model.variant = ultr::ExamVariant::kIndependent;
  config.repetitions = 400;  // 24000 impressions per rank
  const auto log = ultr::simulate(data, config);
  std::vector<double> clicks(5, 0.0);
  const double impressions = static_cast<double>(queries) * config.repetitions;
  for (const auto& q : log) {
    for (const auto& item : q.items) {
      if (*item.click) clicks[item.initial_rank - 1] += 1.0;
    }
  }
  for (int k = 1; k <= 5; ++k) {
    const double expected = (1.0 / k) * (7.0 / 15.0);
    const double se = std::sqrt(expected * (1 - expected) / impressions);
    CHECK(std::fabs(clicks[k - 1] / impressions - expected) < 4 * se);
  }
}

TEST_CASE("continuous examination never clicks past the last examined rank") {
  const Dataset data = make_dataset(40, 8, 2);
  SimulationConfig config = base_config();
  config.truncation_position = 8;
  const auto log = ultr::simulate(data, config);
  for (const auto& q : log) {
    int last_examined = 0;
    int last_click = 0;
    for (const auto& item : q.items) {
      if (*item.examined) last_examined = std::max(last_examined, item.initial_rank);
      if (*item.click) last_click = std::max(last_click, item.initial_rank);
    }
    CHECK(last_click <= last_examined);
  }
}

TEST_CASE("click log round-trips through its text format") {
  const Dataset data = make_dataset(3, 6, 2);
  SimulationConfig config = base_config();
  const auto log = ultr::simulate(data, config);
  const std::string path = "/tmp/ultr_test_clicklog.txt";
  ultr::write_click_log(path, log, config, "features.txt");

  const auto header = ultr::read_click_log_header(path);
  CHECK(header.seed == config.seed);
  CHECK(header.truncation == config.truncation_position);
  CHECK(header.repetitions == config.repetitions);
  CHECK(header.has_latent == true);
  CHECK(header.features_ref == "features.txt");
  CHECK(header.model_hash == config.model.config_hash());

  const auto loaded = ultr::read_click_log(path, data);
  REQUIRE(loaded.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(loaded[i].query_id == log[i].query_id);
    CHECK(loaded[i].repetition == log[i].repetition);
    REQUIRE(loaded[i].n() == log[i].n());
    for (int j = 0; j < log[i].n(); ++j) {
      CHECK(*loaded[i].items[j].click == *log[i].items[j].click);
      CHECK(*loaded[i].items[j].relevance == *log[i].items[j].relevance);
      CHECK(*loaded[i].items[j].examined == *log[i].items[j].examined);
      CHECK(loaded[i].items[j].features == log[i].items[j].features);
    }
  }
}

TEST_CASE("click log without latents hides them") {
  const Dataset data = make_dataset(2, 5, 3);
  SimulationConfig config = base_config();
  config.keep_latent = false;
  const auto log = ultr::simulate(data, config);
  const std::string path = "/tmp/ultr_test_clicklog_nolatent.txt";
  ultr::write_click_log(path, log, config, "f");
  const auto loaded = ultr::read_click_log(path, data);
  CHECK_FALSE(loaded.front().items.front().relevance.has_value());
  CHECK_FALSE(loaded.front().items.front().examined.has_value());
  CHECK(loaded.front().items.front().click.has_value());
}

TEST_CASE("click log referencing an unknown query is a state error") {
  const Dataset data = make_dataset(1, 3, 2);
  SimulationConfig config = base_config();
  config.truncation_position = 3;
  const auto log = ultr::simulate(data, config);
  const std::string path = "/tmp/ultr_test_clicklog_unknown.txt";
  ultr::write_click_log(path, log, config, "f");
  const Dataset other = make_dataset(1, 3, 2);
  Dataset renamed = other;
  renamed[0].query_id = "different";
  CHECK_THROWS_AS(ultr::read_click_log(path, renamed), ultr::StateError);
}

TEST_CASE("simulation config JSON round-trip") {
  SimulationConfig config = base_config();
  config.model.variant = ultr::ExamVariant::kRowSkipping;
  config.model.gamma = 0.25;
  config.model.row_sizes = {3, 2};
  config.model.continue_prob = 0.8;
  const auto parsed = SimulationConfig::from_json(config.to_json());
  CHECK(parsed.truncation_position == config.truncation_position);
  CHECK(parsed.repetitions == config.repetitions);
  CHECK(parsed.seed == config.seed);
  CHECK(parsed.keep_latent == config.keep_latent);
  CHECK(parsed.model.config_hash() == config.model.config_hash());
}
