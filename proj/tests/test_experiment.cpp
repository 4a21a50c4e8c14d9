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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"

#include "ultr/dataset.hpp"
#include "ultr/experiment.hpp"

namespace fs = std::filesystem;

using ultr::ExperimentSpec;
using ultr::GenDataConfig;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

GenDataConfig small_gen(std::uint64_t seed) {
  GenDataConfig config;
  config.num_queries = 40;
  config.items_per_query = 12;
  config.feature_dim = 8;
  config.seed = seed;
  return config;
}

ExperimentSpec small_spec(const std::string& dir) {
  ExperimentSpec spec;
  spec.train_path = dir + "/train.txt";
  spec.test_path = dir + "/test.txt";
  spec.simulation.truncation_position = 6;
  spec.simulation.repetitions = 4;
  spec.simulation.seed = 5;
  spec.simulation.model.variant = ultr::ExamVariant::kContinuous;
  spec.trainer.num_trees = 8;
  spec.trainer.max_leaves = 4;
  spec.trainer.min_samples_per_leaf = 2;
  spec.trainer.seed = 3;
  spec.runs = {{"plain", ultr::TrainScheme::kPlain, ultr::PropensitySource::kNone, ""},
               {"robust", ultr::TrainScheme::kRobust,
                ultr::PropensitySource::kTrueModel, ""},
               {"oracle", ultr::TrainScheme::kOracle, ultr::PropensitySource::kNone,
                ""}};
  spec.baseline = "plain";
  spec.cutoffs = {1, 5};
  spec.out_dir = dir + "/out";
  spec.intervention_impressions = 20000;
  return spec;
}

}  // namespace

TEST_CASE("gen-data output is loadable, graded, and seeded") {
  const std::string dir = "/tmp/ultr_test_gen";
  fs::create_directories(dir);
  GenDataConfig config;
  config.num_queries = 100;
  config.items_per_query = 30;
  config.feature_dim = 20;
  config.seed = 7;
  const std::string path = dir + "/data.txt";
  ultr::generate_synthetic_dataset(config, path);

  const ultr::Dataset data = ultr::load_dataset(path);
  REQUIRE(data.size() == 100);
  std::set<int> grades;
  for (const auto& q : data) {
    CHECK(q.n() == 30);
    q.validate();
    for (const auto& item : q.items) {
      CHECK(item.features.size() == 20);
      grades.insert(item.golden_label);
    }
  }
  CHECK(grades == std::set<int>{0, 1, 2, 3, 4});  // non-degenerate histogram

  // same seed, same bytes
  const std::string again = dir + "/data2.txt";
  ultr::generate_synthetic_dataset(config, again);
  CHECK(slurp(path) == slurp(again));

  // different seed differs
  config.seed = 8;
  const std::string other = dir + "/data3.txt";
  ultr::generate_synthetic_dataset(config, other);
  CHECK(slurp(path) != slurp(other));
}

TEST_CASE("gen-data accepts single-item queries") {
  GenDataConfig config = small_gen(3);
  config.items_per_query = 1;
  const std::string path = "/tmp/ultr_test_gen_single.txt";
  ultr::generate_synthetic_dataset(config, path);
  const auto data = ultr::load_dataset(path);
  CHECK(data.size() == 40);
  CHECK(data.front().n() == 1);
}

TEST_CASE("experiment validation fires before any work") {
  ExperimentSpec spec = small_spec("/tmp/ultr_test_missing");
  fs::remove_all("/tmp/ultr_test_missing");
  CHECK_THROWS_AS(spec.validate(), ultr::ValidationError);
  CHECK_FALSE(fs::exists(spec.out_dir));  // no partial outputs

  fs::create_directories("/tmp/ultr_test_missing");
  ultr::generate_synthetic_dataset(small_gen(1), spec.train_path);
  ultr::generate_synthetic_dataset(small_gen(2), spec.test_path);
  spec.runs[1].name = "plain";  // duplicate name
  CHECK_THROWS_AS(spec.validate(), ultr::ValidationError);
  spec.runs[1].name = "robust";
  spec.baseline = "nonexistent";
  CHECK_THROWS_AS(spec.validate(), ultr::ValidationError);
}

TEST_CASE("experiment runs the pipeline and writes the comparison table") {
  const std::string dir = "/tmp/ultr_test_exp";
  fs::remove_all(dir);
  fs::create_directories(dir);
  ultr::generate_synthetic_dataset(small_gen(11), dir + "/train.txt");
  ultr::generate_synthetic_dataset(small_gen(22), dir + "/test.txt");
  const ExperimentSpec spec = small_spec(dir);

  const auto result = ultr::run_experiment(spec);
  CHECK(result.runs.size() == 3);
  CHECK(result.baseline == "plain");

  const std::string comparison = slurp(result.report_text_path);
  CHECK(comparison.find("plain") != std::string::npos);
  CHECK(comparison.find("robust") != std::string::npos);
  CHECK(comparison.find("oracle") != std::string::npos);
  CHECK(comparison.find('%') != std::string::npos);

  // manifest completeness: every artifact it names exists
  const std::string manifest = slurp(result.manifest_path);
  CHECK(manifest.find("\"complete\": true") != std::string::npos);
  std::istringstream lines(manifest);
  std::string line;
  while (std::getline(lines, line)) {
    const auto key = line.find("\"path\": \"");
    if (key == std::string::npos) continue;
    const auto start = key + 9;
    const auto end = line.find('"', start);
    CHECK(fs::exists(line.substr(start, end - start)));
  }
}

TEST_CASE("experiment reruns are bit-identical") {
  const std::string dir = "/tmp/ultr_test_exp_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  ultr::generate_synthetic_dataset(small_gen(31), dir + "/train.txt");
  ultr::generate_synthetic_dataset(small_gen(32), dir + "/test.txt");

  ExperimentSpec spec = small_spec(dir);
  spec.runs.resize(2);  // plain + robust keeps it quick
  const auto first = ultr::run_experiment(spec);
  const std::string report1 = slurp(first.report_text_path);
  const std::string model1 = slurp(dir + "/out/model_robust.txt");

  const auto second = ultr::run_experiment(spec);
  CHECK(slurp(second.report_text_path) == report1);
  CHECK(slurp(dir + "/out/model_robust.txt") == model1);
}

TEST_CASE("experiment estimated-propensity source produces a usable table") {
  const std::string dir = "/tmp/ultr_test_exp_est";
  fs::remove_all(dir);
  fs::create_directories(dir);
  ultr::generate_synthetic_dataset(small_gen(41), dir + "/train.txt");
  ultr::generate_synthetic_dataset(small_gen(42), dir + "/test.txt");

  ExperimentSpec spec = small_spec(dir);
  spec.runs = {{"plain", ultr::TrainScheme::kPlain, ultr::PropensitySource::kNone, ""},
               {"estimated", ultr::TrainScheme::kRobust,
                ultr::PropensitySource::kEstimated, ""}};
  const auto result = ultr::run_experiment(spec);
  CHECK(result.runs.size() == 2);

  const auto table =
      ultr::PropensityTable::load(dir + "/out/propensities_estimated.txt");
  CHECK(table.max_rank() == spec.simulation.truncation_position);
  CHECK_NOTHROW(table.validate());
  // estimates of the continuous model's theta should be in the ballpark
  CHECK(table.theta(2) > 0.3);
  CHECK(table.theta(2) < 0.7);
}

TEST_CASE("experiment stage failures leave a manifest trail") {
  const std::string dir = "/tmp/ultr_test_exp_fail";
  fs::remove_all(dir);
  fs::create_directories(dir);
  ultr::generate_synthetic_dataset(small_gen(51), dir + "/train.txt");
  ultr::generate_synthetic_dataset(small_gen(52), dir + "/test.txt");

  ExperimentSpec spec = small_spec(dir);
  // model range shorter than the truncation: the simulate stage must fail
  spec.simulation.model.theta_inverse_rank = false;
  spec.simulation.model.theta_table = {1.0, 0.5};
  try {
    ultr::run_experiment(spec);
    FAIL("expected a stage-tagged error");
  } catch (const ultr::Error& e) {
    CHECK(std::string(e.what()).find("simulate") != std::string::npos);
  }
  const std::string manifest = slurp(dir + "/out/manifest.json");
  CHECK(manifest.find("\"simulate\": \"failed\"") != std::string::npos);
  CHECK(manifest.find("\"complete\": false") != std::string::npos);
}

TEST_CASE("experiment spec JSON round-trip") {
  const ExperimentSpec spec = small_spec("/tmp/x");
  const auto parsed = ExperimentSpec::from_json(spec.to_json());
  CHECK(parsed.train_path == spec.train_path);
  CHECK(parsed.runs.size() == spec.runs.size());
  CHECK(parsed.runs[1].scheme == ultr::TrainScheme::kRobust);
  CHECK(parsed.runs[1].source == ultr::PropensitySource::kTrueModel);
  CHECK(parsed.baseline == "plain");
  CHECK(parsed.cutoffs == spec.cutoffs);
  CHECK_THROWS_AS(ExperimentSpec::from_json("{}"), ultr::ParseError);
}
