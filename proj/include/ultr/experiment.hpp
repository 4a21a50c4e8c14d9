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
#ifndef ULTR_EXPERIMENT_HPP_
#define ULTR_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ultr/click_sim.hpp"
#include "ultr/metrics.hpp"
#include "ultr/trainer.hpp"

namespace ultr {

/*!
 * \brief Synthetic ranking data with a planted relevance signal.
 *
 * Grades come from a fixed monotone function of the first half of the
 * features plus noise; initial ranks come from a noisier version of the
 * same function, so the logging ranking is correlated with relevance but
 * deliberately imperfect. The planted function depends only on the feature
 * count, so train/test files generated with different seeds share it.
 */
struct GenDataConfig {
  int num_queries = 100;
  int items_per_query = 30;
  int feature_dim = 20;
  std::uint64_t seed = 7;
  //! Noise added to the production scorer, in planted-signal sigmas.
  double production_noise = 1.0;
  //! Noise inside the grade assignment, in planted-signal sigmas.
  double label_noise = 0.25;

  std::string to_json() const;
  static GenDataConfig from_json(const std::string& json_text);
};

void generate_synthetic_dataset(const GenDataConfig& config,
                                const std::string& out_path);

enum class PropensitySource { kNone, kTrueModel, kEstimated, kFile };

PropensitySource propensity_source_from_string(const std::string& name);

struct TrainerRunSpec {
  std::string name;
  TrainScheme scheme = TrainScheme::kPlain;
  PropensitySource source = PropensitySource::kNone;
  std::string propensity_file;  // when source == kFile
};

/*! \brief Full pipeline description: simulate, train per scheme, evaluate. */
struct ExperimentSpec {
  std::string train_path;
  std::string test_path;
  SimulationConfig simulation;
  TrainerConfig trainer;  // shared base; scheme comes from each run
  std::vector<TrainerRunSpec> runs;
  std::vector<int> cutoffs{1, 3, 5, 10};
  std::string baseline;  // run name; empty = first run
  std::string out_dir;
  //! Impressions for the estimated-propensity intervention stage.
  std::int64_t intervention_impressions = 200000;

  std::string to_json() const;
  static ExperimentSpec from_json(const std::string& json_text);
  //! Path existence and enum checks; throws ValidationError before any work.
  void validate() const;
};

struct RunResult {
  std::string name;
  std::string model_path;
  EvalReport report;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::string baseline;
  std::string report_text_path;
  std::string report_json_path;
  std::string manifest_path;
};

/*!
 * \brief Executes the pipeline and writes click logs, propensity tables,
 * models, per-run reports, a comparison table (baseline absolute, other
 * rows as percentage deltas with paired-t significance marks), and a
 * manifest recording per-stage completion and config hashes.
 */
ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace ultr

#endif  // ULTR_EXPERIMENT_HPP_
