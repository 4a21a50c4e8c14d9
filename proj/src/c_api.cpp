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
#include "ultr/c_api.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "ultr/click_sim.hpp"
#include "ultr/dataset.hpp"
#include "ultr/experiment.hpp"
#include "ultr/metrics.hpp"
#include "ultr/propensity_est.hpp"
#include "ultr/trainer.hpp"

namespace {

thread_local std::string g_last_error;

int code_of(const ultr::Error& e) { return static_cast<int>(e.code()); }

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return ULTR_OK;
  } catch (const ultr::Error& e) {
    g_last_error = e.what();
    return code_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ULTR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return ULTR_ERR_INTERNAL;
  }
}

int require(bool ok, const char* message) {
  if (ok) return ULTR_OK;
  g_last_error = message;
  return ULTR_ERR_VALIDATION;
}

}  // namespace

struct ultr_dataset {
  ultr::Dataset data;
};

struct ultr_model {
  ultr::TreeEnsemble ensemble;
};

extern "C" {

const char* ultr_version(void) { return "0.1.0"; }

const char* ultr_last_error(void) { return g_last_error.c_str(); }

int ultr_dataset_load(const char* path, ultr_dataset_handle* out) {
  if (int rc = require(path && out, "path and out must be non-null")) return rc;
  return guarded([&] {
    auto handle = std::make_unique<ultr_dataset>();
    handle->data = ultr::load_dataset(path);
    *out = handle.release();
  });
}

int ultr_dataset_free(ultr_dataset_handle dataset) {
  delete dataset;
  return ULTR_OK;
}

int ultr_dataset_num_queries(ultr_dataset_handle dataset, int64_t* out) {
  if (int rc = require(dataset && out, "dataset and out must be non-null")) return rc;
  *out = static_cast<int64_t>(dataset->data.size());
  return ULTR_OK;
}

int ultr_dataset_num_items(ultr_dataset_handle dataset, int64_t* out) {
  if (int rc = require(dataset && out, "dataset and out must be non-null")) return rc;
  int64_t total = 0;
  for (const auto& q : dataset->data) total += q.n();
  *out = total;
  return ULTR_OK;
}

int ultr_dataset_num_features(ultr_dataset_handle dataset, int64_t* out) {
  if (int rc = require(dataset && out, "dataset and out must be non-null")) return rc;
  *out = 0;
  if (!dataset->data.empty() && !dataset->data.front().items.empty()) {
    *out = static_cast<int64_t>(dataset->data.front().items.front().features.size());
  }
  return ULTR_OK;
}

int ultr_gen_data(const char* config_json, const char* out_path) {
  if (int rc = require(out_path != nullptr, "out_path must be non-null")) return rc;
  return guarded([&] {
    ultr::GenDataConfig config;
    if (config_json != nullptr) {
      config = ultr::GenDataConfig::from_json(config_json);
    }
    ultr::generate_synthetic_dataset(config, out_path);
  });
}

int ultr_simulate(const char* dataset_path, const char* config_json,
                  const char* out_clicks_path) {
  if (int rc = require(dataset_path && out_clicks_path,
                       "dataset_path and out_clicks_path must be non-null")) {
    return rc;
  }
  return guarded([&] {
    ultr::SimulationConfig config;
    if (config_json != nullptr) {
      config = ultr::SimulationConfig::from_json(config_json);
    }
    const ultr::Dataset data = ultr::load_dataset(dataset_path);
    const auto log = ultr::simulate(data, config);
    ultr::write_click_log(out_clicks_path, log, config, dataset_path);
  });
}

int ultr_estimate_propensities(const char* log_path, double theta2,
                               const char* options_json, const char* out_path) {
  if (int rc = require(log_path && out_path,
                       "log_path and out_path must be non-null")) {
    return rc;
  }
  return guarded([&] {
    int max_rank = 0;
    auto strategy = ultr::ExtrapolationStrategy::kModelFit;
    ultr::EstimatorOptions estimator_options;
    if (options_json != nullptr) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(options_json);
      } catch (const nlohmann::json::exception& e) {
        throw ultr::ParseError(std::string("bad options JSON: ") + e.what());
      }
      if (j.contains("max_rank")) max_rank = j["max_rank"];
      if (j.contains("strategy")) {
        strategy = ultr::extrapolation_strategy_from_string(
            j["strategy"].get<std::string>());
      }
      if (j.contains("min_impressions")) {
        estimator_options.min_impressions = j["min_impressions"];
      }
    }

    const auto logs = ultr::load_intervention_log(log_path);
    if (logs.empty()) {
      throw ultr::StateError("intervention log holds no impressions");
    }
    int highest = 1;
    for (const auto& [key, log] : logs) {
      highest = std::max({highest, log.k1, log.k2});
    }
    if (max_rank == 0) max_rank = highest;

    // theta(1) = 1 anchor; marginal records fill the rest.
    std::vector<double> theta(max_rank, 1.0);
    for (const auto& [key, log] : logs) {
      if (!log.is_marginal() || log.k1 > max_rank || log.k1 == 1) continue;
      theta[log.k1 - 1] =
          std::clamp(ultr::estimate_marginal(log, estimator_options), 1e-6, 1.0);
    }
    double theta2_hat = theta2;
    if (theta2_hat <= 0.0) {
      if (max_rank < 2) {
        throw ultr::ConfigError("theta2 must be given for max_rank < 2");
      }
      theta2_hat = theta[1];
    }
    std::map<std::pair<int, int>, double> psi;
    for (const auto& [key, log] : logs) {
      if (log.is_marginal()) continue;
      psi[key] = ultr::estimate_joint(log, theta2_hat, estimator_options);
    }
    if (psi.empty()) {
      throw ultr::StateError("intervention log holds no pair interventions");
    }
    std::vector<std::string> warnings;
    const ultr::PropensityTable table =
        ultr::extrapolate_joint(psi, theta, strategy, max_rank, &warnings);
    for (const std::string& warning : warnings) {
      std::fprintf(stderr, "[ultr] %s\n", warning.c_str());
    }
    table.save(out_path);
  });
}

int ultr_train(const char* clicks_path, const char* features_path,
               const char* propensities_path, const char* config_json,
               const char* model_out_path) {
  if (int rc = require(clicks_path && features_path && model_out_path,
                       "clicks_path, features_path and model_out_path must be "
                       "non-null")) {
    return rc;
  }
  return guarded([&] {
    ultr::TrainerConfig config;
    if (config_json != nullptr) {
      config = ultr::TrainerConfig::from_json(config_json);
    }
    const ultr::Dataset features = ultr::load_dataset(features_path);
    std::vector<ultr::QueryCollection> collections;
    if (config.scheme == ultr::TrainScheme::kOracle) {
      // golden labels live in the feature file; clicks are not needed
      collections.assign(features.begin(), features.end());
    } else {
      collections = ultr::read_click_log(clicks_path, features);
    }
    ultr::PropensityTable table;
    const ultr::PropensityTable* props = nullptr;
    if (propensities_path != nullptr && propensities_path[0] != '\0') {
      table = ultr::PropensityTable::load(propensities_path);
      props = &table;
    }
    const ultr::TreeEnsemble model = ultr::train(collections, config, props);
    model.save(model_out_path);
  });
}

int ultr_evaluate(const char* model_path, const char* test_path,
                  const char* options_json, const char* report_out_path) {
  if (int rc = require(model_path && test_path && report_out_path,
                       "model_path, test_path and report_out_path must be "
                       "non-null")) {
    return rc;
  }
  return guarded([&] {
    std::vector<int> cutoffs{1, 3, 5, 10};
    std::string json_out, per_query_out;
    if (options_json != nullptr) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(options_json);
      } catch (const nlohmann::json::exception& e) {
        throw ultr::ParseError(std::string("bad options JSON: ") + e.what());
      }
      if (j.contains("cutoffs")) cutoffs = j["cutoffs"].get<std::vector<int>>();
      if (j.contains("json_out")) json_out = j["json_out"].get<std::string>();
      if (j.contains("per_query_out")) {
        per_query_out = j["per_query_out"].get<std::string>();
      }
    }
    const ultr::TreeEnsemble model = ultr::TreeEnsemble::load(model_path);
    const ultr::Dataset test = ultr::load_dataset(test_path);
    const ultr::EvalReport report = ultr::evaluate(model, test, cutoffs);
    report.save(report_out_path, json_out, per_query_out);
  });
}

int ultr_run_experiment(const char* spec_json) {
  if (int rc = require(spec_json != nullptr, "spec_json must be non-null")) {
    return rc;
  }
  return guarded([&] {
    const ultr::ExperimentSpec spec = ultr::ExperimentSpec::from_json(spec_json);
    ultr::run_experiment(spec);
  });
}

int ultr_model_load(const char* path, ultr_model_handle* out) {
  if (int rc = require(path && out, "path and out must be non-null")) return rc;
  return guarded([&] {
    auto handle = std::make_unique<ultr_model>();
    handle->ensemble = ultr::TreeEnsemble::load(path);
    *out = handle.release();
  });
}

int ultr_model_free(ultr_model_handle model) {
  delete model;
  return ULTR_OK;
}

int ultr_model_num_trees(ultr_model_handle model, int64_t* out) {
  if (int rc = require(model && out, "model and out must be non-null")) return rc;
  *out = model->ensemble.num_trees();
  return ULTR_OK;
}

int ultr_model_num_features(ultr_model_handle model, int64_t* out) {
  if (int rc = require(model && out, "model and out must be non-null")) return rc;
  *out = model->ensemble.num_features();
  return ULTR_OK;
}

int ultr_model_predict(ultr_model_handle model, const double* features,
                       int64_t num_items, int64_t num_features,
                       double* scores_out) {
  if (int rc = require(model && features && scores_out,
                       "model, features and scores_out must be non-null")) {
    return rc;
  }
  if (int rc = require(num_items > 0 && num_features > 0,
                       "num_items and num_features must be positive")) {
    return rc;
  }
  return guarded([&] {
    for (int64_t i = 0; i < num_items; ++i) {
      scores_out[i] = model->ensemble.predict_row(
          features + i * num_features, static_cast<int>(num_features));
    }
  });
}

}  // extern "C"
