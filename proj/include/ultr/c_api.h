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

/*
 * C API of the ultr library. Every function returns a ULTR_* status code;
 * on failure ultr_last_error() describes what went wrong (the message is
 * thread-local). Handles are opaque and must be released with their _free
 * function. Configuration parameters are JSON strings; passing NULL keeps
 * the defaults.
 */
#ifndef ULTR_C_API_H_
#define ULTR_C_API_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define ULTR_OK 0
#define ULTR_ERR_VALIDATION 1
#define ULTR_ERR_PARSE 2
#define ULTR_ERR_IO 3
#define ULTR_ERR_STATE 4
#define ULTR_ERR_CONFIG 5
#define ULTR_ERR_INSUFFICIENT_DATA 6
#define ULTR_ERR_DEGENERATE 7
#define ULTR_ERR_INTERNAL 8

typedef struct ultr_dataset* ultr_dataset_handle;
typedef struct ultr_model* ultr_model_handle;

const char* ultr_version(void);

/* Message for the most recent failing call on this thread. */
const char* ultr_last_error(void);

/* --- datasets -------------------------------------------------------- */

int ultr_dataset_load(const char* path, ultr_dataset_handle* out);
int ultr_dataset_free(ultr_dataset_handle dataset);
int ultr_dataset_num_queries(ultr_dataset_handle dataset, int64_t* out);
int ultr_dataset_num_items(ultr_dataset_handle dataset, int64_t* out);
int ultr_dataset_num_features(ultr_dataset_handle dataset, int64_t* out);

/* Writes a synthetic dataset with a planted relevance signal.
 * config_json keys: num_queries, items_per_query, feature_dim, seed,
 * production_noise, label_noise. */
int ultr_gen_data(const char* config_json, const char* out_path);

/* --- pipeline stages -------------------------------------------------- */

/* config_json keys: truncation, repetitions, seed, model{...},
 * drop_queries_without_relevant, keep_latent. */
int ultr_simulate(const char* dataset_path, const char* config_json,
                  const char* out_clicks_path);

/* Estimates a full propensity table from a swap-intervention log.
 * theta2 > 0 overrides the estimated theta(2) in the psi ratio.
 * options_json keys: max_rank, strategy ("model_fit" | "nearest_pair"),
 * min_impressions. */
int ultr_estimate_propensities(const char* log_path, double theta2,
                               const char* options_json, const char* out_path);

/* config_json: trainer configuration (see TrainerConfig); scheme one of
 * "plain", "robust", "fixed-tminus", "oracle". propensities_path may be
 * NULL for plain/oracle. */
int ultr_train(const char* clicks_path, const char* features_path,
               const char* propensities_path, const char* config_json,
               const char* model_out_path);

/* options_json keys: cutoffs (array), json_out, per_query_out. */
int ultr_evaluate(const char* model_path, const char* test_path,
                  const char* options_json, const char* report_out_path);

/* Full pipeline from an experiment spec (JSON string). */
int ultr_run_experiment(const char* spec_json);

/* --- models ----------------------------------------------------------- */

int ultr_model_load(const char* path, ultr_model_handle* out);
int ultr_model_free(ultr_model_handle model);
int ultr_model_num_trees(ultr_model_handle model, int64_t* out);
int ultr_model_num_features(ultr_model_handle model, int64_t* out);

/* Scores num_items rows of row-major features (num_items x num_features). */
int ultr_model_predict(ultr_model_handle model, const double* features,
                       int64_t num_items, int64_t num_features,
                       double* scores_out);

#ifdef __cplusplus
}
#endif

#endif /* ULTR_C_API_H_ */
