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

// Command-line front end; all real work goes through the C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ultr/c_api.h"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int to_exit_code(int status) {
  switch (status) {
    case ULTR_OK:
      return 0;
    case ULTR_ERR_VALIDATION:
    case ULTR_ERR_PARSE:
    case ULTR_ERR_CONFIG:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

int finish(int status) {
  if (status != ULTR_OK) {
    std::fprintf(stderr, "ultr: %s\n", ultr_last_error());
  }
  return to_exit_code(status);
}

std::vector<double> read_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--theta-table", "cannot open " + path);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  return values;
}

struct ModelFlags {
  std::string variant = "continuous";
  std::string theta_table_path;
  double gamma = 0.0;
  double continue_prob = 1.0;
  std::string continue_table_path;
  std::vector<int> row_sizes;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model-variant", variant,
                    "independent | continuous | row_skipping")
        ->default_str(variant);
    cmd->add_option("--theta-table", theta_table_path,
                    "file of theta values, one per rank (default: 1/rank)");
    cmd->add_option("--gamma", gamma, "row-skip probability (row_skipping)");
    cmd->add_option("--continue-prob", continue_prob,
                    "scalar continue probability C_v (row_skipping)");
    cmd->add_option("--continue-prob-table", continue_table_path,
                    "file of per-rank continue probabilities");
    cmd->add_option("--row-sizes", row_sizes, "grid row sizes, e.g. 3,4,3")
        ->delimiter(',');
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["variant"] = variant;
    if (theta_table_path.empty()) {
      j["theta"] = "inverse_rank";
    } else {
      j["theta"] = read_value_file(theta_table_path);
    }
    if (variant == "row_skipping" || variant == "row-skipping") {
      j["gamma"] = gamma;
      if (continue_table_path.empty()) {
        j["continue_prob"] = continue_prob;
      } else {
        j["continue_prob"] = read_value_file(continue_table_path);
      }
      j["row_sizes"] = row_sizes;
    }
    return j;
  }
};

struct TrainerFlags {
  int trees = 300;
  double learning_rate = 0.05;
  int max_leaves = 31;
  double feature_fraction = 0.9;
  double bagging_fraction = 0.9;
  int min_samples_per_leaf = 20;
  double sigma = 1.0;
  int ndcg_cutoff = 0;
  std::vector<double> t_minus;
  double propensity_floor = 0.0;
  std::uint64_t seed = 0;
  int max_bins = 255;
  int threads = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--trees", trees, "number of boosting rounds");
    cmd->add_option("--learning-rate", learning_rate, "shrinkage");
    cmd->add_option("--max-leaves", max_leaves, "leaves per tree");
    cmd->add_option("--feature-fraction", feature_fraction,
                    "features sampled per tree");
    cmd->add_option("--bagging-fraction", bagging_fraction,
                    "query collections sampled per tree");
    cmd->add_option("--min-samples-per-leaf", min_samples_per_leaf,
                    "minimum items per leaf");
    cmd->add_option("--sigma", sigma, "logistic scale of the pairwise loss");
    cmd->add_option("--ndcg-cutoff", ndcg_cutoff,
                    "NDCG cutoff in the lambda weights (0 = full list)");
    cmd->add_option("--t-minus", t_minus,
                    "per-rank t^- constants for fixed-tminus, e.g. 1,1,0.9")
        ->delimiter(',');
    cmd->add_option("--propensity-floor", propensity_floor,
                    "clip propensities below this before inversion");
    cmd->add_option("--seed", seed, "training seed");
    cmd->add_option("--max-bins", max_bins, "histogram bins per feature");
    cmd->add_option("--threads", threads, "worker cap");
  }

  nlohmann::json to_json(const std::string& scheme) const {
    nlohmann::json j;
    j["num_trees"] = trees;
    j["learning_rate"] = learning_rate;
    j["max_leaves"] = max_leaves;
    j["feature_fraction"] = feature_fraction;
    j["bagging_fraction"] = bagging_fraction;
    j["min_samples_per_leaf"] = min_samples_per_leaf;
    j["scheme"] = scheme;
    j["sigma"] = sigma;
    j["ndcg_cutoff"] = ndcg_cutoff;
    if (!t_minus.empty()) j["t_minus"] = t_minus;
    j["propensity_floor"] = propensity_floor;
    j["seed"] = seed;
    j["max_bins"] = max_bins;
    j["threads"] = threads;
    return j;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ultr: position-bias-corrected pairwise learning-to-rank"};
  app.set_version_flag("--version", std::string(ultr_version()));
  app.set_config("--config", "", "read options from an INI/TOML file");
  app.require_subcommand(1);

  // gen-data -------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  int gen_queries = 100, gen_items = 30, gen_features = 20;
  std::uint64_t gen_seed = 7;
  double gen_production_noise = 1.0, gen_label_noise = 0.25;
  std::string gen_out;
  gen->add_option("--queries", gen_queries, "number of queries");
  gen->add_option("--items", gen_items, "items per query");
  gen->add_option("--features", gen_features, "feature dimension");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--production-noise", gen_production_noise,
                  "noise of the planted production ranker (in signal sigmas)");
  gen->add_option("--label-noise", gen_label_noise,
                  "noise inside the grade assignment (in signal sigmas)");
  gen->add_option("--out", gen_out, "output dataset path")->required();

  // simulate ---------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "generate a click log");
  std::string sim_dataset, sim_out;
  int sim_truncation = 10, sim_repetitions = 16;
  std::uint64_t sim_seed = 2022;
  bool sim_keep_latent = false, sim_keep_unrelevant = false;
  ModelFlags sim_model;
  sim->add_option("--dataset", sim_dataset, "feature file (svmrank format)")
      ->required();
  sim->add_option("--out", sim_out, "click log output path")->required();
  sim->add_option("--truncation", sim_truncation, "truncation position");
  sim->add_option("--repetitions", sim_repetitions, "passes per query");
  sim->add_option("--seed", sim_seed, "simulation seed");
  sim->add_flag("--keep-latent", sim_keep_latent,
                "persist relevance/examination columns");
  sim->add_flag("--keep-queries-without-relevant", sim_keep_unrelevant,
                "do not drop queries whose truncated list has no relevant item");
  sim_model.attach(sim);

  // estimate-propensities ---------------------------------------------------
  auto* est = app.add_subcommand("estimate-propensities",
                                 "swap-intervention estimators");
  std::string est_log, est_out, est_strategy = "model_fit";
  double est_theta2 = 0.0;
  int est_max_rank = 0;
  std::int64_t est_min_impressions = 100;
  est->add_option("--log", est_log, "intervention log path")->required();
  est->add_option("--theta2", est_theta2,
                  "theta(2) anchor for the psi ratio (default: estimated)");
  est->add_option("--out", est_out, "propensity table output path")->required();
  est->add_option("--max-rank", est_max_rank,
                  "table size (default: highest rank in the log)");
  est->add_option("--strategy", est_strategy, "model_fit | nearest_pair");
  est->add_option("--min-impressions", est_min_impressions,
                  "refuse buckets smaller than this");

  // train --------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "gradient-boosted lambda training");
  std::string tr_clicks, tr_features, tr_scheme = "plain", tr_props, tr_out;
  TrainerFlags tr_flags;
  tr->add_option("--clicks", tr_clicks,
                 "click log path (unused by the oracle scheme)");
  tr->add_option("--features", tr_features, "feature file")->required();
  tr->add_option("--scheme", tr_scheme,
                 "plain | robust | fixed-tminus | oracle");
  tr->add_option("--propensities", tr_props, "propensity table path");
  tr->add_option("--out", tr_out, "model output path")->required();
  tr_flags.attach(tr);

  // evaluate -----------------------------------------------------------
  auto* ev = app.add_subcommand("evaluate", "rank and score against labels");
  std::string ev_model, ev_test, ev_out, ev_json_out, ev_per_query_out;
  std::vector<int> ev_cutoffs{1, 3, 5, 10};
  ev->add_option("--model", ev_model, "model path")->required();
  ev->add_option("--test", ev_test, "test dataset path")->required();
  ev->add_option("--cutoffs", ev_cutoffs, "NDCG cutoffs, e.g. 1,3,5,10")
      ->delimiter(',');
  ev->add_option("--out", ev_out, "text report path")->required();
  ev->add_option("--json-out", ev_json_out, "machine-readable report path");
  ev->add_option("--per-query-out", ev_per_query_out,
                 "per-query metric values (for significance tests)");

  // experiment ---------------------------------------------------------
  auto* ex = app.add_subcommand("experiment", "full pipeline from a spec");
  std::string ex_spec, ex_out_dir;
  ex->add_option("--spec", ex_spec, "experiment spec (JSON)")->required();
  ex->add_option("--out-dir", ex_out_dir, "override the spec's out_dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints the message / help text
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (gen->parsed()) {
      nlohmann::json j;
      j["num_queries"] = gen_queries;
      j["items_per_query"] = gen_items;
      j["feature_dim"] = gen_features;
      j["seed"] = gen_seed;
      j["production_noise"] = gen_production_noise;
      j["label_noise"] = gen_label_noise;
      return finish(ultr_gen_data(j.dump().c_str(), gen_out.c_str()));
    }

    if (sim->parsed()) {
      nlohmann::json j;
      j["truncation"] = sim_truncation;
      j["repetitions"] = sim_repetitions;
      j["seed"] = sim_seed;
      j["keep_latent"] = sim_keep_latent;
      j["drop_queries_without_relevant"] = !sim_keep_unrelevant;
      j["model"] = sim_model.to_json();
      return finish(ultr_simulate(sim_dataset.c_str(), j.dump().c_str(),
                                  sim_out.c_str()));
    }

    if (est->parsed()) {
      nlohmann::json j;
      if (est_max_rank > 0) j["max_rank"] = est_max_rank;
      j["strategy"] = est_strategy;
      j["min_impressions"] = est_min_impressions;
      return finish(ultr_estimate_propensities(est_log.c_str(), est_theta2,
                                               j.dump().c_str(),
                                               est_out.c_str()));
    }

    if (tr->parsed()) {
      if (tr_scheme != "oracle" && tr_clicks.empty()) {
        std::fprintf(stderr, "ultr: --clicks is required for scheme %s\n",
                     tr_scheme.c_str());
        return kExitValidation;
      }
      const nlohmann::json j = tr_flags.to_json(tr_scheme);
      return finish(ultr_train(tr_clicks.c_str(), tr_features.c_str(),
                               tr_props.empty() ? nullptr : tr_props.c_str(),
                               j.dump().c_str(), tr_out.c_str()));
    }

    if (ev->parsed()) {
      nlohmann::json j;
      j["cutoffs"] = ev_cutoffs;
      if (!ev_json_out.empty()) j["json_out"] = ev_json_out;
      if (!ev_per_query_out.empty()) j["per_query_out"] = ev_per_query_out;
      return finish(ultr_evaluate(ev_model.c_str(), ev_test.c_str(),
                                  j.dump().c_str(), ev_out.c_str()));
    }

    if (ex->parsed()) {
      std::ifstream in(ex_spec);
      if (!in) {
        std::fprintf(stderr, "ultr: cannot open spec '%s'\n", ex_spec.c_str());
        return kExitValidation;
      }
      std::ostringstream buffer;
      buffer << in.rdbuf();
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(buffer.str());
      } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "ultr: bad spec JSON: %s\n", e.what());
        return kExitValidation;
      }
      if (!ex_out_dir.empty()) j["out_dir"] = ex_out_dir;
      return finish(ultr_run_experiment(j.dump().c_str()));
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "ultr: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ultr: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
