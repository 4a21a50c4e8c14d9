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
#include "ultr/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "ultr/dataset.hpp"
#include "ultr/propensity_est.hpp"
#include "ultr/random.hpp"

namespace fs = std::filesystem;

namespace ultr {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt_fixed(double v, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

}  // namespace

std::string GenDataConfig::to_json() const {
  nlohmann::json j;
  j["num_queries"] = num_queries;
  j["items_per_query"] = items_per_query;
  j["feature_dim"] = feature_dim;
  j["seed"] = seed;
  j["production_noise"] = production_noise;
  j["label_noise"] = label_noise;
  return j.dump();
}

GenDataConfig GenDataConfig::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad gen-data config JSON: ") + e.what());
  }
  GenDataConfig config;
  try {
    if (j.contains("num_queries")) config.num_queries = j["num_queries"];
    if (j.contains("items_per_query")) config.items_per_query = j["items_per_query"];
    if (j.contains("feature_dim")) config.feature_dim = j["feature_dim"];
    if (j.contains("seed")) config.seed = j["seed"];
    if (j.contains("production_noise")) config.production_noise = j["production_noise"];
    if (j.contains("label_noise")) config.label_noise = j["label_noise"];
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad gen-data config JSON: ") + e.what());
  }
  return config;
}

void generate_synthetic_dataset(const GenDataConfig& config,
                                const std::string& out_path) {
  if (config.num_queries < 1 || config.items_per_query < 1 ||
      config.feature_dim < 1) {
    throw ValidationError("gen-data counts must be positive");
  }

  // Planted relevance signal: z is the mean of the first half of the
  // features (at least one), so any two files with the same feature count
  // share the concept regardless of seed. The grade discretizes a noisy z;
  // the production ranking orders by a noisier z, which is what gives
  // position bias something to hide.
  const int signal_dims = std::max(1, config.feature_dim / 2);
  const double z_sigma =
      std::sqrt(static_cast<double>(signal_dims) / 12.0) / signal_dims;
  const double grade_sigma =
      std::sqrt(1.0 + config.label_noise * config.label_noise);
  // Standardized thresholds for grades 1..4; tails roughly 42/21/8/2 percent.
  const double thresholds[4] = {0.2, 0.8, 1.4, 2.0};

  Dataset data;
  data.reserve(config.num_queries);
  for (int qi = 0; qi < config.num_queries; ++qi) {
    QueryCollection q;
    q.query_id = std::to_string(qi + 1);
    Rng rng(derive_seed(config.seed, q.query_id, 0));
    std::vector<double> production_scores(config.items_per_query);
    for (int item_index = 0; item_index < config.items_per_query; ++item_index) {
      Item item;
      item.features.resize(config.feature_dim);
      for (double& x : item.features) x = rng.uniform();
      double z = 0.0;
      for (int k = 0; k < signal_dims; ++k) z += item.features[k];
      z /= signal_dims;
      const double centered = z - 0.5;
      const double graded =
          (centered + config.label_noise * z_sigma * rng.gaussian()) /
          (z_sigma * grade_sigma);
      int grade = 0;
      for (int g = 0; g < 4; ++g) {
        if (graded >= thresholds[g]) grade = g + 1;
      }
      item.golden_label = grade;
      production_scores[item_index] =
          centered + config.production_noise * z_sigma * rng.gaussian();
      q.items.push_back(std::move(item));
    }
    std::vector<int> order(q.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return production_scores[a] > production_scores[b];
    });
    QueryCollection ranked;
    ranked.query_id = q.query_id;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      Item item = std::move(q.items[order[rank]]);
      item.initial_rank = static_cast<int>(rank) + 1;
      ranked.items.push_back(std::move(item));
    }
    ranked.validate();
    data.push_back(std::move(ranked));
  }

  std::ostringstream header;
  header << "ultr synthetic dataset v1\n";
  header << "queries=" << config.num_queries
         << " items_per_query=" << config.items_per_query
         << " features=" << config.feature_dim << " seed=" << config.seed
         << '\n';
  header << "planted: z = mean(features 1.." << signal_dims
         << "); grade = fixed thresholds {0.2,0.8,1.4,2.0} on standardized"
         << " (z + " << fmt_double(config.label_noise)
         << "*sigma*N(0,1)); initial ranking by descending (z + "
         << fmt_double(config.production_noise) << "*sigma*N(0,1))";
  save_dataset(data, out_path, header.str());
}

PropensitySource propensity_source_from_string(const std::string& name) {
  if (name == "none") return PropensitySource::kNone;
  if (name == "true-model" || name == "true_model") {
    return PropensitySource::kTrueModel;
  }
  if (name == "estimated") return PropensitySource::kEstimated;
  if (name == "file") return PropensitySource::kFile;
  throw ConfigError("unknown propensity source '" + name + "'");
}

namespace {

std::string propensity_source_name(PropensitySource source) {
  switch (source) {
    case PropensitySource::kNone: return "none";
    case PropensitySource::kTrueModel: return "true-model";
    case PropensitySource::kEstimated: return "estimated";
    case PropensitySource::kFile: return "file";
  }
  return "?";
}

}  // namespace

std::string ExperimentSpec::to_json() const {
  nlohmann::json j;
  j["train"] = train_path;
  j["test"] = test_path;
  j["simulation"] = nlohmann::json::parse(simulation.to_json());
  j["trainer"] = nlohmann::json::parse(trainer.to_json());
  nlohmann::json runs_json = nlohmann::json::array();
  for (const TrainerRunSpec& run : runs) {
    nlohmann::json r;
    r["name"] = run.name;
    r["scheme"] = ultr::to_string(run.scheme);
    r["propensities"] = propensity_source_name(run.source);
    if (!run.propensity_file.empty()) r["propensity_file"] = run.propensity_file;
    runs_json.push_back(r);
  }
  j["runs"] = runs_json;
  j["cutoffs"] = cutoffs;
  j["baseline"] = baseline;
  j["out_dir"] = out_dir;
  j["intervention_impressions"] = intervention_impressions;
  return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad experiment spec JSON: ") + e.what());
  }
  ExperimentSpec spec;
  try {
    spec.train_path = j.at("train").get<std::string>();
    spec.test_path = j.at("test").get<std::string>();
    if (j.contains("simulation")) {
      spec.simulation = SimulationConfig::from_json(j["simulation"].dump());
    }
    if (j.contains("trainer")) {
      spec.trainer = TrainerConfig::from_json(j["trainer"].dump());
    }
    for (const auto& r : j.at("runs")) {
      TrainerRunSpec run;
      run.name = r.at("name").get<std::string>();
      run.scheme = train_scheme_from_string(r.at("scheme").get<std::string>());
      if (r.contains("propensities")) {
        run.source =
            propensity_source_from_string(r["propensities"].get<std::string>());
      }
      if (r.contains("propensity_file")) {
        run.propensity_file = r["propensity_file"].get<std::string>();
      }
      spec.runs.push_back(std::move(run));
    }
    if (j.contains("cutoffs")) {
      spec.cutoffs = j["cutoffs"].get<std::vector<int>>();
    }
    if (j.contains("baseline")) spec.baseline = j["baseline"].get<std::string>();
    spec.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("intervention_impressions")) {
      spec.intervention_impressions = j["intervention_impressions"];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad experiment spec JSON: ") + e.what());
  }
  return spec;
}

void ExperimentSpec::validate() const {
  if (!fs::exists(train_path)) {
    throw ValidationError("train dataset '" + train_path + "' does not exist");
  }
  if (!fs::exists(test_path)) {
    throw ValidationError("test dataset '" + test_path + "' does not exist");
  }
  if (runs.empty()) throw ValidationError("experiment needs at least one run");
  if (out_dir.empty()) throw ValidationError("out_dir must be set");
  std::vector<std::string> names;
  for (const TrainerRunSpec& run : runs) {
    if (run.name.empty()) throw ValidationError("run without a name");
    if (std::find(names.begin(), names.end(), run.name) != names.end()) {
      throw ValidationError("duplicate run name '" + run.name + "'");
    }
    names.push_back(run.name);
    const bool needs_props = run.scheme == TrainScheme::kRobust ||
                             run.scheme == TrainScheme::kFixedTMinus;
    if (needs_props && run.source == PropensitySource::kNone) {
      throw ValidationError("run '" + run.name +
                            "' needs a propensity source");
    }
    if (run.source == PropensitySource::kFile &&
        !fs::exists(run.propensity_file)) {
      throw ValidationError("propensity file '" + run.propensity_file +
                            "' does not exist");
    }
  }
  if (!baseline.empty() &&
      std::find(names.begin(), names.end(), baseline) == names.end()) {
    throw ValidationError("baseline '" + baseline + "' is not a run name");
  }
  for (int k : cutoffs) {
    if (k < 1) throw ValidationError("cutoffs must be >= 1");
  }
  if (intervention_impressions < 1000) {
    throw ValidationError("intervention_impressions must be >= 1000");
  }
}

namespace {

struct Manifest {
  nlohmann::json stages = nlohmann::json::object();
  nlohmann::json artifacts = nlohmann::json::array();
  std::string path;

  void stage(const std::string& name, const std::string& status) {
    stages[name] = status;
    flush(false);
  }
  void artifact(const std::string& name, const std::string& file,
                std::uint64_t config_hash) {
    nlohmann::json a;
    a["name"] = name;
    a["path"] = file;
    a["config_hash"] = config_hash;
    artifacts.push_back(a);
    flush(false);
  }
  void flush(bool complete) {
    nlohmann::json j;
    j["stages"] = stages;
    j["artifacts"] = artifacts;
    j["complete"] = complete;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << j.dump(2) << '\n';
  }
};

//! Per-rank mean relevance probability of the truncated training lists,
//! used to drive the estimated-propensity intervention simulation.
std::vector<double> rank_relevance_profile(const Dataset& train, int max_rank) {
  std::vector<double> sums(max_rank, 0.0);
  std::vector<int> counts(max_rank, 0);
  for (const QueryCollection& q : train) {
    for (const Item& item : q.items) {
      if (item.initial_rank <= max_rank) {
        sums[item.initial_rank - 1] += relevance_probability(item.golden_label);
        ++counts[item.initial_rank - 1];
      }
    }
  }
  for (int k = 0; k < max_rank; ++k) {
    sums[k] = counts[k] > 0 ? sums[k] / counts[k] : 0.1;
    sums[k] = std::clamp(sums[k], 0.02, 1.0);  // keep the ratio estimable
  }
  return sums;
}

PropensityTable estimate_propensities_by_intervention(
    const ExperimentSpec& spec, const Dataset& train,
    const ExaminationModel& model) {
  const int max_rank = spec.simulation.truncation_position;
  if (max_rank < 2) {
    PropensityTable trivial;
    trivial.set_theta(1, 1.0);  // anchor; nothing else to estimate
    return trivial;
  }
  std::vector<std::pair<int, int>> targets;
  for (int k = 2; k <= max_rank; ++k) targets.push_back({k, 0});
  for (int k1 = 1; k1 < max_rank; ++k1) targets.push_back({k1, k1 + 1});
  if (max_rank >= 3) targets.push_back({1, max_rank});

  const auto logs = simulate_intervention(
      model, rank_relevance_profile(train, max_rank), targets,
      spec.intervention_impressions * static_cast<std::int64_t>(targets.size()),
      0.5, spec.simulation.seed ^ 0x1e7e57ULL);

  std::vector<double> theta(max_rank, 1.0);
  for (int k = 2; k <= max_rank; ++k) {
    theta[k - 1] = std::clamp(estimate_marginal(logs.at({k, 0})), 1e-6, 1.0);
  }
  std::map<std::pair<int, int>, double> psi_estimates;
  const double theta2 = max_rank >= 2 ? theta[1] : 1.0;
  for (const auto& [key, log] : logs) {
    if (log.is_marginal()) continue;
    psi_estimates[key] = estimate_joint(log, theta2);
  }
  std::vector<std::string> warnings;
  PropensityTable table =
      extrapolate_joint(psi_estimates, theta, ExtrapolationStrategy::kModelFit,
                        max_rank, &warnings);
  for (const std::string& warning : warnings) {
    std::fprintf(stderr, "[ultr] %s\n", warning.c_str());
  }
  return table;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  fs::create_directories(spec.out_dir);

  Manifest manifest;
  manifest.path = (fs::path(spec.out_dir) / "manifest.json").string();
  const std::uint64_t spec_hash = fnv1a64(spec.to_json());

  ExperimentResult result;
  result.manifest_path = manifest.path;
  result.baseline = spec.baseline.empty() ? spec.runs.front().name : spec.baseline;

  std::string stage = "load";
  try {
    manifest.stage(stage, "running");
    const Dataset train_data = load_dataset(spec.train_path);
    const Dataset test = load_dataset(spec.test_path);
    manifest.stage(stage, "done");

    stage = "simulate";
    manifest.stage(stage, "running");
    const std::vector<QueryCollection> clicklog = simulate(train_data, spec.simulation);
    const std::string clicks_path =
        (fs::path(spec.out_dir) / "clicks.txt").string();
    write_click_log(clicks_path, clicklog, spec.simulation, spec.train_path);
    manifest.artifact("clicks", clicks_path,
                      fnv1a64(spec.simulation.to_json()));
    manifest.stage(stage, "done");

    const ExaminationModel model = spec.simulation.model.build();

    for (const TrainerRunSpec& run : spec.runs) {
      stage = "train:" + run.name;
      manifest.stage(stage, "running");

      PropensityTable table;
      const PropensityTable* props = nullptr;
      if (run.source != PropensitySource::kNone) {
        switch (run.source) {
          case PropensitySource::kTrueModel:
            table = make_propensity_table(model,
                                          spec.simulation.truncation_position);
            break;
          case PropensitySource::kEstimated:
            table = estimate_propensities_by_intervention(spec, train_data, model);
            break;
          case PropensitySource::kFile:
            table = PropensityTable::load(run.propensity_file);
            break;
          case PropensitySource::kNone:
            break;
        }
        const std::string table_path =
            (fs::path(spec.out_dir) / ("propensities_" + run.name + ".txt"))
                .string();
        table.save(table_path);
        manifest.artifact("propensities:" + run.name, table_path, spec_hash);
        props = &table;
      }

      TrainerConfig config = spec.trainer;
      config.scheme = run.scheme;
      TreeEnsemble ensemble = train(clicklog, config, props);
      const std::string model_path =
          (fs::path(spec.out_dir) / ("model_" + run.name + ".txt")).string();
      ensemble.save(model_path);
      manifest.artifact("model:" + run.name, model_path, config.config_hash());
      manifest.stage(stage, "done");

      stage = "evaluate:" + run.name;
      manifest.stage(stage, "running");
      RunResult run_result;
      run_result.name = run.name;
      run_result.model_path = model_path;
      run_result.report = evaluate(ensemble, test, spec.cutoffs);
      const std::string report_base =
          (fs::path(spec.out_dir) / ("report_" + run.name)).string();
      run_result.report.save(report_base + ".txt", report_base + ".json",
                             report_base + "_per_query.txt");
      manifest.artifact("report:" + run.name, report_base + ".txt", spec_hash);
      result.runs.push_back(std::move(run_result));
      manifest.stage(stage, "done");
    }

    stage = "compare";
    manifest.stage(stage, "running");
    const RunResult* baseline_run = nullptr;
    for (const RunResult& run : result.runs) {
      if (run.name == result.baseline) baseline_run = &run;
    }
    if (baseline_run == nullptr) {
      throw StateError("baseline run missing from results");
    }

    std::vector<std::string> metric_names;
    for (int k : spec.cutoffs) metric_names.push_back("ndcg@" + std::to_string(k));
    metric_names.push_back("map");
    const int comparisons = static_cast<int>(
        (result.runs.size() - 1) * metric_names.size());

    std::ostringstream text;
    nlohmann::json jreport;
    jreport["baseline"] = result.baseline;
    jreport["bonferroni_comparisons"] = comparisons;
    text << "# baseline row is absolute; other rows are relative deltas vs '"
         << result.baseline << "'\n";
    text << "# * marks significance at 5% (paired two-sided t-test, "
            "Bonferroni x" << comparisons << ")\n";
    text << "run";
    for (const std::string& name : metric_names) text << '\t' << name;
    text << '\n';

    nlohmann::json jruns = nlohmann::json::array();
    for (const RunResult& run : result.runs) {
      nlohmann::json jrun;
      jrun["name"] = run.name;
      text << run.name;
      for (const std::string& metric : metric_names) {
        const double value = run.report.means.at(metric);
        jrun["means"][metric] = value;
        if (run.name == result.baseline) {
          text << '\t' << fmt_fixed(value, 4);
          continue;
        }
        const double base_value = baseline_run->report.means.at(metric);
        const double delta_pct =
            base_value != 0.0 ? (value / base_value - 1.0) * 100.0 : 0.0;
        std::string mark;
        double p_bonferroni = 1.0;
        try {
          const TTestResult tt = paired_t_test(run.report.per_query.at(metric),
                                               baseline_run->report.per_query.at(metric));
          p_bonferroni = std::min(1.0, tt.p * comparisons);
          if (p_bonferroni < 0.05) mark = "*";
        } catch (const DegenerateError&) {
          mark = "";  // identical per-query values: no evidence either way
        }
        jrun["delta_pct"][metric] = delta_pct;
        jrun["p_bonferroni"][metric] = p_bonferroni;
        text << '\t' << (delta_pct >= 0 ? "+" : "") << fmt_fixed(delta_pct, 2)
             << '%' << mark;
      }
      text << '\n';
      jruns.push_back(jrun);
    }
    jreport["runs"] = jruns;

    result.report_text_path =
        (fs::path(spec.out_dir) / "comparison.txt").string();
    result.report_json_path =
        (fs::path(spec.out_dir) / "comparison.json").string();
    {
      std::ofstream out(result.report_text_path);
      if (!out) throw IoError("cannot write comparison report");
      out << text.str();
    }
    {
      std::ofstream out(result.report_json_path);
      if (!out) throw IoError("cannot write comparison report");
      out << jreport.dump(2) << '\n';
    }
    manifest.artifact("comparison", result.report_text_path, spec_hash);
    manifest.stage(stage, "done");
    manifest.flush(true);
  } catch (const Error& e) {
    manifest.stage(stage, "failed");
    throw Error(e.code(), "stage '" + stage + "' failed: " + e.what());
  } catch (const std::exception& e) {
    manifest.stage(stage, "failed");
    throw Error(ErrorCode::kInternal,
                "stage '" + stage + "' failed: " + e.what());
  }
  return result;
}

}  // namespace ultr
