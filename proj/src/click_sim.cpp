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
#include "ultr/click_sim.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "ultr/dataset.hpp"

namespace ultr {

std::string SimulationConfig::to_json() const {
  nlohmann::json j;
  j["truncation"] = truncation_position;
  j["repetitions"] = repetitions;
  j["seed"] = seed;
  j["model"] = nlohmann::json::parse(model.to_json());
  j["drop_queries_without_relevant"] = drop_queries_without_relevant;
  j["keep_latent"] = keep_latent;
  return j.dump();
}

SimulationConfig SimulationConfig::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad simulation config JSON: ") + e.what());
  }
  SimulationConfig config;
  try {
    if (j.contains("truncation")) config.truncation_position = j["truncation"];
    if (j.contains("repetitions")) config.repetitions = j["repetitions"];
    if (j.contains("seed")) config.seed = j["seed"];
    if (j.contains("model")) {
      config.model = ExamModelConfig::from_json(j["model"].dump());
    }
    if (j.contains("drop_queries_without_relevant")) {
      config.drop_queries_without_relevant = j["drop_queries_without_relevant"];
    }
    if (j.contains("keep_latent")) config.keep_latent = j["keep_latent"];
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad simulation config JSON: ") + e.what());
  }
  return config;
}

double relevance_probability(int label) {
  if (label < kMinLabel || label > kMaxLabel) {
    throw ValidationError("golden label " + std::to_string(label) +
                          " outside {0..4}");
  }
  return static_cast<double>((1 << label) - 1) / 15.0;
}

std::vector<QueryCollection> simulate(const Dataset& dataset,
                                      const SimulationConfig& config) {
  if (config.truncation_position < 1) {
    throw ValidationError("truncation position must be >= 1");
  }
  if (config.repetitions < 1) {
    throw ValidationError("repetitions must be >= 1");
  }
  const ExaminationModel model = config.model.build();
  if (model.max_rank() < config.truncation_position) {
    throw ConfigError("examination model covers " +
                      std::to_string(model.max_rank()) +
                      " ranks but truncation is " +
                      std::to_string(config.truncation_position));
  }

  std::vector<QueryCollection> retained;
  for (const QueryCollection& q : dataset) {
    QueryCollection cut = truncate(q, config.truncation_position);
    if (cut.items.empty()) continue;
    if (config.drop_queries_without_relevant) {
      const bool any_positive =
          std::any_of(cut.items.begin(), cut.items.end(),
                      [](const Item& it) { return it.golden_label > 0; });
      if (!any_positive) continue;
    }
    retained.push_back(std::move(cut));
  }

  std::vector<QueryCollection> log;
  log.reserve(retained.size() * config.repetitions);
  for (const QueryCollection& q : retained) {
    for (int rep = 1; rep <= config.repetitions; ++rep) {
      Rng rng(derive_seed(config.seed, q.query_id, rep));
      QueryCollection sample = q;
      sample.repetition = rep;
      const std::vector<std::uint8_t> exams =
          model.sample_examinations(sample.n(), rng);
      for (Item& item : sample.items) {
        const bool relevant =
            rng.bernoulli(relevance_probability(item.golden_label));
        const bool examined = exams[item.initial_rank - 1] != 0;
        item.relevance = relevant;
        item.examined = examined;
        item.click = relevant && examined;
      }
      log.push_back(std::move(sample));
    }
  }
  return log;
}

void write_click_log(const std::string& path,
                     const std::vector<QueryCollection>& log,
                     const SimulationConfig& config,
                     const std::string& features_ref) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write click log '" + path + "'");
  out << "# ultr-clicklog v1\n";
  out << "# seed " << config.seed << '\n';
  out << "# model_hash " << config.model.config_hash() << '\n';
  out << "# truncation " << config.truncation_position << '\n';
  out << "# repetitions " << config.repetitions << '\n';
  out << "# latent " << (config.keep_latent ? 1 : 0) << '\n';
  out << "# features " << features_ref << '\n';
  for (const QueryCollection& q : log) {
    for (const Item& item : q.items) {
      if (!item.click) {
        throw StateError("click log entry without a click indicator");
      }
      out << q.query_id << ' ' << q.repetition << ' ' << item.initial_rank
          << ' ' << (*item.click ? 1 : 0);
      if (config.keep_latent) {
        if (!item.relevance || !item.examined) {
          throw StateError("keep_latent set but latent columns missing");
        }
        out << ' ' << (*item.relevance ? 1 : 0) << ' '
            << (*item.examined ? 1 : 0);
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing click log '" + path + "'");
}

ClickLogHeader read_click_log_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open click log '" + path + "'");
  ClickLogHeader header;
  std::string line;
  bool first = true;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    std::istringstream fields(line);
    std::string hash_mark, key;
    fields >> hash_mark >> key;
    if (first) {
      if (key != "ultr-clicklog") {
        throw ParseError(path, 1, "not a ultr click log");
      }
      first = false;
      continue;
    }
    if (key == "seed") fields >> header.seed;
    else if (key == "model_hash") fields >> header.model_hash;
    else if (key == "truncation") fields >> header.truncation;
    else if (key == "repetitions") fields >> header.repetitions;
    else if (key == "latent") { int v = 0; fields >> v; header.has_latent = v != 0; }
    else if (key == "features") fields >> header.features_ref;
  }
  if (first) throw ParseError(path, 1, "missing click-log header");
  return header;
}

std::vector<QueryCollection> read_click_log(const std::string& path,
                                            const Dataset& features) {
  const ClickLogHeader header = read_click_log_header(path);
  std::map<std::string, const QueryCollection*> by_id;
  for (const QueryCollection& q : features) by_id[q.query_id] = &q;

  std::ifstream in(path);
  if (!in) throw IoError("cannot open click log '" + path + "'");

  std::vector<QueryCollection> out;
  // (query_id, repetition) -> index in `out`
  std::map<std::pair<std::string, int>, std::size_t> group_of;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string qid;
    int rep = 0, rank = 0, click = -1, relevance = -1, examined = -1;
    fields >> qid >> rep >> rank >> click;
    if (fields.fail() || click < 0 || click > 1) {
      throw ParseError(path, line_no, "bad click-log record");
    }
    if (header.has_latent) {
      fields >> relevance >> examined;
      if (fields.fail() || relevance < 0 || relevance > 1 || examined < 0 ||
          examined > 1) {
        throw ParseError(path, line_no, "bad latent columns");
      }
    }
    const auto feature_it = by_id.find(qid);
    if (feature_it == by_id.end()) {
      throw StateError("click log references query '" + qid +
                       "' absent from the feature file");
    }
    auto [group_it, inserted] = group_of.try_emplace({qid, rep}, out.size());
    if (inserted) {
      QueryCollection group = truncate(*feature_it->second, header.truncation);
      group.repetition = rep;
      for (Item& item : group.items) {
        item.click.reset();
        item.relevance.reset();
        item.examined.reset();
      }
      out.push_back(std::move(group));
    }
    QueryCollection& group = out[group_it->second];
    Item* target = nullptr;
    for (Item& item : group.items) {
      if (item.initial_rank == rank) { target = &item; break; }
    }
    if (target == nullptr) {
      throw ParseError(path, line_no,
                       "rank " + std::to_string(rank) +
                           " not present in query '" + qid + "'");
    }
    if (target->click) {
      throw ValidationError("duplicate rank " + std::to_string(rank) +
                            " for query '" + qid + "' repetition " +
                            std::to_string(rep));
    }
    target->click = click != 0;
    if (header.has_latent) {
      target->relevance = relevance != 0;
      target->examined = examined != 0;
    }
  }
  for (const QueryCollection& q : out) {
    for (const Item& item : q.items) {
      if (!item.click) {
        throw StateError("query '" + q.query_id + "' repetition " +
                         std::to_string(q.repetition) + " misses rank " +
                         std::to_string(item.initial_rank) +
                         " in the click log");
      }
    }
  }
  return out;
}

}  // namespace ultr
