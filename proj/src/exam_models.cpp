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
#include "ultr/exam_models.hpp"

#include <algorithm>
#include <limits>

#include "json.hpp"

namespace ultr {

ExamVariant exam_variant_from_string(const std::string& name) {
  if (name == "independent") return ExamVariant::kIndependent;
  if (name == "continuous") return ExamVariant::kContinuous;
  if (name == "row_skipping" || name == "row-skipping") {
    return ExamVariant::kRowSkipping;
  }
  throw ConfigError("unknown examination model variant '" + name + "'");
}

std::string to_string(ExamVariant variant) {
  switch (variant) {
    case ExamVariant::kIndependent: return "independent";
    case ExamVariant::kContinuous: return "continuous";
    case ExamVariant::kRowSkipping: return "row_skipping";
  }
  return "?";
}

ThetaSource ThetaSource::inverse_rank() { return ThetaSource(); }

ThetaSource ThetaSource::table(std::vector<double> values) {
  if (values.empty()) throw ValidationError("theta table must be non-empty");
  for (double v : values) {
    if (!(v > 0.0) || v > 1.0) {
      throw ValidationError("theta values must lie in (0,1]");
    }
  }
  ThetaSource out;
  out.table_ = std::move(values);
  return out;
}

double ThetaSource::at(int rank) const {
  if (rank < 1) throw ValidationError("rank must be >= 1");
  if (table_.empty()) return 1.0 / static_cast<double>(rank);
  if (rank > static_cast<int>(table_.size())) {
    throw ValidationError("rank " + std::to_string(rank) +
                          " beyond theta table of size " +
                          std::to_string(table_.size()));
  }
  return table_[rank - 1];
}

int ThetaSource::max_rank() const {
  return table_.empty() ? std::numeric_limits<int>::max()
                        : static_cast<int>(table_.size());
}

ExaminationModel ExaminationModel::independent(ThetaSource theta) {
  ExaminationModel model;
  model.variant_ = ExamVariant::kIndependent;
  model.theta_ = std::move(theta);
  return model;
}

ExaminationModel ExaminationModel::continuous(ThetaSource theta) {
  // Top-down, no-skipping browsing is only consistent with a theta that
  // never increases with rank.
  if (!theta.is_inverse_rank()) {
    const auto& values = theta.values();
    for (std::size_t k = 1; k < values.size(); ++k) {
      if (values[k] > values[k - 1]) {
        throw ValidationError(
            "continuous examination requires non-increasing theta");
      }
    }
  }
  ExaminationModel model;
  model.variant_ = ExamVariant::kContinuous;
  model.theta_ = std::move(theta);
  return model;
}

ExaminationModel ExaminationModel::row_skipping(
    GridLayout layout, double gamma, std::vector<double> continue_probs) {
  if (layout.total_items() < 1) {
    throw ValidationError("row-skipping model needs a non-empty layout");
  }
  if (gamma < 0.0 || gamma >= 1.0) {
    // gamma = 1 makes every theta zero, which breaks the positivity
    // assumption the whole framework rests on.
    throw ValidationError("gamma must lie in [0,1)");
  }
  if (static_cast<int>(continue_probs.size()) < layout.total_items()) {
    throw ValidationError("continue probabilities must cover every rank");
  }
  for (double c : continue_probs) {
    if (!(c > 0.0) || c > 1.0) {
      throw ValidationError("continue probabilities must lie in (0,1]");
    }
  }
  ExaminationModel model;
  model.variant_ = ExamVariant::kRowSkipping;
  model.layout_ = std::move(layout);
  model.gamma_ = gamma;
  model.continue_probs_ = std::move(continue_probs);
  return model;
}

ExaminationModel ExaminationModel::row_skipping(GridLayout layout, double gamma,
                                                double continue_prob) {
  std::vector<double> probs(layout.total_items(), continue_prob);
  return row_skipping(std::move(layout), gamma, std::move(probs));
}

int ExaminationModel::max_rank() const {
  return variant_ == ExamVariant::kRowSkipping ? layout_.total_items()
                                               : theta_.max_rank();
}

double ExaminationModel::row_traverse_product(int row) const {
  double prod = 1.0;
  const int start = layout_.items_before(row);
  for (int v = start + 1; v <= start + layout_.row_size(row); ++v) {
    prod *= continue_probs_[v - 1];
  }
  return prod;
}

double ExaminationModel::row_skip_theta(int rank) const {
  const int row = layout_.row_of(rank);
  double theta = 1.0;
  for (int m = 1; m < row; ++m) {
    theta *= (1.0 - gamma_) * row_traverse_product(m) + gamma_;
  }
  theta *= 1.0 - gamma_;
  for (int v = layout_.items_before(row) + 1; v < rank; ++v) {
    theta *= continue_probs_[v - 1];
  }
  return theta;
}

double ExaminationModel::marginal(int rank) const {
  if (rank < 1 || rank > max_rank()) {
    throw ValidationError("rank " + std::to_string(rank) +
                          " outside the model's range");
  }
  return variant_ == ExamVariant::kRowSkipping ? row_skip_theta(rank)
                                               : theta_.at(rank);
}

double ExaminationModel::joint(int rank1, int rank2) const {
  if (rank1 == rank2) {
    throw ValidationError("joint probability needs two distinct ranks");
  }
  const int h = std::min(rank1, rank2);
  const int w = std::max(rank1, rank2);
  switch (variant_) {
    case ExamVariant::kIndependent:
      return marginal(h) * marginal(w);
    case ExamVariant::kContinuous:
      return std::min(marginal(h), marginal(w));
    case ExamVariant::kRowSkipping:
      break;
  }
  const int row_h = layout_.row_of(h);
  const int row_w = layout_.row_of(w);
  double p = marginal(h);
  if (row_h == row_w) {
    for (int v = h; v < w; ++v) p *= continue_probs_[v - 1];
    return p;
  }
  // Survive the rest of h's row (including the stop decision after its last
  // item), then either skip or fully traverse each intermediate row, then
  // enter w's row and reach w.
  for (int v = h; v <= layout_.items_before(row_h) + layout_.row_size(row_h);
       ++v) {
    p *= continue_probs_[v - 1];
  }
  for (int m = row_h + 1; m < row_w; ++m) {
    p *= (1.0 - gamma_) * row_traverse_product(m) + gamma_;
  }
  p *= 1.0 - gamma_;
  for (int v = layout_.items_before(row_w) + 1; v < w; ++v) {
    p *= continue_probs_[v - 1];
  }
  return p;
}

std::vector<std::uint8_t> ExaminationModel::sample_examinations(int n,
                                                                Rng& rng) const {
  if (n < 1) throw ValidationError("need at least one rank to sample");
  if (n > max_rank()) {
    throw ValidationError("model not defined up to rank " + std::to_string(n));
  }
  std::vector<std::uint8_t> e(n, 0);
  switch (variant_) {
    case ExamVariant::kIndependent: {
      for (int k = 1; k <= n; ++k) {
        e[k - 1] = rng.bernoulli(theta_.at(k)) ? 1 : 0;
      }
      return e;
    }
    case ExamVariant::kContinuous: {
      // Last examined position d: P{d=k} = theta(k) - theta(k+1) below n,
      // P{d=n} = theta(n), and the leftover 1 - theta(1) lands on d=0
      // (nothing examined). Examinations are the prefix 1..d.
      const double u = rng.uniform();
      int d = 0;  // 0 = nothing examined, mass 1 - theta(1)
      for (int k = n; k >= 1; --k) {
        if (u < theta_.at(k)) {  // u < theta(k) <=> d >= k
          d = k;
          break;
        }
      }
      for (int k = 1; k <= d; ++k) e[k - 1] = 1;
      return e;
    }
    case ExamVariant::kRowSkipping:
      break;
  }
  // Behavioural simulation of the grid process.
  const int rows = layout_.num_rows();
  for (int m = 1; m <= rows; ++m) {
    const int start = layout_.items_before(m);
    if (start >= n) break;
    if (rng.bernoulli(gamma_)) continue;  // row skipped
    const int row_end = start + layout_.row_size(m);
    for (int v = start + 1; v <= row_end; ++v) {
      if (v <= n) e[v - 1] = 1;
      if (rng.bernoulli(1.0 - continue_probs_[v - 1])) return e;  // stop
    }
  }
  return e;
}

PropensityTable make_propensity_table(const ExaminationModel& model,
                                      int max_rank) {
  if (max_rank < 1) throw ValidationError("max_rank must be >= 1");
  if (max_rank > model.max_rank()) {
    throw ValidationError("model not defined up to rank " +
                          std::to_string(max_rank));
  }
  PropensityTable table;
  for (int k = 1; k <= max_rank; ++k) table.set_theta(k, model.marginal(k));
  for (int k1 = 1; k1 <= max_rank; ++k1) {
    for (int k2 = k1 + 1; k2 <= max_rank; ++k2) {
      table.set_psi(k1, k2, model.joint(k1, k2));
    }
  }
  table.validate();
  return table;
}

ExaminationModel ExamModelConfig::build() const {
  ThetaSource theta = theta_inverse_rank ? ThetaSource::inverse_rank()
                                         : ThetaSource::table(theta_table);
  switch (variant) {
    case ExamVariant::kIndependent:
      return ExaminationModel::independent(std::move(theta));
    case ExamVariant::kContinuous:
      return ExaminationModel::continuous(std::move(theta));
    case ExamVariant::kRowSkipping: {
      GridLayout layout(row_sizes);
      std::vector<double> probs = continue_table;
      if (probs.empty()) {
        probs.assign(layout.total_items(), continue_prob);
      }
      return ExaminationModel::row_skipping(std::move(layout), gamma,
                                            std::move(probs));
    }
  }
  throw ConfigError("unhandled examination model variant");
}

std::string ExamModelConfig::to_json() const {
  nlohmann::json j;
  j["variant"] = to_string(variant);
  j["theta"] = theta_inverse_rank ? nlohmann::json("inverse_rank")
                                  : nlohmann::json(theta_table);
  if (variant == ExamVariant::kRowSkipping) {
    j["gamma"] = gamma;
    if (!continue_table.empty()) {
      j["continue_prob"] = continue_table;
    } else {
      j["continue_prob"] = continue_prob;
    }
    j["row_sizes"] = row_sizes;
  }
  return j.dump();
}

ExamModelConfig ExamModelConfig::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad examination model JSON: ") + e.what());
  }
  ExamModelConfig config;
  try {
    config.variant = exam_variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("theta")) {
      if (j["theta"].is_string()) {
        const std::string name = j["theta"].get<std::string>();
        if (name != "inverse_rank") {
          throw ConfigError("unknown theta spec '" + name + "'");
        }
        config.theta_inverse_rank = true;
      } else {
        config.theta_inverse_rank = false;
        config.theta_table = j["theta"].get<std::vector<double>>();
      }
    }
    if (j.contains("gamma")) config.gamma = j["gamma"].get<double>();
    if (j.contains("continue_prob")) {
      if (j["continue_prob"].is_number()) {
        config.continue_prob = j["continue_prob"].get<double>();
      } else {
        config.continue_table = j["continue_prob"].get<std::vector<double>>();
      }
    }
    if (j.contains("row_sizes")) {
      config.row_sizes = j["row_sizes"].get<std::vector<int>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad examination model JSON: ") + e.what());
  }
  return config;
}

std::uint64_t ExamModelConfig::config_hash() const {
  return fnv1a64(to_json());
}

}  // namespace ultr
