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
#ifndef ULTR_EXAM_MODELS_HPP_
#define ULTR_EXAM_MODELS_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ultr/debias.hpp"
#include "ultr/random.hpp"
#include "ultr/types.hpp"

namespace ultr {

enum class ExamVariant { kIndependent, kContinuous, kRowSkipping };

ExamVariant exam_variant_from_string(const std::string& name);
std::string to_string(ExamVariant variant);

/*!
 * \brief Marginal examination probabilities as a function of rank: either
 * the parametric 1/rank curve (defined for every rank) or an explicit table.
 */
class ThetaSource {
 public:
  static ThetaSource inverse_rank();
  //! values[k-1] is theta(k); must lie in (0,1].
  static ThetaSource table(std::vector<double> values);

  double at(int rank) const;
  //! Largest defined rank (INT_MAX for the parametric curve).
  int max_rank() const;
  bool is_inverse_rank() const { return table_.empty(); }
  const std::vector<double>& values() const { return table_; }

 private:
  std::vector<double> table_;  // empty means 1/rank
};

/*!
 * \brief A user-browsing model: marginal and joint examination
 * probabilities plus a sampler whose empirical frequencies converge to them.
 *
 * Independent: every position examined independently, psi = theta*theta.
 * Continuous: strict top-down browsing, psi = min(theta, theta); requires a
 * non-increasing theta.
 * RowSkipping: grid browsing; whole rows skipped with probability gamma and
 * browsing stops after an examined item at rank v with probability 1 - C_v.
 */
class ExaminationModel {
 public:
  static ExaminationModel independent(ThetaSource theta);
  static ExaminationModel continuous(ThetaSource theta);
  static ExaminationModel row_skipping(GridLayout layout, double gamma,
                                       std::vector<double> continue_probs);
  //! Row-skipping with a single continue probability for every rank.
  static ExaminationModel row_skipping(GridLayout layout, double gamma,
                                       double continue_prob);

  ExamVariant variant() const { return variant_; }
  //! theta(rank); rank beyond the defined range is a ValidationError.
  double marginal(int rank) const;
  //! psi(rank1, rank2); symmetric, ranks must differ.
  double joint(int rank1, int rank2) const;
  //! Largest rank the model is defined for.
  int max_rank() const;

  //! One examination indicator vector for ranks 1..n.
  std::vector<std::uint8_t> sample_examinations(int n, Rng& rng) const;

  const GridLayout& layout() const { return layout_; }
  double gamma() const { return gamma_; }

 private:
  ExaminationModel() = default;

  double row_skip_theta(int rank) const;
  double row_traverse_product(int row) const;  // prod of C_v over a full row

  ExamVariant variant_ = ExamVariant::kIndependent;
  ThetaSource theta_;
  GridLayout layout_;
  double gamma_ = 0.0;
  std::vector<double> continue_probs_;  // 1-based by rank (index 0 unused)
};

//! Tabulates theta and psi for all ranks up to max_rank.
PropensityTable make_propensity_table(const ExaminationModel& model,
                                      int max_rank);

/*!
 * \brief Serializable description of an examination model (the form used in
 * config files and click-log headers).
 */
struct ExamModelConfig {
  ExamVariant variant = ExamVariant::kContinuous;
  bool theta_inverse_rank = true;
  std::vector<double> theta_table;    // used when !theta_inverse_rank
  double gamma = 0.0;                 // row skipping only
  double continue_prob = 1.0;         // scalar C_v
  std::vector<double> continue_table; // per-rank C_v, overrides the scalar
  std::vector<int> row_sizes;         // row skipping only

  ExaminationModel build() const;
  std::string to_json() const;
  static ExamModelConfig from_json(const std::string& json_text);
  //! Stable hash of the canonical JSON form (for log headers / manifests).
  std::uint64_t config_hash() const;
};

}  // namespace ultr

#endif  // ULTR_EXAM_MODELS_HPP_
