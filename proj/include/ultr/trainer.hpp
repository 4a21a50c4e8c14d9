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
#ifndef ULTR_TRAINER_HPP_
#define ULTR_TRAINER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ultr/debias.hpp"
#include "ultr/types.hpp"

namespace ultr {

/*! \brief What the boosting rounds optimize and how pairs are weighted. */
enum class TrainScheme {
  kPlain,        // LambdaMART on clicks, no correction
  kRobust,       // pair weight 1/theta(rank of clicked item)
  kFixedTMinus,  // 1/(theta(rank clicked) * t_minus(rank unclicked))
  kOracle,       // LambdaMART on golden labels (bias-free upper bound)
};

TrainScheme train_scheme_from_string(const std::string& name);
std::string to_string(TrainScheme scheme);

struct TrainerConfig {
  int num_trees = 300;
  double learning_rate = 0.05;
  int max_leaves = 31;
  double feature_fraction = 0.9;
  double bagging_fraction = 0.9;
  int min_samples_per_leaf = 20;
  TrainScheme scheme = TrainScheme::kPlain;
  double sigma = 1.0;
  //! NDCG cutoff inside the |delta NDCG| pair weights; 0 = full list.
  int ndcg_cutoff = 0;
  //! Per-rank t^- constants (1-based); empty = all ones.
  std::vector<double> t_minus;
  //! Floor applied to propensities before inversion; 0 disables.
  double propensity_floor = 0.0;
  std::uint64_t seed = 0;
  int max_bins = 255;
  int threads = 1;

  std::string to_json() const;
  static TrainerConfig from_json(const std::string& json_text);
  std::uint64_t config_hash() const;
};

/*! \brief One axis-aligned regression tree stored as flat node arrays. */
struct RegressionTree {
  // Internal node i splits on feature[i] at threshold[i]; x <= threshold
  // goes left. Leaves have feature -1 and carry value[i].
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  int num_nodes() const { return static_cast<int>(feature.size()); }
  double predict_row(const double* x) const;
};

/*!
 * \brief Additive tree ensemble; prediction is
 * base_score + learning_rate * sum of tree outputs.
 *
 * Serialization is a versioned text format with hex floats, so files
 * round-trip bit-exactly and identical training runs produce identical
 * bytes.
 */
class TreeEnsemble {
 public:
  TreeEnsemble() = default;
  TreeEnsemble(double base_score, double learning_rate, int num_features)
      : base_score_(base_score), learning_rate_(learning_rate),
        num_features_(num_features) {}

  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  int num_features() const { return num_features_; }
  int num_trees() const { return static_cast<int>(trees_.size()); }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  void add_tree(RegressionTree tree) { trees_.push_back(std::move(tree)); }

  double predict_row(const double* x, int dim) const;
  std::vector<double> predict(const QueryCollection& q) const;

  std::string serialize() const;
  static TreeEnsemble deserialize(const std::string& text);
  void save(const std::string& path) const;
  static TreeEnsemble load(const std::string& path);

 private:
  double base_score_ = 0.0;
  double learning_rate_ = 0.05;
  int num_features_ = 0;
  std::vector<RegressionTree> trees_;
};

/*!
 * \brief Gradient-boosted lambda-rank training loop.
 *
 * Per round: lambda-gradients and curvatures from the configured scheme
 * (with |delta NDCG| pair weights against the current ranking), one
 * histogram-grown tree fit with Newton leaf values, added with shrinkage.
 * Deterministic for a fixed config and seed.
 *
 * `props` is required for the robust and fixed-t^- schemes and ignored by
 * plain and oracle. Oracle trains on golden labels; the others on clicks.
 */
TreeEnsemble train(const std::vector<QueryCollection>& collections,
                   const TrainerConfig& config,
                   const PropensityTable* props = nullptr);

std::vector<double> predict(const TreeEnsemble& model, const QueryCollection& q);

}  // namespace ultr

#endif  // ULTR_TRAINER_HPP_
