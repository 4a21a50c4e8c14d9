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
#include "ultr/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "ultr/random.hpp"

namespace ultr {

namespace {

constexpr double kMinSumHessian = 1e-3;
constexpr double kHessEps = 1e-12;

void static_parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2 * threads) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const int begin = static_cast<int>(static_cast<long>(n) * t / threads);
    const int end = static_cast<int>(static_cast<long>(n) * (t + 1) / threads);
    pool.emplace_back([&fn, begin, end] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& worker : pool) worker.join();
}

double label_gain(int label) { return static_cast<double>((1 << label) - 1); }

//! Quantile-ish bin boundaries; boundary[b] is the inclusive upper bound of
//! bin b, the last boundary is +inf.
struct BinMapper {
  std::vector<std::vector<double>> upper_bounds;

  static BinMapper build(const std::vector<double>& features, int num_items,
                         int num_features, int max_bins) {
    BinMapper mapper;
    mapper.upper_bounds.resize(num_features);
    std::vector<double> column(num_items);
    for (int f = 0; f < num_features; ++f) {
      for (int i = 0; i < num_items; ++i) {
        column[i] = features[static_cast<std::size_t>(i) * num_features + f];
      }
      std::sort(column.begin(), column.end());
      column.erase(std::unique(column.begin(), column.end()), column.end());
      auto& bounds = mapper.upper_bounds[f];
      const int distinct = static_cast<int>(column.size());
      if (distinct <= max_bins) {
        bounds.reserve(distinct);
        for (int v = 0; v + 1 < distinct; ++v) {
          bounds.push_back((column[v] + column[v + 1]) / 2.0);
        }
      } else {
        bounds.reserve(max_bins);
        for (int b = 1; b < max_bins; ++b) {
          const int lo = static_cast<int>(
              static_cast<long>(distinct) * b / max_bins);
          bounds.push_back((column[lo - 1] + column[lo]) / 2.0);
        }
        bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
      }
      bounds.push_back(std::numeric_limits<double>::infinity());
    }
    return mapper;
  }

  int num_bins(int f) const { return static_cast<int>(upper_bounds[f].size()); }

  int bin_of(int f, double value) const {
    const auto& bounds = upper_bounds[f];
    return static_cast<int>(
        std::lower_bound(bounds.begin(), bounds.end(), value) - bounds.begin());
  }
};

struct FlatData {
  int num_items = 0;
  int num_features = 0;
  std::vector<double> features;      // row-major
  std::vector<std::uint8_t> bins;    // row-major
  std::vector<int> labels;
  std::vector<int> ranks;
  std::vector<int> boundaries;       // collection offsets, size m+1
};

FlatData flatten(const std::vector<QueryCollection>& collections,
                 bool use_golden_labels) {
  if (collections.empty()) throw StateError("no training collections");
  if (collections.front().items.empty()) {
    throw ValidationError("empty training collection");
  }
  FlatData data;
  data.num_features = static_cast<int>(collections.front().items.front().features.size());
  data.boundaries.push_back(0);
  for (const QueryCollection& q : collections) {
    if (q.items.empty()) throw ValidationError("empty training collection");
    for (const Item& item : q.items) {
      if (static_cast<int>(item.features.size()) != data.num_features) {
        throw ValidationError("inconsistent feature dimension in query '" +
                              q.query_id + "'");
      }
      data.features.insert(data.features.end(), item.features.begin(),
                           item.features.end());
      if (use_golden_labels) {
        data.labels.push_back(item.golden_label);
      } else {
        if (!item.click) {
          throw StateError("query '" + q.query_id +
                           "': click indicator missing");
        }
        data.labels.push_back(*item.click ? 1 : 0);
      }
      data.ranks.push_back(item.initial_rank);
      ++data.num_items;
    }
    data.boundaries.push_back(data.num_items);
  }
  return data;
}

struct GrowingNode {
  // Node of the tree under construction; split_bin drives training-time
  // routing, threshold the serialized model.
  int feature = -1;
  int split_bin = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct LeafState {
  int node = 0;
  std::vector<int> items;
  double sum_grad = 0.0;
  double sum_hess = 0.0;
  // best candidate split
  double gain = -1.0;
  int feature = -1;
  int bin = -1;
};

struct SplitCandidate {
  double gain = -1.0;
  int feature = -1;
  int bin = -1;
};

class TreeGrower {
 public:
  TreeGrower(const FlatData& data, const BinMapper& mapper,
             const std::vector<double>& grads, const std::vector<double>& hess,
             const TrainerConfig& config, const std::vector<int>& feature_subset)
      : data_(data), mapper_(mapper), grads_(grads), hess_(hess),
        config_(config), features_(feature_subset) {}

  RegressionTree grow(std::vector<int> root_items) {
    nodes_.clear();
    nodes_.emplace_back();
    LeafState root;
    root.node = 0;
    root.items = std::move(root_items);
    accumulate(root);
    find_best_split(root);
    std::vector<LeafState> leaves;
    leaves.push_back(std::move(root));

    while (static_cast<int>(leaves.size()) < config_.max_leaves) {
      int best = -1;
      for (int i = 0; i < static_cast<int>(leaves.size()); ++i) {
        if (leaves[i].gain > 0.0 && (best < 0 || leaves[i].gain > leaves[best].gain)) {
          best = i;
        }
      }
      if (best < 0) break;
      split_leaf(leaves, best);
    }

    for (LeafState& leaf : leaves) {
      nodes_[leaf.node].value = -leaf.sum_grad / (leaf.sum_hess + kHessEps);
    }
    RegressionTree tree;
    tree.feature.reserve(nodes_.size());
    for (const GrowingNode& node : nodes_) {
      tree.feature.push_back(node.feature);
      tree.threshold.push_back(node.threshold);
      tree.left.push_back(node.left);
      tree.right.push_back(node.right);
      tree.value.push_back(node.value);
    }
    return tree;
  }

  //! Leaf routing by bin index, exactly consistent with threshold routing.
  double route_by_bins(int item) const {
    int node = 0;
    while (nodes_[node].feature >= 0) {
      const int f = nodes_[node].feature;
      const int bin = data_.bins[static_cast<std::size_t>(item) * data_.num_features + f];
      node = bin <= nodes_[node].split_bin ? nodes_[node].left
                                           : nodes_[node].right;
    }
    return nodes_[node].value;
  }

 private:
  void accumulate(LeafState& leaf) const {
    double g = 0.0, h = 0.0;
    for (int item : leaf.items) {
      g += grads_[item];
      h += hess_[item];
    }
    leaf.sum_grad = g;
    leaf.sum_hess = h;
  }

  void find_best_split(LeafState& leaf) const {
    leaf.gain = -1.0;
    leaf.feature = -1;
    leaf.bin = -1;
    if (static_cast<int>(leaf.items.size()) < 2 * config_.min_samples_per_leaf) {
      return;
    }
    const double parent_score =
        leaf.sum_grad * leaf.sum_grad / (leaf.sum_hess + kHessEps);
    const int num_features = static_cast<int>(features_.size());
    std::vector<SplitCandidate> candidates(num_features);

    static_parallel_for(num_features, config_.threads, [&](int fi) {
      const int f = features_[fi];
      const int bins = mapper_.num_bins(f);
      std::vector<double> hist_grad(bins, 0.0);
      std::vector<double> hist_hess(bins, 0.0);
      std::vector<int> hist_count(bins, 0);
      for (int item : leaf.items) {
        const int b = data_.bins[static_cast<std::size_t>(item) * data_.num_features + f];
        hist_grad[b] += grads_[item];
        hist_hess[b] += hess_[item];
        ++hist_count[b];
      }
      double left_grad = 0.0, left_hess = 0.0;
      int left_count = 0;
      SplitCandidate best;
      for (int b = 0; b + 1 < bins; ++b) {
        left_grad += hist_grad[b];
        left_hess += hist_hess[b];
        left_count += hist_count[b];
        const int right_count = static_cast<int>(leaf.items.size()) - left_count;
        if (left_count < config_.min_samples_per_leaf) continue;
        if (right_count < config_.min_samples_per_leaf) break;
        const double right_grad = leaf.sum_grad - left_grad;
        const double right_hess = leaf.sum_hess - left_hess;
        if (left_hess < kMinSumHessian || right_hess < kMinSumHessian) continue;
        const double gain = left_grad * left_grad / (left_hess + kHessEps) +
                            right_grad * right_grad / (right_hess + kHessEps) -
                            parent_score;
        if (gain > best.gain) {  // strict: ties keep the lower threshold
          best.gain = gain;
          best.feature = f;
          best.bin = b;
        }
      }
      candidates[fi] = best;
    });

    for (const SplitCandidate& candidate : candidates) {
      if (candidate.gain > leaf.gain) {
        leaf.gain = candidate.gain;
        leaf.feature = candidate.feature;
        leaf.bin = candidate.bin;
      }
    }
    if (leaf.gain <= 0.0) leaf.feature = -1;
  }

  void split_leaf(std::vector<LeafState>& leaves, int index) {
    LeafState& parent = leaves[index];
    const int f = parent.feature;
    const int bin = parent.bin;

    LeafState left_leaf, right_leaf;
    for (int item : parent.items) {
      const int b = data_.bins[static_cast<std::size_t>(item) * data_.num_features + f];
      (b <= bin ? left_leaf.items : right_leaf.items).push_back(item);
    }

    const int left_node = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const int right_node = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    GrowingNode& node = nodes_[parent.node];
    node.feature = f;
    node.split_bin = bin;
    node.threshold = mapper_.upper_bounds[f][bin];
    node.left = left_node;
    node.right = right_node;

    left_leaf.node = left_node;
    right_leaf.node = right_node;
    accumulate(left_leaf);
    accumulate(right_leaf);
    find_best_split(left_leaf);
    find_best_split(right_leaf);

    parent = std::move(left_leaf);
    leaves.push_back(std::move(right_leaf));
  }

  const FlatData& data_;
  const BinMapper& mapper_;
  const std::vector<double>& grads_;
  const std::vector<double>& hess_;
  const TrainerConfig& config_;
  const std::vector<int>& features_;
  std::vector<GrowingNode> nodes_;
};

//! Per-collection lambda and curvature accumulation (one boosting round).
class LambdaComputer {
 public:
  LambdaComputer(const FlatData& data, const TrainerConfig& config,
                 const PropensityTable* props)
      : data_(data), config_(config), props_(props) {
    const int num_collections = static_cast<int>(data.boundaries.size()) - 1;
    inv_max_dcg_.resize(num_collections);
    cutoff_.resize(num_collections);
    for (int c = 0; c < num_collections; ++c) {
      const int begin = data.boundaries[c];
      const int end = data.boundaries[c + 1];
      const int n = end - begin;
      cutoff_[c] = config.ndcg_cutoff > 0 ? std::min(config.ndcg_cutoff, n) : n;
      std::vector<int> sorted_labels(data.labels.begin() + begin,
                                     data.labels.begin() + end);
      std::sort(sorted_labels.begin(), sorted_labels.end(), std::greater<int>());
      double ideal = 0.0;
      for (int pos = 1; pos <= cutoff_[c]; ++pos) {
        ideal += label_gain(sorted_labels[pos - 1]) / std::log2(pos + 1.0);
      }
      inv_max_dcg_[c] = ideal > 0.0 ? 1.0 / ideal : 0.0;
    }
    if (needs_theta()) {
      if (props_ == nullptr) {
        throw ConfigError("scheme '" + to_string(config.scheme) +
                          "' requires a propensity table");
      }
      int max_rank = 0;
      for (int rank : data.ranks) max_rank = std::max(max_rank, rank);
      theta_of_rank_.resize(max_rank + 1, 1.0);
      for (int rank = 1; rank <= max_rank; ++rank) {
        theta_of_rank_[rank] = props_->theta(rank);  // ConfigError if absent
      }
      if (config.scheme == TrainScheme::kFixedTMinus) {
        t_minus_of_rank_.assign(max_rank + 1, 1.0);
        if (!config.t_minus.empty()) {
          for (int rank = 1; rank <= max_rank; ++rank) {
            if (rank > static_cast<int>(config.t_minus.size())) {
              throw ConfigError("no t_minus entry for rank " +
                                std::to_string(rank));
            }
            t_minus_of_rank_[rank] = config.t_minus[rank - 1];
          }
        }
      }
    }
  }

  bool needs_theta() const {
    return config_.scheme == TrainScheme::kRobust ||
           config_.scheme == TrainScheme::kFixedTMinus;
  }

  void compute(int collection, const std::vector<double>& scores,
               std::vector<double>* grads, std::vector<double>* hess) const {
    const int begin = data_.boundaries[collection];
    const int end = data_.boundaries[collection + 1];
    const int n = end - begin;
    for (int i = begin; i < end; ++i) {
      (*grads)[i] = 0.0;
      (*hess)[i] = 0.0;
    }
    if (n < 2 || inv_max_dcg_[collection] == 0.0) return;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return scores[begin + a] > scores[begin + b];
    });
    std::vector<int> position(n);  // 1-based position in the current ranking
    for (int r = 0; r < n; ++r) position[order[r]] = r + 1;

    const double sigma = config_.sigma;
    const int cutoff = cutoff_[collection];
    const auto disc = [&](int pos) {
      return pos <= cutoff ? 1.0 / std::log2(pos + 1.0) : 0.0;
    };

    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        const int label_a = data_.labels[begin + a];
        const int label_b = data_.labels[begin + b];
        if (label_a == label_b) continue;
        const int hi = label_a > label_b ? a : b;
        const int lo = label_a > label_b ? b : a;
        const double delta = std::fabs(label_gain(data_.labels[begin + hi]) -
                                       label_gain(data_.labels[begin + lo])) *
                             std::fabs(disc(position[hi]) - disc(position[lo])) *
                             inv_max_dcg_[collection];
        double weight = 1.0;
        switch (config_.scheme) {
          case TrainScheme::kPlain:
          case TrainScheme::kOracle:
            break;
          case TrainScheme::kRobust:
            weight /= theta_of_rank_[data_.ranks[begin + hi]];
            break;
          case TrainScheme::kFixedTMinus:
            weight /= theta_of_rank_[data_.ranks[begin + hi]] *
                      t_minus_of_rank_[data_.ranks[begin + lo]];
            break;
        }
        const double mu =
            1.0 / (1.0 + std::exp(sigma * (scores[begin + hi] - scores[begin + lo])));
        const double pair_grad = -sigma * mu * delta * weight;
        const double pair_hess = sigma * sigma * mu * (1.0 - mu) * delta * weight;
        (*grads)[begin + hi] += pair_grad;
        (*grads)[begin + lo] -= pair_grad;
        (*hess)[begin + hi] += pair_hess;
        (*hess)[begin + lo] += pair_hess;
      }
    }
  }

 private:
  const FlatData& data_;
  const TrainerConfig& config_;
  const PropensityTable* props_;
  std::vector<double> inv_max_dcg_;
  std::vector<int> cutoff_;
  std::vector<double> theta_of_rank_;
  std::vector<double> t_minus_of_rank_;
};

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_serialized_double(const std::string& token) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    if (token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    throw ParseError("bad float '" + token + "' in model file");
  }
  return value;
}

}  // namespace

TrainScheme train_scheme_from_string(const std::string& name) {
  if (name == "plain") return TrainScheme::kPlain;
  if (name == "robust") return TrainScheme::kRobust;
  if (name == "fixed-tminus" || name == "fixed_tminus") {
    return TrainScheme::kFixedTMinus;
  }
  if (name == "oracle") return TrainScheme::kOracle;
  throw ConfigError("unknown training scheme '" + name + "'");
}

std::string to_string(TrainScheme scheme) {
  switch (scheme) {
    case TrainScheme::kPlain: return "plain";
    case TrainScheme::kRobust: return "robust";
    case TrainScheme::kFixedTMinus: return "fixed-tminus";
    case TrainScheme::kOracle: return "oracle";
  }
  return "?";
}

std::string TrainerConfig::to_json() const {
  nlohmann::json j;
  j["num_trees"] = num_trees;
  j["learning_rate"] = learning_rate;
  j["max_leaves"] = max_leaves;
  j["feature_fraction"] = feature_fraction;
  j["bagging_fraction"] = bagging_fraction;
  j["min_samples_per_leaf"] = min_samples_per_leaf;
  j["scheme"] = ultr::to_string(scheme);
  j["sigma"] = sigma;
  j["ndcg_cutoff"] = ndcg_cutoff;
  if (!t_minus.empty()) j["t_minus"] = t_minus;
  j["propensity_floor"] = propensity_floor;
  j["seed"] = seed;
  j["max_bins"] = max_bins;
  return j.dump();
}

TrainerConfig TrainerConfig::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad trainer config JSON: ") + e.what());
  }
  TrainerConfig config;
  try {
    if (j.contains("num_trees")) config.num_trees = j["num_trees"];
    if (j.contains("learning_rate")) config.learning_rate = j["learning_rate"];
    if (j.contains("max_leaves")) config.max_leaves = j["max_leaves"];
    if (j.contains("feature_fraction")) config.feature_fraction = j["feature_fraction"];
    if (j.contains("bagging_fraction")) config.bagging_fraction = j["bagging_fraction"];
    if (j.contains("min_samples_per_leaf")) {
      config.min_samples_per_leaf = j["min_samples_per_leaf"];
    }
    if (j.contains("scheme")) {
      config.scheme = train_scheme_from_string(j["scheme"].get<std::string>());
    }
    if (j.contains("sigma")) config.sigma = j["sigma"];
    if (j.contains("ndcg_cutoff")) config.ndcg_cutoff = j["ndcg_cutoff"];
    if (j.contains("t_minus")) {
      config.t_minus = j["t_minus"].get<std::vector<double>>();
    }
    if (j.contains("propensity_floor")) config.propensity_floor = j["propensity_floor"];
    if (j.contains("seed")) config.seed = j["seed"];
    if (j.contains("max_bins")) config.max_bins = j["max_bins"];
    if (j.contains("threads")) config.threads = j["threads"];
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad trainer config JSON: ") + e.what());
  }
  return config;
}

std::uint64_t TrainerConfig::config_hash() const { return fnv1a64(to_json()); }

double RegressionTree::predict_row(const double* x) const {
  int node = 0;
  while (feature[node] >= 0) {
    node = x[feature[node]] <= threshold[node] ? left[node] : right[node];
  }
  return value[node];
}

double TreeEnsemble::predict_row(const double* x, int dim) const {
  if (dim != num_features_) {
    throw ValidationError("feature dimension " + std::to_string(dim) +
                          " does not match the model's " +
                          std::to_string(num_features_));
  }
  double sum = 0.0;
  for (const RegressionTree& tree : trees_) sum += tree.predict_row(x);
  return base_score_ + learning_rate_ * sum;
}

std::vector<double> TreeEnsemble::predict(const QueryCollection& q) const {
  std::vector<double> scores;
  scores.reserve(q.items.size());
  for (const Item& item : q.items) {
    scores.push_back(
        predict_row(item.features.data(), static_cast<int>(item.features.size())));
  }
  return scores;
}

std::string TreeEnsemble::serialize() const {
  std::ostringstream out;
  out << "ultr-model v1\n";
  out << "num_features " << num_features_ << '\n';
  out << "base_score " << fmt_double(base_score_) << '\n';
  out << "learning_rate " << fmt_double(learning_rate_) << '\n';
  out << "num_trees " << trees_.size() << '\n';
  for (const RegressionTree& tree : trees_) {
    out << "tree " << tree.num_nodes() << '\n';
    for (int i = 0; i < tree.num_nodes(); ++i) {
      if (tree.feature[i] >= 0) {
        out << "split " << tree.feature[i] << ' '
            << (std::isinf(tree.threshold[i]) ? std::string("inf")
                                              : fmt_double(tree.threshold[i]))
            << ' ' << tree.left[i] << ' ' << tree.right[i] << '\n';
      } else {
        out << "leaf " << fmt_double(tree.value[i]) << '\n';
      }
    }
  }
  out << "end\n";
  return out.str();
}

TreeEnsemble TreeEnsemble::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ultr-model v1") {
    throw ParseError("not a ultr model file");
  }
  const auto expect_kv = [&](const std::string& key) {
    if (!std::getline(in, line)) throw ParseError("truncated model file");
    std::istringstream fields(line);
    std::string k, v;
    fields >> k >> v;
    if (k != key || v.empty()) {
      throw ParseError("expected '" + key + "' record in model file");
    }
    return v;
  };
  const int num_features = std::stoi(expect_kv("num_features"));
  const double base = parse_serialized_double(expect_kv("base_score"));
  const double rate = parse_serialized_double(expect_kv("learning_rate"));
  const int num_trees = std::stoi(expect_kv("num_trees"));

  TreeEnsemble model(base, rate, num_features);
  for (int t = 0; t < num_trees; ++t) {
    const int nodes = std::stoi(expect_kv("tree"));
    RegressionTree tree;
    for (int i = 0; i < nodes; ++i) {
      if (!std::getline(in, line)) throw ParseError("truncated model file");
      std::istringstream fields(line);
      std::string kind;
      fields >> kind;
      if (kind == "split") {
        int feature, left, right;
        std::string threshold;
        fields >> feature >> threshold >> left >> right;
        if (fields.fail()) throw ParseError("bad split record");
        tree.feature.push_back(feature);
        tree.threshold.push_back(parse_serialized_double(threshold));
        tree.left.push_back(left);
        tree.right.push_back(right);
        tree.value.push_back(0.0);
      } else if (kind == "leaf") {
        std::string value;
        fields >> value;
        if (fields.fail()) throw ParseError("bad leaf record");
        tree.feature.push_back(-1);
        tree.threshold.push_back(0.0);
        tree.left.push_back(-1);
        tree.right.push_back(-1);
        tree.value.push_back(parse_serialized_double(value));
      } else {
        throw ParseError("unknown node record '" + kind + "'");
      }
    }
    model.add_tree(std::move(tree));
  }
  if (!std::getline(in, line) || line != "end") {
    throw ParseError("missing end marker in model file");
  }
  return model;
}

void TreeEnsemble::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file '" + path + "'");
  out << serialize();
  if (!out) throw IoError("failed writing model file '" + path + "'");
}

TreeEnsemble TreeEnsemble::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

TreeEnsemble train(const std::vector<QueryCollection>& collections,
                   const TrainerConfig& config, const PropensityTable* props) {
  if (config.num_trees < 1) throw ConfigError("num_trees must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (config.max_leaves < 1) throw ConfigError("max_leaves must be >= 1");
  if (!(config.feature_fraction > 0.0) || config.feature_fraction > 1.0) {
    throw ConfigError("feature_fraction must lie in (0,1]");
  }
  if (!(config.bagging_fraction > 0.0) || config.bagging_fraction > 1.0) {
    throw ConfigError("bagging_fraction must lie in (0,1]");
  }
  if (config.max_bins < 2 || config.max_bins > 255) {
    throw ConfigError("max_bins must lie in [2,255]");
  }

  const bool oracle = config.scheme == TrainScheme::kOracle;
  FlatData data = flatten(collections, oracle);

  PropensityTable floored;
  const PropensityTable* effective_props = props;
  if (props != nullptr && config.propensity_floor > 0.0) {
    floored = props->floored(config.propensity_floor);
    effective_props = &floored;
  }

  const LambdaComputer lambda_computer(data, config, effective_props);
  const BinMapper mapper = BinMapper::build(data.features, data.num_items,
                                            data.num_features, config.max_bins);
  data.bins.resize(data.features.size());
  static_parallel_for(data.num_items, config.threads, [&](int i) {
    for (int f = 0; f < data.num_features; ++f) {
      data.bins[static_cast<std::size_t>(i) * data.num_features + f] =
          static_cast<std::uint8_t>(
              mapper.bin_of(f, data.features[static_cast<std::size_t>(i) * data.num_features + f]));
    }
  });

  const int num_collections = static_cast<int>(collections.size());
  std::vector<double> scores(data.num_items, 0.0);
  std::vector<double> grads(data.num_items, 0.0);
  std::vector<double> hess(data.num_items, 0.0);

  TreeEnsemble model(0.0, config.learning_rate, data.num_features);
  const Rng master(config.seed ^ 0x756c7472ULL);  // tag the trainer's streams

  for (int round = 0; round < config.num_trees; ++round) {
    static_parallel_for(num_collections, config.threads, [&](int c) {
      lambda_computer.compute(c, scores, &grads, &hess);
    });

    Rng bagging_rng = master.substream("bagging", round);
    std::vector<int> tree_items;
    tree_items.reserve(data.num_items);
    for (int c = 0; c < num_collections; ++c) {
      const bool keep = config.bagging_fraction >= 1.0 ||
                        bagging_rng.bernoulli(config.bagging_fraction);
      if (!keep) continue;
      for (int i = data.boundaries[c]; i < data.boundaries[c + 1]; ++i) {
        tree_items.push_back(i);
      }
    }
    if (tree_items.empty()) {
      for (int i = 0; i < data.num_items; ++i) tree_items.push_back(i);
    }

    bool any_gradient = false;
    for (int i : tree_items) {
      if (grads[i] != 0.0) { any_gradient = true; break; }
    }
    if (!any_gradient) {
      std::fprintf(stderr,
                   "[ultr] warning: round %d skipped (all-zero gradients)\n",
                   round);
      continue;
    }

    Rng feature_rng = master.substream("features", round);
    std::vector<int> feature_subset(data.num_features);
    std::iota(feature_subset.begin(), feature_subset.end(), 0);
    if (config.feature_fraction < 1.0) {
      const int keep = std::max(
          1, static_cast<int>(std::floor(config.feature_fraction *
                                             data.num_features + 0.5)));
      for (int i = 0; i < keep; ++i) {
        const int j = i + static_cast<int>(
                              feature_rng.below(data.num_features - i));
        std::swap(feature_subset[i], feature_subset[j]);
      }
      feature_subset.resize(keep);
      std::sort(feature_subset.begin(), feature_subset.end());
    }

    TreeGrower grower(data, mapper, grads, hess, config, feature_subset);
    RegressionTree tree = grower.grow(std::move(tree_items));
    static_parallel_for(data.num_items, config.threads, [&](int i) {
      scores[i] += config.learning_rate * grower.route_by_bins(i);
    });
    model.add_tree(std::move(tree));
  }
  return model;
}

std::vector<double> predict(const TreeEnsemble& model, const QueryCollection& q) {
  return model.predict(q);
}

}  // namespace ultr
