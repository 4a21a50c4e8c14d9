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
#include "ultr/propensity_est.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ultr {

namespace {

void check_buckets(const InterventionLog& log, const EstimatorOptions& options) {
  if (log.swap_impressions == 0 || log.noswap_impressions == 0) {
    throw StateError("intervention log has an empty bucket");
  }
  if (log.swap_impressions < options.min_impressions ||
      log.noswap_impressions < options.min_impressions) {
    throw InsufficientDataError(
        "bucket below the minimum of " +
        std::to_string(options.min_impressions) + " impressions");
  }
}

}  // namespace

std::map<std::pair<int, int>, InterventionLog> load_intervention_log(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open intervention log '" + path + "'");
  std::map<std::pair<int, int>, InterventionLog> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string bucket;
    int k1 = 0, k2 = 0, c1 = -1, c2 = -1;
    fields >> bucket >> k1 >> k2 >> c1 >> c2;
    if (fields.fail() || k1 < 1 || k2 < 0 || c1 < 0 || c1 > 1 || c2 < 0 ||
        c2 > 1) {
      throw ParseError(path, line_no, "bad intervention record");
    }
    if (k2 == 0 && c2 != 0) {
      throw ParseError(path, line_no,
                       "marginal record (k2 = 0) must carry c2 = 0");
    }
    bool swapped;
    if (bucket == "swap") swapped = true;
    else if (bucket == "no_swap") swapped = false;
    else throw ParseError(path, line_no, "bucket must be swap or no_swap");

    InterventionLog& log = out[{k1, k2}];
    log.k1 = k1;
    log.k2 = k2;
    const int joint = k2 == 0 ? c1 : c1 * c2;
    if (swapped) {
      ++log.swap_impressions;
      log.swap_joint_clicks += joint;
    } else {
      ++log.noswap_impressions;
      log.noswap_joint_clicks += joint;
    }
  }
  return out;
}

void save_intervention_log(
    const std::string& path,
    const std::vector<std::map<std::pair<int, int>, InterventionLog>>& parts) {
  // Aggregated counts expand back into per-impression lines; click order
  // within a bucket is immaterial to the estimators.
  std::ofstream out(path);
  if (!out) throw IoError("cannot write intervention log '" + path + "'");
  out << "# ultr-interventions v1\n";
  const auto emit = [&](const char* bucket, const InterventionLog& log,
                        std::int64_t impressions, std::int64_t joint_clicks) {
    for (std::int64_t i = 0; i < impressions; ++i) {
      const int c = i < joint_clicks ? 1 : 0;
      out << bucket << ' ' << log.k1 << ' ' << log.k2 << ' ' << c << ' '
          << (log.k2 == 0 ? 0 : c) << '\n';
    }
  };
  for (const auto& part : parts) {
    for (const auto& [key, log] : part) {
      emit("no_swap", log, log.noswap_impressions, log.noswap_joint_clicks);
      emit("swap", log, log.swap_impressions, log.swap_joint_clicks);
    }
  }
  if (!out) throw IoError("failed writing intervention log '" + path + "'");
}

double estimate_joint(const InterventionLog& log, double theta2_hat,
                      const EstimatorOptions& options) {
  if (log.is_marginal()) {
    throw ValidationError("estimate_joint needs a pair intervention");
  }
  if (!(theta2_hat > 0.0) || theta2_hat > 1.0) {
    throw ValidationError("theta(2) estimate must lie in (0,1]");
  }
  check_buckets(log, options);
  if (log.swap_joint_clicks == 0) {
    throw InsufficientDataError(
        "no joint clicks in the swap bucket; ratio undefined");
  }
  const double noswap_rate = static_cast<double>(log.noswap_joint_clicks) /
                             static_cast<double>(log.noswap_impressions);
  const double swap_rate = static_cast<double>(log.swap_joint_clicks) /
                           static_cast<double>(log.swap_impressions);
  return theta2_hat * noswap_rate / swap_rate;
}

double estimate_marginal(const InterventionLog& log,
                         const EstimatorOptions& options) {
  if (!log.is_marginal()) {
    throw ValidationError("estimate_marginal needs a single-position log");
  }
  check_buckets(log, options);
  if (log.swap_joint_clicks == 0) {
    throw InsufficientDataError(
        "no clicks in the swap bucket; ratio undefined");
  }
  const double noswap_rate = static_cast<double>(log.noswap_joint_clicks) /
                             static_cast<double>(log.noswap_impressions);
  const double swap_rate = static_cast<double>(log.swap_joint_clicks) /
                           static_cast<double>(log.swap_impressions);
  // theta(1) = 1 anchor; propensities only matter up to scale for ranking.
  return noswap_rate / swap_rate;
}

ExtrapolationStrategy extrapolation_strategy_from_string(
    const std::string& name) {
  if (name == "model_fit" || name == "model-fit") {
    return ExtrapolationStrategy::kModelFit;
  }
  if (name == "nearest_pair" || name == "nearest-pair") {
    return ExtrapolationStrategy::kNearestPair;
  }
  throw ConfigError("unknown extrapolation strategy '" + name + "'");
}

PropensityTable extrapolate_joint(
    const std::map<std::pair<int, int>, double>& estimates,
    const std::vector<double>& theta, ExtrapolationStrategy strategy,
    int max_rank, std::vector<std::string>* warnings) {
  if (estimates.empty()) {
    throw StateError("no psi estimates to extrapolate from");
  }
  if (static_cast<int>(theta.size()) < max_rank) {
    throw ValidationError("theta must cover ranks 1.." +
                          std::to_string(max_rank));
  }

  PropensityTable table;
  for (int k = 1; k <= max_rank; ++k) table.set_theta(k, theta[k - 1]);

  const auto clamp_into_bounds = [&](int k1, int k2, double value) {
    const double upper = std::min(theta[k1 - 1], theta[k2 - 1]);
    const double lower = 1e-12;
    double clamped = std::clamp(value, lower, upper);
    if (clamped != value && warnings) {
      std::ostringstream msg;
      msg << "psi(" << k1 << "," << k2 << ") estimate " << value
          << " clamped to " << clamped;
      warnings->push_back(msg.str());
    }
    return clamped;
  };

  if (strategy == ExtrapolationStrategy::kModelFit) {
    // Score the two closed forms on the estimated pairs and take the winner.
    double ss_independent = 0.0;
    double ss_continuous = 0.0;
    for (const auto& [ranks, value] : estimates) {
      const auto [k1, k2] = ranks;
      if (k1 > max_rank || k2 > max_rank) continue;
      const double indep = theta[k1 - 1] * theta[k2 - 1];
      const double cont = std::min(theta[k1 - 1], theta[k2 - 1]);
      ss_independent += (value - indep) * (value - indep);
      ss_continuous += (value - cont) * (value - cont);
    }
    const bool use_independent = ss_independent <= ss_continuous;
    for (int k1 = 1; k1 <= max_rank; ++k1) {
      for (int k2 = k1 + 1; k2 <= max_rank; ++k2) {
        const double fitted = use_independent
                                  ? theta[k1 - 1] * theta[k2 - 1]
                                  : std::min(theta[k1 - 1], theta[k2 - 1]);
        table.set_psi(k1, k2, fitted);
      }
    }
    table.validate();
    return table;
  }

  // Nearest-pair copy on canonical (min, max) coordinates.
  for (int k1 = 1; k1 <= max_rank; ++k1) {
    for (int k2 = k1 + 1; k2 <= max_rank; ++k2) {
      const auto exact = estimates.find({k1, k2});
      double value;
      if (exact != estimates.end()) {
        value = exact->second;
      } else {
        long best_distance = -1;
        value = 0.0;
        for (const auto& [ranks, estimate] : estimates) {
          const long distance = std::labs(ranks.first - k1) +
                                std::labs(ranks.second - k2);
          if (best_distance < 0 || distance < best_distance) {
            best_distance = distance;
            value = estimate;
          }
        }
      }
      table.set_psi(k1, k2, clamp_into_bounds(k1, k2, value));
    }
  }
  table.validate();
  return table;
}

std::map<std::pair<int, int>, InterventionLog> simulate_intervention(
    const ExaminationModel& model, const std::vector<double>& relevance_probs,
    const std::vector<std::pair<int, int>>& targets, std::int64_t impressions,
    double swap_prob, std::uint64_t seed) {
  if (targets.empty()) throw ValidationError("no intervention targets");
  if (impressions < 1) throw ValidationError("impressions must be >= 1");
  if (!(swap_prob > 0.0) || swap_prob >= 1.0) {
    throw ValidationError("swap probability must lie in (0,1)");
  }
  const int n = static_cast<int>(relevance_probs.size());
  if (n < 2 || n > model.max_rank()) {
    throw ValidationError("relevance_probs must cover ranks 2..model range");
  }
  for (const auto& [k1, k2] : targets) {
    if (k1 < 1 || k1 > n || k2 < 0 || k2 > n) {
      throw ValidationError("intervention target out of range");
    }
    if (k2 != 0 && k2 <= k1) {
      throw ValidationError("pair targets must satisfy k1 < k2");
    }
  }

  std::map<std::pair<int, int>, InterventionLog> out;
  for (const auto& key : targets) {
    out[key].k1 = key.first;
    out[key].k2 = key.second;
  }

  Rng rng(seed);
  std::vector<std::uint8_t> relevant(n);
  std::vector<int> item_at(n);           // position index -> item index
  std::vector<int> position_of_item(n);  // inverse of item_at, 1-based
  for (std::int64_t t = 0; t < impressions; ++t) {
    const auto& [k1, k2] = targets[t % targets.size()];
    InterventionLog& log = out[{k1, k2}];

    for (int k = 0; k < n; ++k) {
      relevant[k] = rng.bernoulli(relevance_probs[k]) ? 1 : 0;
    }
    // item k starts at position k+1; a swap moves the target item(s) to the
    // top position(s) and the displaced item(s) take the vacated slots.
    for (int k = 0; k < n; ++k) item_at[k] = k;
    const bool swapped = rng.bernoulli(swap_prob);
    if (swapped) {
      std::swap(item_at[0], item_at[k1 - 1]);
      if (k2 != 0) std::swap(item_at[1], item_at[k2 - 1]);
    }
    for (int p = 0; p < n; ++p) position_of_item[item_at[p]] = p + 1;
    const std::vector<std::uint8_t> exams = model.sample_examinations(n, rng);
    const auto click_of_item = [&](int item) {
      return relevant[item] != 0 && exams[position_of_item[item] - 1] != 0;
    };
    const int c1 = click_of_item(k1 - 1) ? 1 : 0;
    const int joint = k2 == 0 ? c1 : c1 * (click_of_item(k2 - 1) ? 1 : 0);
    if (swapped) {
      ++log.swap_impressions;
      log.swap_joint_clicks += joint;
    } else {
      ++log.noswap_impressions;
      log.noswap_joint_clicks += joint;
    }
  }
  return out;
}

}  // namespace ultr
