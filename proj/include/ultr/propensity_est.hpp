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
#ifndef ULTR_PROPENSITY_EST_HPP_
#define ULTR_PROPENSITY_EST_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ultr/debias.hpp"
#include "ultr/exam_models.hpp"

namespace ultr {

/*!
 * \brief Aggregated swap-intervention impressions for one target.
 *
 * Pair targets (k1, k2): in the swap bucket the two items were shown at
 * positions 1 and 2 instead. Marginal targets (k2 == 0): the single item at
 * k1 was shown at position 1 in the swap bucket.
 */
struct InterventionLog {
  int k1 = 0;
  int k2 = 0;  // 0 marks a marginal (single-position) intervention
  std::int64_t swap_impressions = 0;
  std::int64_t noswap_impressions = 0;
  std::int64_t swap_joint_clicks = 0;    // c1*c2 for pairs, c1 for marginals
  std::int64_t noswap_joint_clicks = 0;

  bool is_marginal() const { return k2 == 0; }
};

struct EstimatorOptions {
  //! Buckets smaller than this are refused (wild-ratio guard).
  std::int64_t min_impressions = 100;
};

/*!
 * \brief Parses an intervention log file.
 *
 * Lines are `<bucket> <k1> <k2> <c1> <c2>` with bucket in {swap, no_swap};
 * k2 = 0 encodes a marginal intervention (c2 must then be 0). Returns one
 * aggregate per target, keyed by (k1, k2).
 */
std::map<std::pair<int, int>, InterventionLog> load_intervention_log(
    const std::string& path);

void save_intervention_log(
    const std::string& path,
    const std::vector<std::map<std::pair<int, int>, InterventionLog>>& parts);

/*!
 * \brief Joint-propensity ratio estimator:
 * psi_hat(k1,k2) = theta2_hat * (no-swap joint-click rate) / (swap joint-click rate).
 *
 * The intrinsic-relevance term cancels between the buckets, so the estimate
 * is invariant to the (unknown) relevance rates.
 */
double estimate_joint(const InterventionLog& log, double theta2_hat,
                      const EstimatorOptions& options = {});

/*!
 * \brief Marginal estimator from single-position swaps to rank 1, anchored
 * at theta(1) = 1: theta_hat(k) = (no-swap click rate) / (swap click rate).
 */
double estimate_marginal(const InterventionLog& log,
                         const EstimatorOptions& options = {});

enum class ExtrapolationStrategy {
  kModelFit,     // pick Independent vs Continuous closed form by least squares
  kNearestPair,  // copy the closest estimated pair
};

ExtrapolationStrategy extrapolation_strategy_from_string(const std::string& name);

/*!
 * \brief Fills a complete PropensityTable from sparse psi estimates.
 *
 * theta[k-1] must cover ranks 1..max_rank. Estimates are clamped into
 * (0, min(theta(k1), theta(k2))] after estimation; every clamp is reported
 * through `warnings` when given.
 */
PropensityTable extrapolate_joint(
    const std::map<std::pair<int, int>, double>& estimates,
    const std::vector<double>& theta, ExtrapolationStrategy strategy,
    int max_rank, std::vector<std::string>* warnings = nullptr);

/*!
 * \brief Runs the randomized swap intervention against a browsing model.
 *
 * Each impression shows a list of max_rank items whose relevance is drawn
 * per-rank from `relevance_probs` (index 0 = rank 1); with probability
 * swap_prob the target is moved to the top positions. Examinations follow
 * the physical layout; recorded clicks follow the item. One target is
 * simulated per impression, round-robin over `targets`.
 */
std::map<std::pair<int, int>, InterventionLog> simulate_intervention(
    const ExaminationModel& model, const std::vector<double>& relevance_probs,
    const std::vector<std::pair<int, int>>& targets, std::int64_t impressions,
    double swap_prob, std::uint64_t seed);

}  // namespace ultr

#endif  // ULTR_PROPENSITY_EST_HPP_
