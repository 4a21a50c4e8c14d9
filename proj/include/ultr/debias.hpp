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
#ifndef ULTR_DEBIAS_HPP_
#define ULTR_DEBIAS_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ultr/types.hpp"

namespace ultr {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

/*!
 * \brief One-hot encoding of a pair of binary indicators, component order
 * (1,1),(1,0),(0,1),(0,0).
 */
Vec4 pair_encoding(int b1, int b2);

/*!
 * \brief Distortion matrix for a pair of examination indicators: maps the
 * relevance-pair encoding to the click-pair encoding, s(e1*r1, e2*r2) =
 * B(e1,e2) * s(r1,r2).
 */
Mat4 b_matrix(int e1, int e2);

/*!
 * \brief Expectation of b_matrix given marginal examination probabilities
 * p_i, p_j and the joint probability p_ij.
 *
 * Requires 0 < p_ij <= min(p_i, p_j) <= 1 (the algebra does not need the
 * Frechet lower bound, so it is not enforced).
 */
Mat4 expected_b(double p_i, double p_j, double p_ij);

/*!
 * \brief The inverse of expected_b in closed form: lower-triangular with
 * diagonal (a_ij, a_i, a_j, 1) where a_* are the inverse probabilities.
 */
struct PairCorrectionMatrix {
  double a_i = 1.0;
  double a_j = 1.0;
  double a_ij = 1.0;
  Mat4 m{};
};

PairCorrectionMatrix correction_matrix(double p_i, double p_j, double p_ij);

/*!
 * \brief RankNet component losses at logistic scale sigma.
 *
 * l11 and l00 are identically zero; l10(a,b) = l01(b,a) =
 * log(1 + exp(-sigma*(a-b))).
 */
struct ComponentLoss {
  double sigma = 1.0;

  double l10(double s_i, double s_j) const {
    return std::log1p(std::exp(-sigma * (s_i - s_j)));
  }
  double l01(double s_i, double s_j) const { return l10(s_j, s_i); }

  //! The component-loss vector z = (l11, l10, l01, l00) at a score pair.
  Vec4 z(double s_i, double s_j) const {
    return {0.0, l10(s_i, s_j), l01(s_i, s_j), 0.0};
  }

  //! Logistic factor 1/(1 + exp(sigma*(s_i - s_j))) = -dl10/(sigma ds_i).
  double mu(double s_i, double s_j) const {
    return 1.0 / (1.0 + std::exp(sigma * (s_i - s_j)));
  }
};

/*!
 * \brief Rank-indexed examination probabilities: marginal theta(rank) and
 * joint psi(rank1, rank2).
 *
 * psi is stored symmetrically; psi(k,k) is theta(k) by definition. Lookups
 * for missing entries throw ConfigError.
 */
class PropensityTable {
 public:
  void set_theta(int rank, double value);
  void set_psi(int rank1, int rank2, double value);

  double theta(int rank) const;
  double psi(int rank1, int rank2) const;
  bool has_theta(int rank) const;
  bool has_psi(int rank1, int rank2) const;
  int max_rank() const { return max_rank_; }

  //! Full invariant check: 0 < psi(k1,k2) <= min(theta) <= 1 and symmetry.
  void validate() const;

  //! Copy with theta and psi floored at eps (eps = 0 disables clipping).
  PropensityTable floored(double eps) const;

  //! Text format: lines `theta <rank> <value>` / `psi <rank1> <rank2> <value>`.
  static PropensityTable load(const std::string& path);
  void save(const std::string& path) const;

  const std::map<int, double>& thetas() const { return theta_; }
  const std::map<std::pair<int, int>, double>& psis() const { return psi_; }

 private:
  std::map<int, double> theta_;
  std::map<std::pair<int, int>, double> psi_;  // key is (min, max)
  int max_rank_ = 0;
};

//! Counts ordered pair evaluations, for the complexity assertion.
struct PairCounter {
  std::uint64_t pair_evaluations = 0;
};

/*!
 * \brief Conventional pairwise loss over ordered pairs computed from clicks.
 * Pairs with equal click indicators contribute nothing (l11 = l00 = 0) and
 * are skipped.
 */
double biased_loss(const std::vector<QueryCollection>& collections,
                   const std::vector<std::vector<double>>& scores,
                   const ComponentLoss& loss);

/*!
 * \brief Propensity-corrected pairwise loss: each ordered pair's click
 * encoding is premultiplied by the correction matrix built from the table.
 *
 * Pairs where neither item was clicked are skipped (the corresponding
 * correction column is (0,0,0,1) and l00 = 0), so a collection costs
 * O(C^2 + C*N) pair evaluations, never O(n^2).
 */
double unbiased_loss(const std::vector<QueryCollection>& collections,
                     const std::vector<std::vector<double>>& scores,
                     const ComponentLoss& loss, const PropensityTable& props,
                     PairCounter* counter = nullptr);

//! Same form as biased_loss but evaluated on true relevance indicators.
double relevance_loss(const std::vector<QueryCollection>& collections,
                      const std::vector<std::vector<double>>& scores,
                      const ComponentLoss& loss);

// Single-collection conveniences.
double biased_loss(const QueryCollection& q, const std::vector<double>& scores,
                   const ComponentLoss& loss);
double unbiased_loss(const QueryCollection& q, const std::vector<double>& scores,
                     const ComponentLoss& loss, const PropensityTable& props,
                     PairCounter* counter = nullptr);
double relevance_loss(const QueryCollection& q, const std::vector<double>& scores,
                      const ComponentLoss& loss);

/*!
 * \brief Exact gradient of unbiased_loss with respect to the scores.
 *
 * Includes the clicked-clicked terms weighted by (a_i - a_ij) and
 * (a_j - a_ij); they vanish when the joint factors as certainty (a_ij = a_i
 * = a_j = 1). Matches central finite differences of unbiased_loss.
 */
std::vector<double> unbiased_gradient(const QueryCollection& q,
                                      const std::vector<double>& scores,
                                      const ComponentLoss& loss,
                                      const PropensityTable& props);

/*! \brief Per-pair weighting schemes for the lambda-gradient. */
enum class PairScheme {
  kPlain,        // no reweighting
  kRobust,       // 1 / theta(rank of the clicked item)
  kFixedTMinus,  // 1 / (theta(rank clicked) * t_minus(rank unclicked))
};

PairScheme pair_scheme_from_string(const std::string& name);
std::string to_string(PairScheme scheme);

//! Optional per-ordered-pair |delta Z| metric weight; null means weight 1.
using PairWeightFn = std::function<double(int i, int j)>;

/*!
 * \brief Lambda-gradient: only pairs with differing click indicators
 * contribute, each weighted by its scheme factor and metric weight.
 *
 * \param t_minus per-rank t^- constants (1-based); empty means all ones.
 */
std::vector<double> lambda_gradient(const QueryCollection& q,
                                    const std::vector<double>& scores,
                                    const ComponentLoss& loss,
                                    const PropensityTable* props,
                                    PairScheme scheme,
                                    const std::vector<double>& t_minus = {},
                                    const PairWeightFn& metric_weight = nullptr);

//! Numerically stable sum (pairwise/tree reduction).
double pairwise_sum(const double* values, std::size_t count);
double pairwise_sum(const std::vector<double>& values);

}  // namespace ultr

#endif  // ULTR_DEBIAS_HPP_
