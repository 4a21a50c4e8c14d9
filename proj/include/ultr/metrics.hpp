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
#ifndef ULTR_METRICS_HPP_
#define ULTR_METRICS_HPP_

#include <map>
#include <string>
#include <vector>

#include "ultr/trainer.hpp"
#include "ultr/types.hpp"

namespace ultr {

// Gain 2^label - 1, discount 1/log2(1 + position): the LETOR convention.
double dcg_at_k(const std::vector<int>& labels_in_rank_order, int k);

//! NDCG@k; throws DegenerateError when every label is zero.
double ndcg_at_k(const std::vector<int>& labels_in_rank_order, int k);

//! Mean of precision@pos over relevant positions, labels binarized at
//! label >= positive_threshold. Throws DegenerateError with no relevant item.
double average_precision(const std::vector<int>& labels_in_rank_order,
                         int positive_threshold = 1);

struct EvalReport {
  std::vector<int> cutoffs;
  //! Metric name ("ndcg@5", "map") -> mean over included queries.
  std::map<std::string, double> means;
  //! Metric name -> per-included-query values (for paired tests).
  std::map<std::string, std::vector<double>> per_query;
  std::vector<std::string> included_query_ids;
  int excluded_queries = 0;

  std::string to_text() const;
  std::string to_json() const;
  void save(const std::string& text_path, const std::string& json_path = "",
            const std::string& per_query_path = "") const;
};

/*!
 * \brief Ranks each test collection by score (stable tie-break by input
 * order), excludes queries without a positive label, and reports
 * NDCG@cutoffs and MAP. Lists are not truncated at evaluation.
 */
EvalReport evaluate_scores(const Dataset& test,
                           const std::vector<std::vector<double>>& scores,
                           const std::vector<int>& cutoffs);

EvalReport evaluate(const TreeEnsemble& model, const Dataset& test,
                    const std::vector<int>& cutoffs);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  int df = 0;
};

/*!
 * \brief Paired two-sided t-test. Bonferroni correction is the caller's
 * job (multiply p by the comparison count). Zero-variance differences
 * throw DegenerateError.
 */
TTestResult paired_t_test(const std::vector<double>& a,
                          const std::vector<double>& b);

//! Regularized incomplete beta I_x(a, b) (Lentz continued fraction).
double regularized_incomplete_beta(double a, double b, double x);

//! Two-sided p-value for a t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, int df);

}  // namespace ultr

#endif  // ULTR_METRICS_HPP_
