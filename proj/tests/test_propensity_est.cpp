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
#include <cmath>
#include <fstream>

#include "doctest.h"

#include "ultr/propensity_est.hpp"

using ultr::EstimatorOptions;
using ultr::ExaminationModel;
using ultr::InterventionLog;
using ultr::ThetaSource;

namespace {

InterventionLog make_log(int k1, int k2, std::int64_t n_noswap,
                         std::int64_t clicks_noswap, std::int64_t n_swap,
                         std::int64_t clicks_swap) {
  InterventionLog log;
  log.k1 = k1;
  log.k2 = k2;
  log.noswap_impressions = n_noswap;
  log.noswap_joint_clicks = clicks_noswap;
  log.swap_impressions = n_swap;
  log.swap_joint_clicks = clicks_swap;
  return log;
}

}  // namespace

TEST_CASE("estimate_joint: equal joint-click rates returns theta2") {
  const auto log = make_log(3, 7, 1000, 50, 1000, 50);
  CHECK(ultr::estimate_joint(log, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("estimate_joint: worked ratio example") {
  // no-swap rate 0.02, swap rate 0.06, theta2 = 0.6 -> 0.2
  const auto log = make_log(3, 7, 5000, 100, 5000, 300);
  CHECK(ultr::estimate_joint(log, 0.6) == doctest::Approx(0.2));
}

TEST_CASE("estimate_joint error paths") {
  CHECK_THROWS_AS(
      ultr::estimate_joint(make_log(3, 7, 1000, 10, 1000, 0), 0.5),
      ultr::InsufficientDataError);  // zero denominator
  CHECK_THROWS_AS(ultr::estimate_joint(make_log(3, 7, 0, 0, 1000, 10), 0.5),
                  ultr::StateError);  // empty bucket
  CHECK_THROWS_AS(ultr::estimate_joint(make_log(3, 7, 50, 5, 50, 5), 0.5),
                  ultr::InsufficientDataError);  // below min impressions
  CHECK_THROWS_AS(ultr::estimate_joint(make_log(3, 0, 1000, 5, 1000, 5), 0.5),
                  ultr::ValidationError);  // marginal log
  CHECK_THROWS_AS(ultr::estimate_joint(make_log(3, 7, 1000, 5, 1000, 5), 0.0),
                  ultr::ValidationError);  // bad anchor
  EstimatorOptions loose;
  loose.min_impressions = 10;
  CHECK_NOTHROW(ultr::estimate_joint(make_log(3, 7, 50, 5, 50, 5), 0.5, loose));
}

TEST_CASE("estimate_marginal: ratio with the rank-1 anchor") {
  CHECK(ultr::estimate_marginal(make_log(4, 0, 1000, 100, 1000, 100)) ==
        doctest::Approx(1.0));
  // no-swap 0.1, swap 0.4 -> 0.25
  CHECK(ultr::estimate_marginal(make_log(4, 0, 2000, 200, 2000, 800)) ==
        doctest::Approx(0.25));
  CHECK_THROWS_AS(ultr::estimate_marginal(make_log(4, 4, 1000, 1, 1000, 1)),
                  ultr::ValidationError);
}

TEST_CASE("estimators are invariant to rescaled relevance rates") {
  // doubling every click count (relevance twice as likely) cancels in the ratio
  const auto log1 = make_log(2, 5, 4000, 120, 4000, 360);
  const auto log2 = make_log(2, 5, 4000, 240, 4000, 720);
  CHECK(ultr::estimate_joint(log1, 0.5) ==
        doctest::Approx(ultr::estimate_joint(log2, 0.5)));
  const auto m1 = make_log(4, 0, 4000, 100, 4000, 400);
  const auto m2 = make_log(4, 0, 4000, 200, 4000, 800);
  CHECK(ultr::estimate_marginal(m1) == doctest::Approx(ultr::estimate_marginal(m2)));
}

TEST_CASE("simulated intervention is consistent under the continuous model") {
  const auto model = ExaminationModel::continuous(ThetaSource::inverse_rank());
  const std::vector<double> relevance_probs(8, 0.5);
  const std::vector<std::pair<int, int>> targets{{3, 7}, {5, 0}};
  const auto logs =
      ultr::simulate_intervention(model, relevance_probs, targets,
                                  1000000, 0.5, 2022);

  // psi(3,7) = min(1/3, 1/7) = 1/7 under continuous examination
  const double psi_hat = ultr::estimate_joint(logs.at({3, 7}), 0.5);
  CHECK(std::fabs(psi_hat - 1.0 / 7.0) < 0.1 / 7.0);

  const double theta_hat = ultr::estimate_marginal(logs.at({5, 0}));
  CHECK(std::fabs(theta_hat - 0.2) < 0.02);
}

TEST_CASE("simulated intervention is consistent under independent/grid models") {
  const std::vector<double> relevance_probs(6, 0.6);
  {
    const auto model =
        ExaminationModel::independent(ThetaSource::inverse_rank());
    const auto logs = ultr::simulate_intervention(
        model, relevance_probs, {{2, 4}}, 400000, 0.5, 5);
    // psi(2,4) = 1/8; psi(1,2) = 1/2 so theta2 anchor = 1/2
    const double psi_hat = ultr::estimate_joint(logs.at({2, 4}), 0.5);
    CHECK(std::fabs(psi_hat - 0.125) < 0.015);
  }
  {
    const auto model = ultr::ExaminationModel::row_skipping(
        ultr::GridLayout({3, 3}), 0.3, 0.9);
    const auto logs = ultr::simulate_intervention(
        model, relevance_probs, {{2, 5}}, 400000, 0.5, 6);
    const double anchor = model.joint(1, 2);  // exact psi(1,2) for the oracle
    const double psi_hat = ultr::estimate_joint(logs.at({2, 5}), anchor);
    CHECK(std::fabs(psi_hat - model.joint(2, 5)) < 0.1 * model.joint(2, 5));
  }
}

TEST_CASE("intervention log file round-trip") {
  const auto model = ExaminationModel::continuous(ThetaSource::inverse_rank());
  const auto logs = ultr::simulate_intervention(model, {0.5, 0.5, 0.5, 0.5},
                                                {{2, 3}, {4, 0}}, 5000, 0.5, 3);
  const std::string path = "/tmp/ultr_test_interventions.txt";
  ultr::save_intervention_log(path, {logs});
  const auto loaded = ultr::load_intervention_log(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at({2, 3}).swap_impressions == logs.at({2, 3}).swap_impressions);
  CHECK(loaded.at({2, 3}).swap_joint_clicks == logs.at({2, 3}).swap_joint_clicks);
  CHECK(loaded.at({4, 0}).noswap_joint_clicks ==
        logs.at({4, 0}).noswap_joint_clicks);
  CHECK(loaded.at({4, 0}).is_marginal());
}

TEST_CASE("intervention log parser rejects malformed rows") {
  const std::string path = "/tmp/ultr_test_interventions_bad.txt";
  {
    std::ofstream out(path);
    out << "maybe 1 2 0 0\n";
  }
  CHECK_THROWS_AS(ultr::load_intervention_log(path), ultr::ParseError);
  {
    std::ofstream out(path);
    out << "swap 1 0 1 1\n";  // marginal with c2 = 1
  }
  CHECK_THROWS_AS(ultr::load_intervention_log(path), ultr::ParseError);
}

TEST_CASE("extrapolate_joint: model fit picks the matching closed form") {
  std::vector<double> theta{1.0, 0.5, 1.0 / 3.0, 0.25};

  std::map<std::pair<int, int>, double> independent;
  independent[{1, 2}] = 0.5;
  independent[{2, 3}] = 0.5 / 3.0;
  independent[{2, 4}] = 0.125;
  auto table = ultr::extrapolate_joint(independent, theta,
                                       ultr::ExtrapolationStrategy::kModelFit, 4);
  CHECK(table.psi(3, 4) == doctest::Approx(1.0 / 12.0));  // theta3*theta4

  std::map<std::pair<int, int>, double> continuous;
  continuous[{1, 2}] = 0.5;
  continuous[{2, 3}] = 1.0 / 3.0;
  continuous[{2, 4}] = 0.25;
  table = ultr::extrapolate_joint(continuous, theta,
                                  ultr::ExtrapolationStrategy::kModelFit, 4);
  CHECK(table.psi(3, 4) == doctest::Approx(0.25));  // min(theta3, theta4)
}

TEST_CASE("extrapolate_joint: noisy estimates pick the lower-residual form") {
  const std::vector<double> theta{1.0, 0.5, 1.0 / 3.0, 0.25};
  std::map<std::pair<int, int>, double> noisy;
  noisy[{1, 2}] = 0.48;
  noisy[{2, 3}] = 0.31;
  noisy[{1, 4}] = 0.27;
  // residual oracle, computed directly
  double ss_independent = 0.0, ss_continuous = 0.0;
  for (const auto& [ranks, value] : noisy) {
    const double indep = theta[ranks.first - 1] * theta[ranks.second - 1];
    const double cont = std::min(theta[ranks.first - 1], theta[ranks.second - 1]);
    ss_independent += (value - indep) * (value - indep);
    ss_continuous += (value - cont) * (value - cont);
  }
  REQUIRE(ss_continuous < ss_independent);
  const auto table = ultr::extrapolate_joint(
      noisy, theta, ultr::ExtrapolationStrategy::kModelFit, 4);
  CHECK(table.psi(3, 4) == doctest::Approx(0.25));  // continuous form chosen
}

TEST_CASE("extrapolate_joint: nearest-pair copy with clamping") {
  const std::vector<double> theta{1.0, 0.5, 1.0 / 3.0};
  std::map<std::pair<int, int>, double> sparse;
  sparse[{1, 2}] = 0.45;
  std::vector<std::string> warnings;
  const auto table = ultr::extrapolate_joint(
      sparse, theta, ultr::ExtrapolationStrategy::kNearestPair, 3, &warnings);
  CHECK(table.psi(1, 2) == doctest::Approx(0.45));
  // copied value 0.45 exceeds min(theta2, theta3) = 1/3 and must be clamped
  CHECK(table.psi(2, 3) == doctest::Approx(1.0 / 3.0));
  CHECK(!warnings.empty());
  CHECK_NOTHROW(table.validate());

  CHECK_THROWS_AS(ultr::extrapolate_joint({}, theta,
                                          ultr::ExtrapolationStrategy::kNearestPair,
                                          3),
                  ultr::StateError);
}
