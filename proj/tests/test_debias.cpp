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
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "ultr/debias.hpp"
#include "ultr/random.hpp"

using ultr::ComponentLoss;
using ultr::Mat4;
using ultr::PropensityTable;
using ultr::QueryCollection;
using ultr::Vec4;

namespace {

// ---- test-only oracles; kept independent of the library's fast paths ----

Vec4 mat_vec(const Mat4& m, const Vec4& v) {
  Vec4 out{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out[r] += m[r][c] * v[c];
  }
  return out;
}

Mat4 mat_mul(const Mat4& a, const Mat4& b) {
  Mat4 out{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      for (int k = 0; k < 4; ++k) out[r][c] += a[r][k] * b[k][c];
    }
  }
  return out;
}

double dot(const Vec4& a, const Vec4& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

// Plain Gauss-Jordan inversion, the numeric cross-check for the closed form.
Mat4 invert4(Mat4 m) {
  Mat4 inv{};
  for (int i = 0; i < 4; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    }
    std::swap(m[col], m[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double p = m[col][col];
    REQUIRE(p != 0.0);
    for (int c = 0; c < 4; ++c) {
      m[col][c] /= p;
      inv[col][c] /= p;
    }
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double factor = m[r][col];
      for (int c = 0; c < 4; ++c) {
        m[r][c] -= factor * m[col][c];
        inv[r][c] -= factor * inv[col][c];
      }
    }
  }
  return inv;
}

double max_abs_diff(const Mat4& a, const Mat4& b) {
  double worst = 0.0;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      worst = std::max(worst, std::fabs(a[r][c] - b[r][c]));
    }
  }
  return worst;
}

Mat4 identity4() {
  Mat4 eye{};
  for (int i = 0; i < 4; ++i) eye[i][i] = 1.0;
  return eye;
}

QueryCollection make_collection(const std::vector<int>& clicks,
                                const std::vector<int>& relevance = {}) {
  QueryCollection q;
  q.query_id = "t";
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    ultr::Item item;
    item.features = {0.0};
    item.initial_rank = static_cast<int>(i) + 1;
    item.click = clicks[i] != 0;
    if (!relevance.empty()) item.relevance = relevance[i] != 0;
    q.items.push_back(item);
  }
  return q;
}

PropensityTable inverse_rank_table(int max_rank, bool continuous) {
  PropensityTable table;
  for (int k = 1; k <= max_rank; ++k) table.set_theta(k, 1.0 / k);
  for (int k1 = 1; k1 <= max_rank; ++k1) {
    for (int k2 = k1 + 1; k2 <= max_rank; ++k2) {
      table.set_psi(k1, k2, continuous ? 1.0 / k2 : 1.0 / (k1 * k2));
    }
  }
  return table;
}

PropensityTable all_ones_table(int max_rank) {
  PropensityTable table;
  for (int k = 1; k <= max_rank; ++k) table.set_theta(k, 1.0);
  for (int k1 = 1; k1 <= max_rank; ++k1) {
    for (int k2 = k1 + 1; k2 <= max_rank; ++k2) table.set_psi(k1, k2, 1.0);
  }
  return table;
}

// Oracle for the unbiased loss: the literal z^T A s form over every ordered
// pair, no click-based shortcuts.
double unbiased_loss_oracle(const QueryCollection& q,
                            const std::vector<double>& scores,
                            const ComponentLoss& loss,
                            const PropensityTable& props) {
  double total = 0.0;
  const int n = q.n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int rank_i = q.items[i].initial_rank;
      const int rank_j = q.items[j].initial_rank;
      const Mat4 a = ultr::correction_matrix(props.theta(rank_i),
                                             props.theta(rank_j),
                                             props.psi(rank_i, rank_j)).m;
      const Vec4 s = ultr::pair_encoding(*q.items[i].click ? 1 : 0,
                                         *q.items[j].click ? 1 : 0);
      total += dot(loss.z(scores[i], scores[j]), mat_vec(a, s));
    }
  }
  return total;
}

constexpr double kTwoLn2 = 1.3862943611198906;
constexpr double kFourLn2 = 2.772588722239781;
constexpr double kTwoLn1PlusE = 2.6265233750364456;

}  // namespace

TEST_CASE("pair_encoding one-hot components in paper order") {
  CHECK(ultr::pair_encoding(1, 1) == Vec4{1, 0, 0, 0});
  CHECK(ultr::pair_encoding(1, 0) == Vec4{0, 1, 0, 0});
  CHECK(ultr::pair_encoding(0, 1) == Vec4{0, 0, 1, 0});
  CHECK(ultr::pair_encoding(0, 0) == Vec4{0, 0, 0, 1});
  CHECK_THROWS_AS(ultr::pair_encoding(2, 0), ultr::ValidationError);
}

TEST_CASE("b_matrix factorization holds for all 16 cases") {
  // s(e1*r1, e2*r2) = B(e1,e2) * s(r1,r2), bit-exactly
  for (int e1 : {0, 1}) {
    for (int e2 : {0, 1}) {
      const Mat4 b = ultr::b_matrix(e1, e2);
      for (int r1 : {0, 1}) {
        for (int r2 : {0, 1}) {
          const Vec4 expected = ultr::pair_encoding(e1 * r1, e2 * r2);
          const Vec4 produced = mat_vec(b, ultr::pair_encoding(r1, r2));
          CHECK(produced == expected);
        }
      }
    }
  }
}

TEST_CASE("b_matrix special cases") {
  CHECK(mat_vec(ultr::b_matrix(1, 0), ultr::pair_encoding(1, 1)) ==
        ultr::pair_encoding(1, 0));
  CHECK(ultr::b_matrix(1, 1) == identity4());
  for (int r1 : {0, 1}) {
    for (int r2 : {0, 1}) {
      CHECK(mat_vec(ultr::b_matrix(0, 0), ultr::pair_encoding(r1, r2)) ==
            ultr::pair_encoding(0, 0));
    }
  }
}

TEST_CASE("expected_b matches the hand-derived matrix") {
  const Mat4 eb = ultr::expected_b(0.5, 1.0 / 3.0, 1.0 / 3.0);
  const Mat4 expected{{{1.0 / 3.0, 0, 0, 0},
                       {1.0 / 6.0, 0.5, 0, 0},
                       {0, 0, 1.0 / 3.0, 0},
                       {0.5, 0.5, 2.0 / 3.0, 1}}};
  CHECK(max_abs_diff(eb, expected) < 1e-15);
  CHECK(ultr::expected_b(1, 1, 1) == identity4());
  CHECK_THROWS_AS(ultr::expected_b(0.5, 0.5, 0.6), ultr::ValidationError);
  CHECK_THROWS_AS(ultr::expected_b(0.0, 0.5, 0.0), ultr::ValidationError);
}

TEST_CASE("expected_b agrees with a Monte Carlo average of b_matrix") {
  const double p_i = 0.6, p_j = 0.5, p_ij = 0.4;  // realizable joint
  ultr::Rng rng(20260810);
  const int n = 200000;
  Mat4 mean{};
  for (int t = 0; t < n; ++t) {
    const double u = rng.uniform();
    int e1, e2;
    if (u < p_ij) { e1 = 1; e2 = 1; }
    else if (u < p_i) { e1 = 1; e2 = 0; }
    else if (u < p_i + p_j - p_ij) { e1 = 0; e2 = 1; }
    else { e1 = 0; e2 = 0; }
    const Mat4 b = ultr::b_matrix(e1, e2);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) mean[r][c] += b[r][c];
    }
  }
  const Mat4 eb = ultr::expected_b(p_i, p_j, p_ij);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      mean[r][c] /= n;
      const double p = eb[r][c];
      // entries are probabilities (or complements); 3 standard errors
      const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
      CHECK(std::fabs(mean[r][c] - p) < std::max(3 * se, 1e-12));
    }
  }
}

TEST_CASE("correction_matrix matches the hand-assembled inverse") {
  const auto corr = ultr::correction_matrix(0.5, 1.0 / 3.0, 1.0 / 3.0);
  const Mat4 expected{{{3, 0, 0, 0},
                       {-1, 2, 0, 0},
                       {0, 0, 3, 0},
                       {-1, -1, -2, 1}}};
  CHECK(max_abs_diff(corr.m, expected) < 1e-15);
  CHECK(corr.a_i == 2.0);
  CHECK(corr.a_j == 3.0);
  CHECK(corr.a_ij == 3.0);
  CHECK(ultr::correction_matrix(1, 1, 1).m == identity4());
  CHECK_THROWS_AS(ultr::correction_matrix(0.0, 0.5, 0.1), ultr::ValidationError);
  CHECK_THROWS_AS(ultr::correction_matrix(0.5, 0.5, 0.6), ultr::ValidationError);
}

TEST_CASE("correction_matrix inverts expected_b for 1000 random triples") {
  ultr::Rng rng(42);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double p_i = 0.05 + 0.95 * rng.uniform();
    const double p_j = 0.05 + 0.95 * rng.uniform();
    const double upper = std::min(p_i, p_j);
    const double p_ij = upper * (0.05 + 0.95 * rng.uniform());
    const Mat4 product = mat_mul(ultr::correction_matrix(p_i, p_j, p_ij).m,
                                 ultr::expected_b(p_i, p_j, p_ij));
    worst = std::max(worst, max_abs_diff(product, identity4()));

    // numeric inversion oracle
    const Mat4 numeric = invert4(ultr::expected_b(p_i, p_j, p_ij));
    CHECK(max_abs_diff(numeric, ultr::correction_matrix(p_i, p_j, p_ij).m) <
          1e-8);
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("biased_loss on the two-item click example") {
  const auto q = make_collection({1, 0});
  const ComponentLoss loss;
  CHECK(ultr::biased_loss(q, {0.0, 0.0}, loss) ==
        doctest::Approx(kTwoLn2).epsilon(1e-12));
  CHECK(ultr::biased_loss(make_collection({0, 0}), {0.0, 0.0}, loss) == 0.0);
  CHECK(ultr::biased_loss(make_collection({1, 1}), {0.0, 0.0}, loss) == 0.0);
}

TEST_CASE("biased_loss requires clicks") {
  QueryCollection q = make_collection({1, 0});
  q.items[1].click.reset();
  CHECK_THROWS_AS(ultr::biased_loss(q, {0.0, 0.0}, ComponentLoss{}),
                  ultr::StateError);
}

TEST_CASE("unbiased_loss equals biased_loss under certain examination") {
  const auto q = make_collection({1, 0, 1});
  const ComponentLoss loss;
  const std::vector<double> scores{0.3, -0.2, 1.0};
  CHECK(ultr::unbiased_loss(q, scores, loss, all_ones_table(3)) ==
        doctest::Approx(ultr::biased_loss(q, scores, loss)).epsilon(1e-12));
}

TEST_CASE("unbiased_loss on the worked two-item example") {
  const auto q = make_collection({1, 0});
  PropensityTable props;
  props.set_theta(1, 0.5);
  props.set_theta(2, 1.0 / 3.0);
  props.set_psi(1, 2, 1.0 / 3.0);
  const ComponentLoss loss;
  CHECK(ultr::unbiased_loss(q, {0.0, 0.0}, loss, props) ==
        doctest::Approx(kFourLn2).epsilon(1e-12));
}

TEST_CASE("unbiased_loss matches the matrix-product oracle") {
  ultr::Rng rng(7);
  const PropensityTable props = inverse_rank_table(6, true);
  const ComponentLoss loss{1.7};
  for (int t = 0; t < 50; ++t) {
    std::vector<int> clicks(6);
    std::vector<double> scores(6);
    for (int i = 0; i < 6; ++i) {
      clicks[i] = rng.bernoulli(0.4) ? 1 : 0;
      scores[i] = 2.0 * rng.uniform() - 1.0;
    }
    const auto q = make_collection(clicks);
    CHECK(ultr::unbiased_loss(q, scores, loss, props) ==
          doctest::Approx(unbiased_loss_oracle(q, scores, loss, props))
              .epsilon(1e-10));
  }
}

TEST_CASE("unbiased_loss demands propensities for occurring ranks") {
  const auto q = make_collection({1, 0});
  PropensityTable props;
  props.set_theta(1, 0.5);  // rank 2 missing
  CHECK_THROWS_AS(ultr::unbiased_loss(q, {0.0, 0.0}, ComponentLoss{}, props),
                  ultr::ConfigError);
}

TEST_CASE("relevance_loss examples") {
  const ComponentLoss loss;
  // r = c everywhere: equals biased
  const auto q = make_collection({1, 0}, {1, 0});
  const std::vector<double> scores{0.4, 0.1};
  CHECK(ultr::relevance_loss(q, scores, loss) ==
        ultr::biased_loss(q, scores, loss));
  // all r zero
  CHECK(ultr::relevance_loss(make_collection({0, 0}, {0, 0}), scores, loss) ==
        0.0);
  // scores (1,0), r = (0,1): l01(1,0) + l10(0,1) = 2 ln(1+e)
  CHECK(ultr::relevance_loss(make_collection({0, 0}, {0, 1}), {1.0, 0.0},
                             loss) ==
        doctest::Approx(kTwoLn1PlusE).epsilon(1e-12));
  QueryCollection missing = make_collection({0, 0});
  CHECK_THROWS_AS(ultr::relevance_loss(missing, scores, loss),
                  ultr::StateError);
}

TEST_CASE("pair elimination: C=3, N=97 costs at most C^2 + 2CN evaluations") {
  std::vector<int> clicks(100, 0);
  clicks[4] = clicks[40] = clicks[77] = 1;
  const auto q = make_collection(clicks);
  const PropensityTable props = inverse_rank_table(100, true);
  std::vector<double> scores(100);
  for (int i = 0; i < 100; ++i) scores[i] = 0.01 * i;
  ultr::PairCounter counter;
  ultr::unbiased_loss(q, scores, ComponentLoss{}, props, &counter);
  CHECK(counter.pair_evaluations == 3 * 99 + 97 * 3);  // 588
  CHECK(counter.pair_evaluations <= 3 * 3 + 2 * 3 * 97);  // 591
}

TEST_CASE("unbiased_gradient matches central finite differences") {
  ultr::Rng rng(99);
  const PropensityTable props = inverse_rank_table(8, true);
  const ComponentLoss loss;
  const double step = 1e-5;
  for (int t = 0; t < 50; ++t) {
    std::vector<int> clicks(8);
    std::vector<double> scores(8);
    bool any = false;
    for (int i = 0; i < 8; ++i) {
      clicks[i] = rng.bernoulli(0.5) ? 1 : 0;
      any = any || clicks[i] == 1;
      scores[i] = 2.0 * rng.uniform() - 1.0;
    }
    if (!any) clicks[0] = 1;
    const auto q = make_collection(clicks);
    const auto grad = ultr::unbiased_gradient(q, scores, loss, props);
    for (int i = 0; i < 8; ++i) {
      std::vector<double> up = scores, down = scores;
      up[i] += step;
      down[i] -= step;
      const double fd = (ultr::unbiased_loss(q, up, loss, props) -
                         ultr::unbiased_loss(q, down, loss, props)) /
                        (2 * step);
      CHECK(std::fabs(grad[i] - fd) / (1.0 + std::fabs(grad[i])) < 1e-6);
    }
  }
}

TEST_CASE("unbiased_gradient clicked-clicked terms vanish when A = I") {
  const auto q = make_collection({1, 1});
  const auto grad = ultr::unbiased_gradient(q, {0.7, -0.7}, ComponentLoss{},
                                            all_ones_table(2));
  CHECK(grad[0] == 0.0);
  CHECK(grad[1] == 0.0);
}

TEST_CASE("unbiased_gradient on the worked both-clicked example") {
  // Ordered double sum: each unordered pair appears in both orders, so the
  // derivative is twice the single-orientation bracket (+0.5) = +1.0; the
  // finite-difference check above pins this down.
  const auto q = make_collection({1, 1});
  PropensityTable props;
  props.set_theta(1, 0.5);
  props.set_theta(2, 1.0 / 3.0);
  props.set_psi(1, 2, 1.0 / 3.0);
  const auto grad = ultr::unbiased_gradient(q, {0.0, 0.0}, ComponentLoss{}, props);
  CHECK(grad[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(grad[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("lambda_gradient worked examples") {
  const auto q = make_collection({1, 0});
  PropensityTable props;
  props.set_theta(1, 0.5);
  props.set_theta(2, 1.0 / 3.0);
  props.set_psi(1, 2, 1.0 / 3.0);
  const ComponentLoss loss;

  const auto robust = ultr::lambda_gradient(q, {0.0, 0.0}, loss, &props,
                                            ultr::PairScheme::kRobust);
  CHECK(robust[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(robust[1] == doctest::Approx(1.0).epsilon(1e-12));

  const auto plain = ultr::lambda_gradient(q, {0.0, 0.0}, loss, nullptr,
                                           ultr::PairScheme::kPlain);
  CHECK(plain[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(plain[1] == doctest::Approx(0.5).epsilon(1e-12));

  const auto both = ultr::lambda_gradient(make_collection({1, 1}), {0.0, 0.0},
                                          loss, &props,
                                          ultr::PairScheme::kRobust);
  CHECK(both[0] == 0.0);
  CHECK(both[1] == 0.0);
}

TEST_CASE("lambda_gradient fixed-tminus with unit t^- equals robust") {
  ultr::Rng rng(5);
  const PropensityTable props = inverse_rank_table(6, false);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> clicks(6);
    std::vector<double> scores(6);
    for (int i = 0; i < 6; ++i) {
      clicks[i] = rng.bernoulli(0.5) ? 1 : 0;
      scores[i] = rng.uniform();
    }
    const auto q = make_collection(clicks);
    const auto robust = ultr::lambda_gradient(q, scores, ComponentLoss{},
                                              &props, ultr::PairScheme::kRobust);
    const auto fixed = ultr::lambda_gradient(
        q, scores, ComponentLoss{}, &props, ultr::PairScheme::kFixedTMinus,
        std::vector<double>(6, 1.0));
    CHECK(robust == fixed);
  }
}

TEST_CASE("lambda_gradient sums to zero over a collection") {
  ultr::Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> clicks(7);
    std::vector<double> scores(7);
    for (int i = 0; i < 7; ++i) {
      clicks[i] = rng.bernoulli(0.4) ? 1 : 0;
      scores[i] = 3.0 * rng.uniform();
    }
    const auto q = make_collection(clicks);
    const auto lambdas = ultr::lambda_gradient(q, scores, ComponentLoss{},
                                               nullptr, ultr::PairScheme::kPlain);
    double sum = 0.0;
    for (double v : lambdas) sum += v;
    CHECK(std::fabs(sum) < 1e-12);
  }
}

TEST_CASE("lambda_gradient applies metric weights per pair") {
  const auto q = make_collection({1, 0});
  const auto weighted = ultr::lambda_gradient(
      q, {0.0, 0.0}, ComponentLoss{}, nullptr, ultr::PairScheme::kPlain, {},
      [](int, int) { return 2.0; });
  CHECK(weighted[0] == doctest::Approx(-1.0));
  CHECK(weighted[1] == doctest::Approx(1.0));
}

TEST_CASE("lambda_gradient robust without a table is a config error") {
  const auto q = make_collection({1, 0});
  CHECK_THROWS_AS(ultr::lambda_gradient(q, {0.0, 0.0}, ComponentLoss{},
                                        nullptr, ultr::PairScheme::kRobust),
                  ultr::ConfigError);
  CHECK_THROWS_AS(ultr::pair_scheme_from_string("bogus"), ultr::ConfigError);
}

TEST_CASE("propensity table invariants and IO") {
  PropensityTable table;
  table.set_theta(1, 1.0);
  table.set_theta(2, 0.5);
  table.set_psi(1, 2, 0.5);
  CHECK_NOTHROW(table.validate());
  CHECK(table.psi(2, 1) == table.psi(1, 2));  // symmetric storage
  CHECK(table.psi(2, 2) == table.theta(2));   // diagonal is the marginal

  CHECK_THROWS_AS(table.set_theta(3, 1.5), ultr::ValidationError);
  CHECK_THROWS_AS(table.set_psi(1, 3, 0.0), ultr::ValidationError);

  PropensityTable bad;
  bad.set_theta(1, 0.3);
  bad.set_theta(2, 0.5);
  bad.set_psi(1, 2, 0.4);  // above min of marginals
  CHECK_THROWS_AS(bad.validate(), ultr::ValidationError);

  const std::string path = "/tmp/ultr_test_props.txt";
  table.save(path);
  const PropensityTable loaded = PropensityTable::load(path);
  CHECK(loaded.theta(2) == 0.5);
  CHECK(loaded.psi(1, 2) == 0.5);
  CHECK(loaded.max_rank() == 2);
}

TEST_CASE("propensity floor clips before inversion") {
  PropensityTable table;
  table.set_theta(1, 1.0);
  table.set_theta(2, 1e-9);
  table.set_psi(1, 2, 1e-9);
  const PropensityTable floored = table.floored(0.01);
  CHECK(floored.theta(2) == 0.01);
  CHECK(floored.psi(1, 2) == 0.01);
  // floor 0 is the identity
  CHECK(table.floored(0.0).theta(2) == 1e-9);
}

TEST_CASE("pairwise_sum agrees with long double accumulation") {
  ultr::Rng rng(1);
  std::vector<double> values(10001);
  long double reference = 0.0L;
  for (double& v : values) {
    v = rng.uniform() - 0.5;
    reference += v;
  }
  CHECK(ultr::pairwise_sum(values) ==
        doctest::Approx(static_cast<double>(reference)).epsilon(1e-12));
  CHECK(ultr::pairwise_sum(std::vector<double>{}) == 0.0);
}
