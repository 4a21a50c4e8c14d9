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
#include "ultr/debias.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ultr {

namespace {

void check_binary(int b, const char* name) {
  if (b != 0 && b != 1) {
    throw ValidationError(std::string(name) + " must be 0 or 1, got " +
                          std::to_string(b));
  }
}

void check_probability_triple(double p_i, double p_j, double p_ij) {
  if (!(p_i > 0.0) || !(p_j > 0.0) || !(p_ij > 0.0)) {
    throw ValidationError("examination probabilities must be positive");
  }
  if (p_i > 1.0 || p_j > 1.0 || p_ij > 1.0) {
    throw ValidationError("examination probabilities must be <= 1");
  }
  if (p_ij > std::min(p_i, p_j) + 1e-12) {
    throw ValidationError("joint probability exceeds a marginal");
  }
}

// Clicks of a collection with presence check.
std::vector<int> clicks_of(const QueryCollection& q) {
  std::vector<int> out(q.items.size());
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    if (!q.items[i].click) {
      throw StateError("query '" + q.query_id + "': click indicator missing");
    }
    out[i] = *q.items[i].click ? 1 : 0;
  }
  return out;
}

std::vector<int> relevance_of(const QueryCollection& q) {
  std::vector<int> out(q.items.size());
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    if (!q.items[i].relevance) {
      throw StateError("query '" + q.query_id +
                       "': relevance indicator missing");
    }
    out[i] = *q.items[i].relevance ? 1 : 0;
  }
  return out;
}

// Sum over ordered pairs with differing labels of l10/l01; shared by the
// biased and relevance losses.
double label_pair_loss(const QueryCollection& q,
                       const std::vector<double>& scores,
                       const ComponentLoss& loss,
                       const std::vector<int>& labels) {
  if (scores.size() != q.items.size()) {
    throw ValidationError("scores/items size mismatch");
  }
  std::vector<double> terms;
  const int n = q.n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || labels[i] == labels[j]) continue;
      terms.push_back(labels[i] == 1 ? loss.l10(scores[i], scores[j])
                                     : loss.l01(scores[i], scores[j]));
    }
  }
  return pairwise_sum(terms);
}

}  // namespace

Vec4 pair_encoding(int b1, int b2) {
  check_binary(b1, "b1");
  check_binary(b2, "b2");
  return {static_cast<double>(b1 * b2), static_cast<double>(b1 * (1 - b2)),
          static_cast<double>((1 - b1) * b2),
          static_cast<double>((1 - b1) * (1 - b2))};
}

Mat4 b_matrix(int e1, int e2) {
  check_binary(e1, "e1");
  check_binary(e2, "e2");
  const double a = static_cast<double>(e1);
  const double b = static_cast<double>(e2);
  return Mat4{{{a * b, 0, 0, 0},
               {a * (1 - b), a, 0, 0},
               {(1 - a) * b, 0, b, 0},
               {(1 - a) * (1 - b), 1 - a, 1 - b, 1}}};
}

Mat4 expected_b(double p_i, double p_j, double p_ij) {
  check_probability_triple(p_i, p_j, p_ij);
  return Mat4{{{p_ij, 0, 0, 0},
               {p_i - p_ij, p_i, 0, 0},
               {p_j - p_ij, 0, p_j, 0},
               {1 - p_i - p_j + p_ij, 1 - p_i, 1 - p_j, 1}}};
}

PairCorrectionMatrix correction_matrix(double p_i, double p_j, double p_ij) {
  check_probability_triple(p_i, p_j, p_ij);
  PairCorrectionMatrix out;
  out.a_i = 1.0 / p_i;
  out.a_j = 1.0 / p_j;
  out.a_ij = 1.0 / p_ij;
  out.m = Mat4{{{out.a_ij, 0, 0, 0},
                {out.a_i - out.a_ij, out.a_i, 0, 0},
                {out.a_j - out.a_ij, 0, out.a_j, 0},
                {1 - out.a_i - out.a_j + out.a_ij, 1 - out.a_i, 1 - out.a_j, 1}}};
  return out;
}

void PropensityTable::set_theta(int rank, double value) {
  if (rank < 1) throw ValidationError("rank must be >= 1");
  if (!(value > 0.0) || value > 1.0) {
    throw ValidationError("theta(" + std::to_string(rank) +
                          ") must lie in (0,1]");
  }
  theta_[rank] = value;
  max_rank_ = std::max(max_rank_, rank);
}

void PropensityTable::set_psi(int rank1, int rank2, double value) {
  if (rank1 < 1 || rank2 < 1) throw ValidationError("ranks must be >= 1");
  if (rank1 == rank2) {
    set_theta(rank1, value);
    return;
  }
  if (!(value > 0.0) || value > 1.0) {
    throw ValidationError("psi(" + std::to_string(rank1) + "," +
                          std::to_string(rank2) + ") must lie in (0,1]");
  }
  psi_[{std::min(rank1, rank2), std::max(rank1, rank2)}] = value;
  max_rank_ = std::max({max_rank_, rank1, rank2});
}

double PropensityTable::theta(int rank) const {
  const auto it = theta_.find(rank);
  if (it == theta_.end()) {
    throw ConfigError("no theta entry for rank " + std::to_string(rank));
  }
  return it->second;
}

double PropensityTable::psi(int rank1, int rank2) const {
  if (rank1 == rank2) return theta(rank1);
  const auto it = psi_.find({std::min(rank1, rank2), std::max(rank1, rank2)});
  if (it == psi_.end()) {
    throw ConfigError("no psi entry for rank pair (" + std::to_string(rank1) +
                      "," + std::to_string(rank2) + ")");
  }
  return it->second;
}

bool PropensityTable::has_theta(int rank) const {
  return theta_.count(rank) > 0;
}

bool PropensityTable::has_psi(int rank1, int rank2) const {
  if (rank1 == rank2) return has_theta(rank1);
  return psi_.count({std::min(rank1, rank2), std::max(rank1, rank2)}) > 0;
}

void PropensityTable::validate() const {
  for (const auto& [ranks, value] : psi_) {
    const auto [k1, k2] = ranks;
    if (!has_theta(k1) || !has_theta(k2)) {
      throw ValidationError("psi(" + std::to_string(k1) + "," +
                            std::to_string(k2) + ") lacks a theta entry");
    }
    const double bound = std::min(theta(k1), theta(k2));
    if (value > bound + 1e-12) {
      throw ValidationError("psi(" + std::to_string(k1) + "," +
                            std::to_string(k2) +
                            ") exceeds min of its marginals");
    }
  }
}

PropensityTable PropensityTable::floored(double eps) const {
  if (eps <= 0.0) return *this;
  PropensityTable out;
  for (const auto& [rank, value] : theta_) {
    out.set_theta(rank, std::max(value, eps));
  }
  for (const auto& [ranks, value] : psi_) {
    out.set_psi(ranks.first, ranks.second, std::max(value, eps));
  }
  return out;
}

PropensityTable PropensityTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open propensity table '" + path + "'");
  PropensityTable table;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind.empty()) continue;
    if (kind == "theta") {
      int rank;
      double value;
      if (!(fields >> rank >> value)) {
        throw ParseError(path, line_no, "expected `theta <rank> <value>`");
      }
      table.set_theta(rank, value);
    } else if (kind == "psi") {
      int r1, r2;
      double value;
      if (!(fields >> r1 >> r2 >> value)) {
        throw ParseError(path, line_no, "expected `psi <r1> <r2> <value>`");
      }
      table.set_psi(r1, r2, value);
    } else {
      throw ParseError(path, line_no, "unknown record '" + kind + "'");
    }
  }
  table.validate();
  return table;
}

void PropensityTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write propensity table '" + path + "'");
  char buf[64];
  const auto fmt = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
  };
  for (const auto& [rank, value] : theta_) {
    out << "theta " << rank << ' ' << fmt(value) << '\n';
  }
  for (const auto& [ranks, value] : psi_) {
    out << "psi " << ranks.first << ' ' << ranks.second << ' ' << fmt(value)
        << '\n';
  }
  if (!out) throw IoError("failed writing propensity table '" + path + "'");
}

double biased_loss(const QueryCollection& q, const std::vector<double>& scores,
                   const ComponentLoss& loss) {
  return label_pair_loss(q, scores, loss, clicks_of(q));
}

double relevance_loss(const QueryCollection& q,
                      const std::vector<double>& scores,
                      const ComponentLoss& loss) {
  return label_pair_loss(q, scores, loss, relevance_of(q));
}

double unbiased_loss(const QueryCollection& q,
                     const std::vector<double>& scores,
                     const ComponentLoss& loss, const PropensityTable& props,
                     PairCounter* counter) {
  if (scores.size() != q.items.size()) {
    throw ValidationError("scores/items size mismatch");
  }
  const std::vector<int> clicks = clicks_of(q);
  const int n = q.n();
  std::vector<int> clicked;
  for (int i = 0; i < n; ++i) {
    if (clicks[i] == 1) clicked.push_back(i);
  }

  // Ordered pairs with at least one click; both-unclicked pairs contribute
  // nothing because column four of the correction matrix is (0,0,0,1) and
  // l00 = 0.
  std::vector<double> terms;
  const auto pair_term = [&](int i, int j) {
    if (counter) ++counter->pair_evaluations;
    const int rank_i = q.items[i].initial_rank;
    const int rank_j = q.items[j].initial_rank;
    const PairCorrectionMatrix corr = correction_matrix(
        props.theta(rank_i), props.theta(rank_j), props.psi(rank_i, rank_j));
    if (clicks[i] == 1 && clicks[j] == 1) {
      // A * s(1,1) is the first column of A.
      return loss.l10(scores[i], scores[j]) * (corr.a_i - corr.a_ij) +
             loss.l01(scores[i], scores[j]) * (corr.a_j - corr.a_ij);
    }
    if (clicks[i] == 1) {
      return loss.l10(scores[i], scores[j]) * corr.a_i;
    }
    return loss.l01(scores[i], scores[j]) * corr.a_j;
  };

  for (int i : clicked) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      terms.push_back(pair_term(i, j));
    }
  }
  for (int j : clicked) {
    for (int i = 0; i < n; ++i) {
      if (i == j || clicks[i] == 1) continue;  // (clicked, clicked) done above
      terms.push_back(pair_term(i, j));
    }
  }
  return pairwise_sum(terms);
}

double biased_loss(const std::vector<QueryCollection>& collections,
                   const std::vector<std::vector<double>>& scores,
                   const ComponentLoss& loss) {
  if (collections.size() != scores.size()) {
    throw ValidationError("collections/scores size mismatch");
  }
  std::vector<double> parts(collections.size());
  for (std::size_t k = 0; k < collections.size(); ++k) {
    parts[k] = biased_loss(collections[k], scores[k], loss);
  }
  return pairwise_sum(parts);
}

double relevance_loss(const std::vector<QueryCollection>& collections,
                      const std::vector<std::vector<double>>& scores,
                      const ComponentLoss& loss) {
  if (collections.size() != scores.size()) {
    throw ValidationError("collections/scores size mismatch");
  }
  std::vector<double> parts(collections.size());
  for (std::size_t k = 0; k < collections.size(); ++k) {
    parts[k] = relevance_loss(collections[k], scores[k], loss);
  }
  return pairwise_sum(parts);
}

double unbiased_loss(const std::vector<QueryCollection>& collections,
                     const std::vector<std::vector<double>>& scores,
                     const ComponentLoss& loss, const PropensityTable& props,
                     PairCounter* counter) {
  if (collections.size() != scores.size()) {
    throw ValidationError("collections/scores size mismatch");
  }
  std::vector<double> parts(collections.size());
  for (std::size_t k = 0; k < collections.size(); ++k) {
    parts[k] = unbiased_loss(collections[k], scores[k], loss, props, counter);
  }
  return pairwise_sum(parts);
}

std::vector<double> unbiased_gradient(const QueryCollection& q,
                                      const std::vector<double>& scores,
                                      const ComponentLoss& loss,
                                      const PropensityTable& props) {
  if (scores.size() != q.items.size()) {
    throw ValidationError("scores/items size mismatch");
  }
  const std::vector<int> clicks = clicks_of(q);
  const int n = q.n();
  std::vector<double> grad(n, 0.0);
  const double sigma = loss.sigma;

  // Ordered pair (i,j) contributes to both endpoints; with l10(a,b) =
  // l01(b,a) the two orders of an unordered pair contribute equally, which
  // is where the factor 2 against the per-ordered-pair bracket comes from.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || (clicks[i] == 0 && clicks[j] == 0)) continue;
      const int rank_i = q.items[i].initial_rank;
      const int rank_j = q.items[j].initial_rank;
      const PairCorrectionMatrix corr = correction_matrix(
          props.theta(rank_i), props.theta(rank_j), props.psi(rank_i, rank_j));
      const double mu_ij = loss.mu(scores[i], scores[j]);
      const double mu_ji = loss.mu(scores[j], scores[i]);
      if (clicks[i] == 1 && clicks[j] == 1) {
        const double d_i = -sigma * mu_ij * (corr.a_i - corr.a_ij) +
                           sigma * mu_ji * (corr.a_j - corr.a_ij);
        grad[i] += d_i;
        grad[j] += -d_i;  // d/ds_j of l10(s_i,s_j) etc. flips every sign
      } else if (clicks[i] == 1) {
        grad[i] += -sigma * mu_ij * corr.a_i;
        grad[j] += sigma * mu_ij * corr.a_i;
      } else {
        grad[i] += sigma * mu_ji * corr.a_j;
        grad[j] += -sigma * mu_ji * corr.a_j;
      }
    }
  }
  return grad;
}

PairScheme pair_scheme_from_string(const std::string& name) {
  if (name == "plain") return PairScheme::kPlain;
  if (name == "robust") return PairScheme::kRobust;
  if (name == "fixed-tminus" || name == "fixed_tminus") {
    return PairScheme::kFixedTMinus;
  }
  throw ConfigError("unknown pair scheme '" + name + "'");
}

std::string to_string(PairScheme scheme) {
  switch (scheme) {
    case PairScheme::kPlain: return "plain";
    case PairScheme::kRobust: return "robust";
    case PairScheme::kFixedTMinus: return "fixed-tminus";
  }
  return "?";
}

std::vector<double> lambda_gradient(const QueryCollection& q,
                                    const std::vector<double>& scores,
                                    const ComponentLoss& loss,
                                    const PropensityTable* props,
                                    PairScheme scheme,
                                    const std::vector<double>& t_minus,
                                    const PairWeightFn& metric_weight) {
  if (scores.size() != q.items.size()) {
    throw ValidationError("scores/items size mismatch");
  }
  if (scheme != PairScheme::kPlain && props == nullptr) {
    throw ConfigError("scheme '" + to_string(scheme) +
                      "' requires a propensity table");
  }
  const std::vector<int> clicks = clicks_of(q);
  const int n = q.n();
  const double sigma = loss.sigma;

  const auto t_minus_at = [&](int rank) {
    if (t_minus.empty()) return 1.0;
    if (rank < 1 || rank > static_cast<int>(t_minus.size())) {
      throw ConfigError("no t_minus entry for rank " + std::to_string(rank));
    }
    return t_minus[rank - 1];
  };

  std::vector<double> lambdas(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || clicks[i] != 1 || clicks[j] != 0) continue;
      // i clicked, j not: lambda_{i,j} flows into item i positively and
      // into item j negatively (the j-orientation term of the formula).
      double weight = 1.0;
      switch (scheme) {
        case PairScheme::kPlain:
          break;
        case PairScheme::kRobust:
          weight /= props->theta(q.items[i].initial_rank);
          break;
        case PairScheme::kFixedTMinus:
          weight /= props->theta(q.items[i].initial_rank) *
                    t_minus_at(q.items[j].initial_rank);
          break;
      }
      if (metric_weight) weight *= metric_weight(i, j);
      const double pair_lambda = -sigma * loss.mu(scores[i], scores[j]);
      lambdas[i] += pair_lambda * weight;
      lambdas[j] -= pair_lambda * weight;
    }
  }
  return lambdas;
}

double pairwise_sum(const double* values, std::size_t count) {
  if (count == 0) return 0.0;
  if (count <= 16) {
    double sum = values[0];
    for (std::size_t i = 1; i < count; ++i) sum += values[i];
    return sum;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

double pairwise_sum(const std::vector<double>& values) {
  return pairwise_sum(values.data(), values.size());
}

}  // namespace ultr
