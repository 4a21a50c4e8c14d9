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
#include "ultr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "ultr/debias.hpp"

namespace ultr {

namespace {

double gain(int label) { return static_cast<double>((1 << label) - 1); }

double discount(int position) {  // 1-based
  return 1.0 / std::log2(static_cast<double>(position) + 1.0);
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

double dcg_at_k(const std::vector<int>& labels_in_rank_order, int k) {
  if (k < 1) throw ValidationError("cutoff must be >= 1");
  const int depth = std::min<int>(k, static_cast<int>(labels_in_rank_order.size()));
  double dcg = 0.0;
  for (int pos = 1; pos <= depth; ++pos) {
    dcg += gain(labels_in_rank_order[pos - 1]) * discount(pos);
  }
  return dcg;
}

double ndcg_at_k(const std::vector<int>& labels_in_rank_order, int k) {
  std::vector<int> ideal = labels_in_rank_order;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  const double idcg = dcg_at_k(ideal, k);
  if (idcg == 0.0) {
    throw DegenerateError("NDCG undefined: no positive label");
  }
  return dcg_at_k(labels_in_rank_order, k) / idcg;
}

double average_precision(const std::vector<int>& labels_in_rank_order,
                         int positive_threshold) {
  int relevant_seen = 0;
  double sum = 0.0;
  for (std::size_t pos = 0; pos < labels_in_rank_order.size(); ++pos) {
    if (labels_in_rank_order[pos] >= positive_threshold) {
      ++relevant_seen;
      sum += static_cast<double>(relevant_seen) / static_cast<double>(pos + 1);
    }
  }
  if (relevant_seen == 0) {
    throw DegenerateError("AP undefined: no relevant item");
  }
  return sum / relevant_seen;
}

EvalReport evaluate_scores(const Dataset& test,
                           const std::vector<std::vector<double>>& scores,
                           const std::vector<int>& cutoffs) {
  if (test.empty()) throw StateError("empty test set");
  if (test.size() != scores.size()) {
    throw ValidationError("test/scores size mismatch");
  }
  EvalReport report;
  report.cutoffs = cutoffs;

  std::vector<std::string> metric_names;
  for (int k : cutoffs) metric_names.push_back("ndcg@" + std::to_string(k));
  metric_names.push_back("map");

  for (std::size_t qi = 0; qi < test.size(); ++qi) {
    const QueryCollection& q = test[qi];
    const bool any_positive =
        std::any_of(q.items.begin(), q.items.end(),
                    [](const Item& it) { return it.golden_label > 0; });
    if (!any_positive) {
      ++report.excluded_queries;
      continue;
    }
    if (scores[qi].size() != q.items.size()) {
      throw ValidationError("scores/items size mismatch for query '" +
                            q.query_id + "'");
    }
    std::vector<int> order(q.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return scores[qi][a] > scores[qi][b];
    });
    std::vector<int> ranked_labels(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      ranked_labels[r] = q.items[order[r]].golden_label;
    }
    for (int k : cutoffs) {
      report.per_query["ndcg@" + std::to_string(k)].push_back(
          ndcg_at_k(ranked_labels, k));
    }
    report.per_query["map"].push_back(average_precision(ranked_labels));
    report.included_query_ids.push_back(q.query_id);
  }
  if (report.included_query_ids.empty()) {
    throw StateError("every test query lacks a positive label");
  }
  for (const std::string& name : metric_names) {
    const auto& values = report.per_query[name];
    report.means[name] =
        pairwise_sum(values) / static_cast<double>(values.size());
  }
  return report;
}

EvalReport evaluate(const TreeEnsemble& model, const Dataset& test,
                    const std::vector<int>& cutoffs) {
  std::vector<std::vector<double>> scores;
  scores.reserve(test.size());
  for (const QueryCollection& q : test) scores.push_back(model.predict(q));
  return evaluate_scores(test, scores, cutoffs);
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "# gain 2^label-1, discount 1/log2(1+pos); score ties broken by input order\n";
  out << "queries_included " << included_query_ids.size() << '\n';
  out << "queries_excluded " << excluded_queries << '\n';
  for (const auto& [name, mean] : means) {
    out << name << ' ' << fmt_double(mean) << '\n';
  }
  return out.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["convention"] = "gain 2^label-1, discount 1/log2(1+pos)";
  j["queries_included"] = included_query_ids.size();
  j["queries_excluded"] = excluded_queries;
  j["means"] = means;
  return j.dump(2);
}

void EvalReport::save(const std::string& text_path,
                      const std::string& json_path,
                      const std::string& per_query_path) const {
  {
    std::ofstream out(text_path);
    if (!out) throw IoError("cannot write report '" + text_path + "'");
    out << to_text();
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot write report '" + json_path + "'");
    out << to_json() << '\n';
  }
  if (!per_query_path.empty()) {
    std::ofstream out(per_query_path);
    if (!out) throw IoError("cannot write per-query values '" +
                            per_query_path + "'");
    out << "query_id";
    for (const auto& [name, values] : per_query) out << ' ' << name;
    out << '\n';
    for (std::size_t i = 0; i < included_query_ids.size(); ++i) {
      out << included_query_ids[i];
      for (const auto& [name, values] : per_query) {
        out << ' ' << fmt_double(values[i]);
      }
      out << '\n';
    }
  }
}

// Continued-fraction evaluation of the regularized incomplete beta
// (Numerical Recipes betacf form, modified Lentz).
static double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEpsilon = 3.0e-16;
  constexpr double kTiny = 1.0e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) return h;
  }
  throw Error(ErrorCode::kInternal, "incomplete beta did not converge");
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw ValidationError("x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw ValidationError("degrees of freedom must be >= 1");
  const double x = static_cast<double>(df) / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

TTestResult paired_t_test(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("paired samples differ in length");
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("need at least 2 pairs");
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const double mean = pairwise_sum(diff) / static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  if (ss == 0.0) {
    throw DegenerateError("paired t-test undefined: zero-variance differences");
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTestResult result;
  result.df = static_cast<int>(n) - 1;
  result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  result.p = student_t_two_sided_p(result.t, result.df);
  return result;
}

}  // namespace ultr
