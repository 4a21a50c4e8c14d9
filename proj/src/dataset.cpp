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
#include "ultr/dataset.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace ultr {

namespace {

// Sparse (feature id, value) pairs of one svmrank line, label and qid split
// off. Feature ids must be strictly increasing.
struct ParsedLine {
  int label = 0;
  std::string qid;
  std::vector<std::pair<int, double>> features;
};

double parse_double(std::string_view token, const std::string& path, long line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(path, line, "bad number '" + std::string(token) + "'");
  }
  return value;
}

long parse_int(std::string_view token, const std::string& path, long line) {
  long value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(path, line, "bad integer '" + std::string(token) + "'");
  }
  return value;
}

ParsedLine parse_svmrank_line(std::string_view text, const std::string& path,
                              long line) {
  ParsedLine out;
  std::size_t pos = 0;
  int field = 0;
  int last_fid = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && text[end] != ' ' && text[end] != '\t') ++end;
    const std::string_view token = text.substr(pos, end - pos);
    pos = end;
    if (field == 0) {
      const long label = parse_int(token, path, line);
      if (label < kMinLabel || label > kMaxLabel) {
        throw ParseError(path, line,
                         "golden label " + std::to_string(label) +
                             " outside {0..4}");
      }
      out.label = static_cast<int>(label);
    } else if (field == 1) {
      if (token.substr(0, 4) != "qid:" || token.size() <= 4) {
        throw ParseError(path, line, "expected qid:<id>, got '" +
                                         std::string(token) + "'");
      }
      out.qid = std::string(token.substr(4));
    } else {
      const std::size_t colon = token.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(path, line,
                         "expected <feature>:<value>, got '" +
                             std::string(token) + "'");
      }
      const long fid = parse_int(token.substr(0, colon), path, line);
      if (fid < 1) throw ParseError(path, line, "feature ids start at 1");
      if (fid <= last_fid) {
        throw ParseError(path, line, "feature ids must be strictly increasing");
      }
      last_fid = static_cast<int>(fid);
      const double value = parse_double(token.substr(colon + 1), path, line);
      out.features.emplace_back(static_cast<int>(fid), value);
    }
    ++field;
  }
  if (field < 2) throw ParseError(path, line, "missing qid field");
  return out;
}

}  // namespace

DatasetFormat dataset_format_from_string(const std::string& name) {
  if (name == "svmrank" || name == "letor" || name == "svmlight") {
    return DatasetFormat::kSvmRank;
  }
  throw ValidationError("unknown dataset format '" + name + "'");
}

Dataset load_dataset(const std::string& path, DatasetFormat format) {
  (void)format;  // single format today
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");

  std::vector<ParsedLine> lines;
  std::string raw;
  long line_no = 0;
  int max_fid = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view text(raw);
    const std::size_t hash = text.find('#');
    if (hash != std::string_view::npos) text = text.substr(0, hash);
    bool blank = true;
    for (char c : text) {
      if (c != ' ' && c != '\t' && c != '\r') { blank = false; break; }
    }
    if (blank) continue;
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    lines.push_back(parse_svmrank_line(text, path, line_no));
    if (!lines.back().features.empty()) {
      max_fid = std::max(max_fid, lines.back().features.back().first);
    }
  }

  Dataset data;
  std::map<std::string, std::size_t> index;
  for (ParsedLine& parsed : lines) {
    auto [it, inserted] = index.emplace(parsed.qid, data.size());
    if (inserted) {
      data.emplace_back();
      data.back().query_id = parsed.qid;
    }
    QueryCollection& q = data[it->second];
    Item item;
    item.features.assign(max_fid, 0.0);
    for (const auto& [fid, value] : parsed.features) {
      item.features[fid - 1] = value;
    }
    item.golden_label = parsed.label;
    item.initial_rank = q.n() + 1;
    q.items.push_back(std::move(item));
  }
  for (const QueryCollection& q : data) q.validate();
  return data;
}

void save_dataset(const Dataset& data, const std::string& path,
                  const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file '" + path + "'");
  if (!header_comment.empty()) {
    std::istringstream lines(header_comment);
    std::string line;
    while (std::getline(lines, line)) out << "# " << line << '\n';
  }
  char buf[64];
  for (const QueryCollection& q : data) {
    for (const Item& item : q.items) {
      out << item.golden_label << " qid:" << q.query_id;
      for (std::size_t f = 0; f < item.features.size(); ++f) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), item.features[f]);
        out << ' ' << (f + 1) << ':' << std::string_view(buf, ptr - buf);
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing dataset file '" + path + "'");
}

QueryCollection truncate(const QueryCollection& collection, int max_rank) {
  if (max_rank < 1) throw ValidationError("max_rank must be >= 1");
  QueryCollection out;
  out.query_id = collection.query_id;
  out.repetition = collection.repetition;
  for (const Item& item : collection.items) {
    if (item.initial_rank <= max_rank) out.items.push_back(item);
  }
  return out;
}

Dataset truncate(const Dataset& data, int max_rank) {
  Dataset out;
  out.reserve(data.size());
  for (const QueryCollection& q : data) out.push_back(truncate(q, max_rank));
  return out;
}

}  // namespace ultr
