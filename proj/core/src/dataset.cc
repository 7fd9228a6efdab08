// Copyright 2026 The Shapleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shapleak/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json_util.h"

namespace shapleak {
namespace internal {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace internal

namespace {

using internal::split_csv_line;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return value;
}

std::optional<long long> parse_int(const std::string& s) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() == 0 || features.cols() == 0) {
    throw std::invalid_argument("dataset must have at least one row and one feature");
  }
  if (labels.size() != features.rows()) {
    throw std::invalid_argument("label count does not match row count");
  }
  if (feature_names.size() != features.cols()) {
    throw std::invalid_argument("feature name count does not match column count");
  }
  if (n_classes < 1) throw std::invalid_argument("n_classes must be positive");
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw std::invalid_argument("label out of range");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features.select_rows(rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels.at(r));
  out.feature_names = feature_names;
  out.n_classes = n_classes;
  out.metadata = metadata;
  return out;
}

Dataset Dataset::head(std::size_t count) const {
  std::vector<std::size_t> rows(std::min(count, this->rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return subset(rows);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw FormatError(path.string() + ": empty file");
  }
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  const auto label_it = std::ranges::find(header, label_column);
  if (label_it == header.end()) {
    throw FormatError(path.string() + ": no column named '" + label_column + "'");
  }
  const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());

  Dataset d;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_idx) d.feature_names.push_back(header[c]);
  }

  std::vector<std::string> raw_labels;
  std::vector<double> row(header.size() - 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected " + std::to_string(header.size()) + " cells");
    }
    std::size_t k = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      if (c == label_idx) {
        raw_labels.push_back(cell);
        continue;
      }
      const auto value = parse_double(cell);
      if (!value) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": non-numeric cell '" + cell + "' in column '" +
                          header[c] + "'");
      }
      row[k++] = *value;
    }
    d.features.append_row(row);
  }
  if (raw_labels.empty()) throw FormatError(path.string() + ": no data rows");

  bool all_int = true;
  long long max_label = 0;
  for (const auto& s : raw_labels) {
    const auto v = parse_int(s);
    if (!v || *v < 0) {
      all_int = false;
      break;
    }
    max_label = std::max(max_label, *v);
  }
  if (all_int) {
    for (const auto& s : raw_labels) d.labels.push_back(static_cast<int>(*parse_int(s)));
    d.n_classes = static_cast<int>(max_label) + 1;
  } else {
    const std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    const std::vector<std::string> ordered(distinct.begin(), distinct.end());
    for (const auto& s : raw_labels) {
      d.labels.push_back(static_cast<int>(std::ranges::lower_bound(ordered, s) -
                                          ordered.begin()));
    }
    d.n_classes = static_cast<int>(ordered.size());
  }
  d.validate();
  return d;
}

std::pair<Dataset, MinMaxRecord> normalize_minmax(const Dataset& d) {
  MinMaxRecord record;
  const std::size_t n = d.cols();
  record.min.assign(n, 0.0);
  record.max.assign(n, 0.0);
  Dataset out = d;
  for (std::size_t c = 0; c < n; ++c) {
    double lo = d.features(0, c);
    double hi = lo;
    for (std::size_t r = 1; r < d.rows(); ++r) {
      lo = std::min(lo, d.features(r, c));
      hi = std::max(hi, d.features(r, c));
    }
    record.min[c] = lo;
    record.max[c] = hi;
    const double span = hi - lo;
    for (std::size_t r = 0; r < d.rows(); ++r) {
      out.features(r, c) = span > 0.0 ? (d.features(r, c) - lo) / span : 0.0;
    }
  }
  return {std::move(out), std::move(record)};
}

Dataset denormalize(const Dataset& d, const MinMaxRecord& record) {
  if (record.min.size() != d.cols() || record.max.size() != d.cols()) {
    throw std::invalid_argument("normalization record width mismatch");
  }
  Dataset out = d;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c) {
      out.features(r, c) =
          d.features(r, c) * (record.max[c] - record.min[c]) + record.min[c];
    }
  }
  return out;
}

Split split(const Dataset& d, std::uint64_t seed) {
  const std::size_t m = d.rows();
  if (m < 5) throw std::invalid_argument("split: dataset needs at least 5 rows");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train = m * 3 / 5;
  const std::size_t n_aux = m / 5;
  Split s;
  s.seed = seed;
  s.train_rows.assign(order.begin(), order.begin() + n_train);
  s.aux_rows.assign(order.begin() + n_train, order.begin() + n_train + n_aux);
  s.val_rows.assign(order.begin() + n_train + n_aux, order.end());
  s.train = d.subset(s.train_rows);
  s.aux = d.subset(s.aux_rows);
  s.val = d.subset(s.val_rows);
  return s;
}

void save_dataset(const Dataset& d, const std::optional<MinMaxRecord>& record,
                  const std::filesystem::path& path) {
  d.validate();
  nlohmann::json doc;
  doc["format"] = "shapleak-dataset";
  doc["version"] = 1;
  doc["n_classes"] = d.n_classes;
  doc["feature_names"] = d.feature_names;
  doc["labels"] = d.labels;
  doc["features"] = internal::matrix_to_json(d.features);
  doc["metadata"] = d.metadata;
  if (record) {
    doc["normalization"] = {{"min", record->min}, {"max", record->max}};
  }
  internal::write_json_file(doc, path);
}

Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<MinMaxRecord>* record) {
  const auto doc = internal::read_json_file(path);
  internal::expect_format(doc, "shapleak-dataset", 1);
  Dataset d;
  d.n_classes = internal::field<int>(doc, "n_classes");
  d.feature_names = internal::field<std::vector<std::string>>(doc, "feature_names");
  d.labels = internal::field<std::vector<int>>(doc, "labels");
  d.features = internal::matrix_from_json(doc.at("features"));
  if (doc.contains("metadata")) {
    d.metadata = internal::field<std::map<std::string, std::string>>(doc, "metadata");
  }
  if (record) {
    record->reset();
    if (doc.contains("normalization")) {
      const auto& norm = doc.at("normalization");
      *record = MinMaxRecord{internal::field<std::vector<double>>(norm, "min"),
                             internal::field<std::vector<double>>(norm, "max")};
    }
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return d;
}

}  // namespace shapleak
