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

#include "shapleak/common.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json_util.h"

namespace shapleak {

std::vector<double> Matrix::column(std::size_t c) const {
  if (c >= cols_) throw std::out_of_range("Matrix::column: index out of range");
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
  return out;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw std::invalid_argument("Matrix::append_row: width mismatch");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw std::out_of_range("Matrix::select_rows: index out of range");
    }
    std::ranges::copy(row(indices[i]), out.row(i).begin());
  }
  return out;
}

namespace internal {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    // Comments are allowed so that config files can be annotated.
    return nlohmann::json::parse(buffer.str(), nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void expect_format(const nlohmann::json& doc, const std::string& format, int version) {
  if (!doc.is_object()) throw FormatError("expected a JSON object");
  const auto got = field<std::string>(doc, "format");
  if (got != format) {
    throw FormatError("format mismatch: expected '" + format + "', got '" + got + "'");
  }
  const int got_version = field<int>(doc, "version");
  if (got_version != version) {
    throw FormatError("unsupported " + format + " version " +
                      std::to_string(got_version));
  }
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("matrix must be an array of rows");
  Matrix m;
  for (const auto& row : j) {
    std::vector<double> values;
    try {
      values = row.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("matrix row: ") + e.what());
    }
    try {
      m.append_row(values);
    } catch (const std::invalid_argument&) {
      throw FormatError("ragged matrix");
    }
  }
  return m;
}

}  // namespace internal
}  // namespace shapleak
