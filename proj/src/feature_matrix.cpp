#include "echr/feature_matrix.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "echr/errors.hpp"

namespace echr {

FeatureMatrix::FeatureMatrix(std::vector<std::string> rows, std::vector<std::string> columns)
    : row_ids(std::move(rows)), column_names(std::move(columns)) {
  values.assign(row_ids.size() * column_names.size(), 0.0);
}

void FeatureMatrix::validate() const {
  if (values.size() != rows() * cols()) throw ValidationError("feature matrix shape mismatch");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("feature matrix contains a non-finite value");
  }
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.column_names = column_names;
  out.row_ids.reserve(indices.size());
  out.values.reserve(indices.size() * cols());
  for (auto r : indices) {
    out.row_ids.push_back(row_ids.at(r));
    const auto src = row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

void write_feature_csv(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "doc_id";
  for (const auto& name : matrix.column_names) out << ',' << csv_field(name);
  out << '\n';
  char buffer[32];
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out << csv_field(matrix.row_ids[r]);
    for (double v : matrix.row(r)) {
      std::snprintf(buffer, sizeof(buffer), "%.9g", v);
      out << ',' << buffer;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
  auto header = split_csv(line);
  if (header.empty() || header.front() != "doc_id") {
    throw FormatError(path.string() + ": header must start with doc_id");
  }
  FeatureMatrix matrix;
  matrix.column_names.assign(header.begin() + 1, header.end());
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_number) + ": expected " +
                        std::to_string(header.size()) + " fields");
    }
    matrix.row_ids.push_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (fields[c].empty() || *end != '\0' || !std::isfinite(v)) {
        throw FormatError(path.string() + ":" + std::to_string(line_number) +
                          ": invalid number '" + fields[c] + "'");
      }
      matrix.values.push_back(v);
    }
  }
  return matrix;
}

}  // namespace echr
