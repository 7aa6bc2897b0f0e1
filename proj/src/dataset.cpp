#include "ccafuse/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ccafuse/errors.hpp"

namespace ccafuse {

std::string FeatureMatrix::column_name(Eigen::Index j) const {
  if (j < static_cast<Eigen::Index>(columns.size())) return columns[static_cast<std::size_t>(j)];
  return "f" + std::to_string(j);
}

std::vector<std::string> numbered_columns(const std::string& prefix, Eigen::Index count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index j = 0; j < count; ++j) names.push_back(prefix + std::to_string(j));
  return names;
}

int Dataset::num_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

void Dataset::validate() const {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (n == 0) throw DimensionError("dataset: no samples");
  if (view1.rows() != n || view2.rows() != n) {
    throw DimensionError("dataset: view row counts do not match label count");
  }
  if (!groups.empty() && static_cast<Eigen::Index>(groups.size()) != n) {
    throw DimensionError("dataset: group count does not match label count");
  }
  if (!folds.empty() && static_cast<Eigen::Index>(folds.size()) != n) {
    throw DimensionError("dataset: fold count does not match label count");
  }
  for (int y : labels)
    if (y < 0) throw ParameterError("dataset: negative label");
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("format_double: conversion failed");
  return std::string(buf, end);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    cells.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& text, std::size_t row, std::size_t col) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("csv: cannot parse '" + text + "' at row " + std::to_string(row) + ", column " +
                  std::to_string(col));
  }
  return value;
}

}  // namespace

CsvTable read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv: empty file " + path);
  std::vector<std::string> header = split_line(line);
  const bool has_label = !header.empty() && header.back() == "label";
  const std::size_t feature_cols = header.size() - (has_label ? 1 : 0);
  if (feature_cols == 0) throw IoError("csv: no feature columns in " + path);

  std::vector<std::vector<double>> rows;
  Labels labels;
  std::size_t row_index = 1;
  while (std::getline(in, line)) {
    ++row_index;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw IoError("csv: row " + std::to_string(row_index) + " has " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(header.size()));
    }
    std::vector<double> values(feature_cols);
    for (std::size_t j = 0; j < feature_cols; ++j) values[j] = parse_number(cells[j], row_index, j);
    rows.push_back(std::move(values));
    if (has_label) labels.push_back(static_cast<int>(parse_number(cells.back(), row_index, feature_cols)));
  }
  if (rows.empty()) throw IoError("csv: no data rows in " + path);

  CsvTable table;
  table.features.values.resize(static_cast<Eigen::Index>(rows.size()),
                               static_cast<Eigen::Index>(feature_cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < feature_cols; ++j)
      table.features.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  header.resize(feature_cols);
  table.features.columns = std::move(header);
  if (has_label) table.labels = std::move(labels);
  return table;
}

void write_feature_csv(const std::string& path, const FeatureMatrix& features, const Labels* labels) {
  if (labels != nullptr && static_cast<Eigen::Index>(labels->size()) != features.rows()) {
    throw DimensionError("csv: label count does not match row count");
  }
  std::ofstream out(path);
  if (!out) throw IoError("csv: cannot write " + path);
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    if (j > 0) out << ',';
    out << features.column_name(j);
  }
  if (labels != nullptr) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(features.values(i, j));
    }
    if (labels != nullptr) out << ',' << (*labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
  if (!out) throw IoError("csv: write failed for " + path);
}

}  // namespace ccafuse
