#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ccafuse/numerics.hpp"

namespace ccafuse {

/// N x d features for one modality. Rows are samples.
struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> columns;  // empty, or one name per column

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  std::string column_name(Eigen::Index j) const;
};

/// Column names "<prefix>0", "<prefix>1", ...
std::vector<std::string> numbered_columns(const std::string& prefix, Eigen::Index count);

using Labels = std::vector<int>;

/// Two-modality labelled dataset. `groups` identifies the recording unit a
/// sample came from (movie clip, trial); `folds` is an optional predefined
/// cross-validation assignment, one fold id per sample.
struct Dataset {
  FeatureMatrix view1;
  FeatureMatrix view2;
  Labels labels;
  std::vector<int> groups;
  std::vector<int> folds;

  std::size_t size() const { return labels.size(); }
  int num_classes() const;
  void validate() const;
};

/// Parsed CSV table: header row, one sample per row, optional trailing
/// `label` column.
struct CsvTable {
  FeatureMatrix features;
  std::optional<Labels> labels;
};

CsvTable read_feature_csv(const std::string& path);
void write_feature_csv(const std::string& path, const FeatureMatrix& features,
                       const Labels* labels = nullptr);

/// Shortest decimal form that round-trips the double exactly.
std::string format_double(double value);

}  // namespace ccafuse
