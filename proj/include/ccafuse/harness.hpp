#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccafuse/bdae.hpp"
#include "ccafuse/classifier.hpp"
#include "ccafuse/dcca.hpp"
#include "ccafuse/features.hpp"
#include "ccafuse/fusion.hpp"
#include "ccafuse/synthdata.hpp"

namespace ccafuse {

using Json = nlohmann::ordered_json;

enum class Method { dcca, concat, max, fuzzy, bdae, unimodal1, unimodal2 };
std::string to_string(Method m);
Method parse_method(const std::string& text);

enum class SplitKind { ratio, kfold, leave_one_group_out, predefined };

struct SplitScheme {
  SplitKind kind = SplitKind::predefined;
  int k = 3;               // kfold
  int train_parts = 9;     // ratio: train_parts : test_parts over groups
  int test_parts = 6;
};

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// kfold is label-stratified and shuffled by `rng`; ratio keeps the first
/// groups (in order of first appearance) for training; predefined uses
/// Dataset::folds.
std::vector<Fold> split(const Dataset& data, const SplitScheme& scheme, RandomStream& rng);

enum class NoiseKind { none, gaussian, replace };
enum class NoiseDistribution { normal, gamma, uniform };
enum class NoiseTarget { view1, view2, both };
enum class ReplaceMode { entries, dims };

struct NoiseScheme {
  NoiseKind kind = NoiseKind::none;
  double variance = 0.0;
  double proportion = 0.0;
  NoiseDistribution distribution = NoiseDistribution::normal;
  NoiseTarget target = NoiseTarget::view1;
  ReplaceMode replace_mode = ReplaceMode::entries;
  bool train_only = false;

  void validate() const;
  std::string label() const;  // "gaussian", "replace-normal", ...
  double level() const;       // variance or proportion
};

Matrix add_gaussian_noise(const Matrix& x, double variance, RandomStream& rng);

struct Replacement {
  Matrix values;
  std::vector<bool> mask;  // row-major, true where an entry was replaced
  std::size_t replaced = 0;
};

/// Replaces round(proportion * entries) uniformly chosen entries (or
/// round(proportion * cols) whole columns in dims mode) with iid draws.
Replacement replace_with_noise(const Matrix& x, double proportion, NoiseDistribution dist, RandomStream& rng,
                               ReplaceMode mode = ReplaceMode::entries);

struct DataSource {
  std::string kind = "seed-v-like";  // seed-v-like | generate | csv
  GenConfig generator{};
  std::string view1_path;
  std::string view2_path;
  std::string splits_path;  // optional CSV with group,fold columns
};

struct ExperimentConfig {
  std::string name = "experiment";
  DataSource data{};
  Method method = Method::dcca;
  DccaConfig dcca{};
  SvmConfig svm{};
  BdaeConfig bdae{};
  ScaleMode normalization = ScaleMode::zscore;
  SplitScheme split{};
  std::uint64_t seed = 1;
  std::vector<Eigen::Index> grid_dims;
  std::vector<double> grid_alphas;
  NoiseScheme noise{};
  std::vector<NoiseScheme> sweep;
  std::vector<std::string> sweep_methods;
  int jobs = 1;

  void validate() const;
};

Json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);

Dataset load_dataset(const ExperimentConfig& config);

/// Everything fitted on a training split: normalizers, the fusion method and
/// its classifier(s). Applying it never refits anything.
struct Pipeline {
  Method method = Method::concat;
  double alpha1 = 0.7;
  Scaler scaler1;
  Scaler scaler2;
  std::optional<DccaModel> dcca;
  std::optional<BdaeModel> bdae;
  std::optional<Scaler> unit1;  // bdae: min-max into [0, 1]
  std::optional<Scaler> unit2;
  std::optional<FuzzyMeasure> measure;
  std::vector<SvmModel> classifiers;  // one, or one per view for max/fuzzy
};

/// Records which sample indices each fitting stage saw.
class LeakageAudit {
 public:
  void record(int fold, const std::string& stage, const std::vector<std::size_t>& rows);
  struct Entry {
    int fold;
    std::string stage;
    std::vector<std::size_t> rows;
  };
  std::vector<Entry> entries() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
};

struct FoldResult {
  int fold = 0;
  bool ok = false;
  std::string error;
  double accuracy = 0.0;
  std::size_t test_size = 0;
  Labels truth;
  Labels predicted;
};

struct Summary {
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across folds
  Matrix confusion;  // rows = true class, cols = predicted
  bool partial = false;
  std::vector<std::string> errors;
};

Summary summarize(const std::vector<FoldResult>& folds, int classes);

struct GridCell {
  Eigen::Index dim = 0;
  double alpha1 = 0.0;
  Summary summary;
};

struct NoisePoint {
  std::string method;  // "concat", "DCCA-0.3", ...
  std::string scheme;
  double level = 0.0;
  Summary summary;
};

struct ExperimentReport {
  Json config;
  std::uint64_t seed = 0;
  std::string method;
  Summary summary;
  std::vector<GridCell> grid;
  std::optional<GridCell> best;
  std::vector<NoisePoint> noise;
  std::vector<std::string> warnings;
  double seconds = 0.0;  // written to timing.json, never to report.json
};

Json to_json(const ExperimentReport& report);

struct RunOptions {
  int jobs = 1;
  LeakageAudit* audit = nullptr;
};

/// Fits normalizers, method and classifier on `train` rows. Noise, when
/// configured, is added after normalization.
Pipeline fit_pipeline(const Dataset& data, const std::vector<std::size_t>& train, const ExperimentConfig& config,
                      RandomStream& rng, Warnings* warnings = nullptr);
Labels predict(const Pipeline& pipeline, const Matrix& x1, const Matrix& x2);

ExperimentReport run_experiment(const ExperimentConfig& config, const Dataset& data, const RunOptions& options = {});
ExperimentReport grid_search(const ExperimentConfig& config, const Dataset& data, const RunOptions& options = {});
ExperimentReport noise_sweep(const ExperimentConfig& config, const Dataset& data, const RunOptions& options = {});

/// CSV rows: original and transformed features per modality plus the fused
/// features, with label, modality and stage columns. (2 + 2 + 1) * N rows.
void export_embeddings(const Pipeline& pipeline, const Dataset& data, const std::string& path);

/// Report files: report.json, confusion.csv, and heatmap.csv / noise.csv when
/// present. Timing goes to timing.json.
void write_report(const ExperimentReport& report, const std::string& out_dir);

/// Runs `count` tasks on up to `jobs` threads. Exceptions are rethrown in task
/// order after all tasks finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace ccafuse
