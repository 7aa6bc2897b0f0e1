#include "ccafuse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace ccafuse {

// ---------------------------------------------------------------- enums

std::string to_string(Method m) {
  switch (m) {
    case Method::dcca: return "dcca";
    case Method::concat: return "concat";
    case Method::max: return "max";
    case Method::fuzzy: return "fuzzy";
    case Method::bdae: return "bdae";
    case Method::unimodal1: return "unimodal-1";
    case Method::unimodal2: return "unimodal-2";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  for (Method m : {Method::dcca, Method::concat, Method::max, Method::fuzzy, Method::bdae, Method::unimodal1,
                   Method::unimodal2}) {
    if (to_string(m) == text) return m;
  }
  throw ParameterError("unknown method '" + text + "'");
}

namespace {

template <typename E>
struct EnumNames {
  std::vector<std::pair<E, const char*>> names;
  const char* what;

  std::string str(E e) const {
    for (const auto& [v, n] : names)
      if (v == e) return n;
    return "?";
  }
  E parse(const std::string& text) const {
    for (const auto& [v, n] : names)
      if (text == n) return v;
    throw ParameterError(std::string("unknown ") + what + " '" + text + "'");
  }
};

const EnumNames<SplitKind> kSplitNames{{{SplitKind::ratio, "ratio"},
                                        {SplitKind::kfold, "kfold"},
                                        {SplitKind::leave_one_group_out, "leave-one-group-out"},
                                        {SplitKind::predefined, "predefined"}},
                                       "split scheme"};
const EnumNames<NoiseKind> kNoiseNames{
    {{NoiseKind::none, "none"}, {NoiseKind::gaussian, "gaussian"}, {NoiseKind::replace, "replace"}}, "noise kind"};
const EnumNames<NoiseDistribution> kDistNames{{{NoiseDistribution::normal, "normal"},
                                               {NoiseDistribution::gamma, "gamma"},
                                               {NoiseDistribution::uniform, "uniform"}},
                                              "noise distribution"};
const EnumNames<NoiseTarget> kTargetNames{
    {{NoiseTarget::view1, "view1"}, {NoiseTarget::view2, "view2"}, {NoiseTarget::both, "both"}}, "noise target"};
const EnumNames<ReplaceMode> kModeNames{{{ReplaceMode::entries, "entries"}, {ReplaceMode::dims, "dims"}},
                                        "replace mode"};

std::vector<int> first_appearance_order(const std::vector<int>& ids) {
  std::vector<int> order;
  std::set<int> seen;
  for (int g : ids)
    if (seen.insert(g).second) order.push_back(g);
  return order;
}

Fold fold_from_test_mask(const std::vector<bool>& in_test) {
  Fold f;
  for (std::size_t i = 0; i < in_test.size(); ++i) (in_test[i] ? f.test : f.train).push_back(i);
  return f;
}

}  // namespace

// ---------------------------------------------------------------- splits

std::vector<Fold> split(const Dataset& data, const SplitScheme& scheme, RandomStream& rng) {
  data.validate();
  const std::size_t n = data.size();
  std::vector<Fold> folds;
  switch (scheme.kind) {
    case SplitKind::kfold: {
      if (scheme.k < 2) throw ParameterError("split: kfold needs k >= 2");
      if (static_cast<std::size_t>(scheme.k) > n) throw ParameterError("split: k exceeds the number of samples");
      std::map<int, std::vector<std::size_t>> by_class;
      for (std::size_t i = 0; i < n; ++i) by_class[data.labels[i]].push_back(i);
      std::vector<int> assignment(n, 0);
      std::size_t next = 0;
      for (auto& [label, rows] : by_class) {
        rng.shuffle(rows);
        // Continue the round-robin across classes so fold sizes differ by at most one.
        for (std::size_t r : rows) assignment[r] = static_cast<int>(next++ % static_cast<std::size_t>(scheme.k));
      }
      for (int f = 0; f < scheme.k; ++f) {
        std::vector<bool> mask(n);
        for (std::size_t i = 0; i < n; ++i) mask[i] = assignment[i] == f;
        folds.push_back(fold_from_test_mask(mask));
      }
      break;
    }
    case SplitKind::leave_one_group_out: {
      if (data.groups.empty()) throw ParameterError("split: leave-one-group-out needs group ids");
      const auto order = first_appearance_order(data.groups);
      if (order.size() < 2) throw ParameterError("split: leave-one-group-out needs at least two groups");
      for (int g : order) {
        std::vector<bool> mask(n);
        for (std::size_t i = 0; i < n; ++i) mask[i] = data.groups[i] == g;
        folds.push_back(fold_from_test_mask(mask));
      }
      break;
    }
    case SplitKind::ratio: {
      if (scheme.train_parts < 1 || scheme.test_parts < 1) throw ParameterError("split: ratio parts must be >= 1");
      std::vector<int> ids = data.groups;
      if (ids.empty()) {
        ids.resize(n);
        std::iota(ids.begin(), ids.end(), 0);
      }
      const auto order = first_appearance_order(ids);
      if (order.size() < 2) throw ParameterError("split: ratio split needs at least two groups");
      const double frac = static_cast<double>(scheme.train_parts) / (scheme.train_parts + scheme.test_parts);
      auto n_train = static_cast<std::size_t>(std::llround(frac * static_cast<double>(order.size())));
      n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
      const std::set<int> train_groups(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
      std::vector<bool> mask(n);
      for (std::size_t i = 0; i < n; ++i) mask[i] = train_groups.count(ids[i]) == 0;
      folds.push_back(fold_from_test_mask(mask));
      break;
    }
    case SplitKind::predefined: {
      if (data.folds.empty()) throw ParameterError("split: dataset has no predefined folds");
      const std::set<int> ids(data.folds.begin(), data.folds.end());
      if (ids.size() < 2) throw ParameterError("split: predefined split needs at least two folds");
      for (int f : ids) {
        std::vector<bool> mask(n);
        for (std::size_t i = 0; i < n; ++i) mask[i] = data.folds[i] == f;
        folds.push_back(fold_from_test_mask(mask));
      }
      break;
    }
  }
  return folds;
}

// ---------------------------------------------------------------- noise

void NoiseScheme::validate() const {
  if (variance < 0.0) throw ParameterError("noise: variance must be non-negative");
  if (proportion < 0.0 || proportion > 1.0) throw ParameterError("noise: proportion must lie in [0, 1]");
}

std::string NoiseScheme::label() const {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::replace: return "replace-" + kDistNames.str(distribution);
  }
  return "?";
}

double NoiseScheme::level() const {
  return kind == NoiseKind::gaussian ? variance : kind == NoiseKind::replace ? proportion : 0.0;
}

Matrix add_gaussian_noise(const Matrix& x, double variance, RandomStream& rng) {
  if (variance < 0.0) throw ParameterError("add_gaussian_noise: variance must be non-negative");
  if (variance == 0.0) return x;
  return x + std::sqrt(variance) * normal_matrix(rng, x.rows(), x.cols());
}

namespace {

double draw(NoiseDistribution dist, RandomStream& rng) {
  switch (dist) {
    case NoiseDistribution::normal: return rng.normal();
    case NoiseDistribution::gamma: return rng.gamma(1.0);
    case NoiseDistribution::uniform: return rng.uniform();
  }
  throw ParameterError("unknown noise distribution");
}

}  // namespace

Replacement replace_with_noise(const Matrix& x, double proportion, NoiseDistribution dist, RandomStream& rng,
                               ReplaceMode mode) {
  if (proportion < 0.0 || proportion > 1.0) throw ParameterError("replace_with_noise: proportion must lie in [0, 1]");
  Replacement out;
  out.values = x;
  const auto rows = static_cast<std::size_t>(x.rows());
  const auto cols = static_cast<std::size_t>(x.cols());
  out.mask.assign(rows * cols, false);
  if (mode == ReplaceMode::entries) {
    const std::size_t total = rows * cols;
    const auto count = static_cast<std::size_t>(std::llround(proportion * static_cast<double>(total)));
    std::vector<std::size_t> pool(total);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.index(total - i)]);
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
    for (std::size_t i = 0; i < count; ++i) out.mask[pool[i]] = true;
  } else {
    const auto count = static_cast<std::size_t>(std::llround(proportion * static_cast<double>(cols)));
    std::vector<std::size_t> pool(cols);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.index(cols - i)]);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t r = 0; r < rows; ++r) out.mask[r * cols + pool[i]] = true;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!out.mask[r * cols + c]) continue;
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = draw(dist, rng);
      ++out.replaced;
    }
  }
  return out;
}

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  dcca.validate();
  svm.validate();
  if (method == Method::bdae) bdae.validate();
  noise.validate();
  for (const auto& s : sweep) s.validate();
  for (const auto& m : sweep_methods) parse_method(m);
  for (auto d : grid_dims)
    if (d < 1) throw ParameterError("config: grid dimensions must be >= 1");
  for (double a : grid_alphas)
    if (a < 0.0 || a > 1.0) throw ParameterError("config: grid alphas must lie in [0, 1]");
  if (jobs < 1) throw ParameterError("config: jobs must be >= 1");
  if (data.kind != "seed-v-like" && data.kind != "generate" && data.kind != "csv") {
    throw ParameterError("config: unknown data source '" + data.kind + "'");
  }
  if (data.kind == "generate") data.generator.validate();
}

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ParameterError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ParameterError("config: unknown field '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

Json to_json(const OptimizerConfig& c) {
  return Json{{"method", std::string(to_string(c.method))}, {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size}, {"momentum", c.momentum}, {"decay", c.decay}, {"epsilon", c.epsilon}};
}

OptimizerConfig optimizer_from_json(const Json& j, OptimizerConfig c) {
  check_keys(j, {"method", "learning_rate", "batch_size", "momentum", "decay", "epsilon"}, "optimizer");
  if (j.contains("method")) c.method = parse_optimizer(j.at("method").get<std::string>());
  read(j, "learning_rate", c.learning_rate);
  read(j, "batch_size", c.batch_size);
  read(j, "momentum", c.momentum);
  read(j, "decay", c.decay);
  read(j, "epsilon", c.epsilon);
  return c;
}

Json to_json(const DccaConfig& c) {
  return Json{{"hidden1", c.hidden1},
              {"hidden2", c.hidden2},
              {"out_dim", c.out_dim},
              {"hidden_activation", std::string(to_string(c.hidden_activation))},
              {"output_activation", std::string(to_string(c.output_activation))},
              {"optimizer", to_json(c.optimizer)},
              {"reg1", c.reg1},
              {"reg2", c.reg2},
              {"epochs", c.epochs},
              {"alpha1", c.alpha1}};
}

DccaConfig dcca_from_json(const Json& j) {
  check_keys(j, {"hidden1", "hidden2", "out_dim", "hidden_activation", "output_activation", "optimizer", "reg1",
                 "reg2", "epochs", "alpha1"},
             "dcca");
  DccaConfig c;
  read(j, "hidden1", c.hidden1);
  read(j, "hidden2", c.hidden2);
  read(j, "out_dim", c.out_dim);
  if (j.contains("hidden_activation")) c.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
  if (j.contains("output_activation")) c.output_activation = parse_activation(j.at("output_activation").get<std::string>());
  if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"), c.optimizer);
  read(j, "reg1", c.reg1);
  read(j, "reg2", c.reg2);
  read(j, "epochs", c.epochs);
  read(j, "alpha1", c.alpha1);
  return c;
}

Json to_json(const SvmConfig& c) {
  return Json{{"c", c.c}, {"epochs", c.epochs}, {"batch_size", c.batch_size}, {"initial_step", c.initial_step}};
}

SvmConfig svm_from_json(const Json& j) {
  check_keys(j, {"c", "epochs", "batch_size", "initial_step"}, "svm");
  SvmConfig c;
  read(j, "c", c.c);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "initial_step", c.initial_step);
  return c;
}

Json to_json(const BdaeConfig& c) {
  return Json{{"hidden1", c.hidden1},
              {"hidden2", c.hidden2},
              {"shared", c.shared},
              {"pretrain_epochs", c.pretrain_epochs},
              {"pretrain_learning_rate", c.pretrain_learning_rate},
              {"pretrain_batch_size", c.pretrain_batch_size},
              {"finetune_epochs", c.finetune_epochs},
              {"finetune", to_json(c.finetune)}};
}

BdaeConfig bdae_from_json(const Json& j) {
  check_keys(j, {"hidden1", "hidden2", "shared", "pretrain_epochs", "pretrain_learning_rate", "pretrain_batch_size",
                 "finetune_epochs", "finetune"},
             "bdae");
  BdaeConfig c;
  read(j, "hidden1", c.hidden1);
  read(j, "hidden2", c.hidden2);
  read(j, "shared", c.shared);
  read(j, "pretrain_epochs", c.pretrain_epochs);
  read(j, "pretrain_learning_rate", c.pretrain_learning_rate);
  read(j, "pretrain_batch_size", c.pretrain_batch_size);
  read(j, "finetune_epochs", c.finetune_epochs);
  if (j.contains("finetune")) c.finetune = optimizer_from_json(j.at("finetune"), c.finetune);
  return c;
}

Json to_json(const GenConfig& c) {
  return Json{{"classes", c.classes},
              {"latent_dim", c.latent_dim},
              {"dim1", c.dim1},
              {"dim2", c.dim2},
              {"samples_per_class", c.samples_per_class},
              {"noise1", c.noise1},
              {"noise2", c.noise2},
              {"nonlinear2", c.nonlinear2},
              {"mixing_scale", c.mixing_scale},
              {"separation", c.separation},
              {"latent_std", c.latent_std},
              {"private_dim", c.private_dim},
              {"private_std", c.private_std},
              {"seed", c.seed}};
}

GenConfig generator_from_json(const Json& j) {
  check_keys(j, {"classes", "latent_dim", "dim1", "dim2", "samples_per_class", "noise1", "noise2", "nonlinear2",
                 "mixing_scale", "separation", "latent_std", "private_dim", "private_std", "seed"},
             "generator");
  GenConfig c;
  read(j, "classes", c.classes);
  read(j, "latent_dim", c.latent_dim);
  read(j, "dim1", c.dim1);
  read(j, "dim2", c.dim2);
  read(j, "samples_per_class", c.samples_per_class);
  read(j, "noise1", c.noise1);
  read(j, "noise2", c.noise2);
  read(j, "nonlinear2", c.nonlinear2);
  read(j, "mixing_scale", c.mixing_scale);
  read(j, "separation", c.separation);
  read(j, "latent_std", c.latent_std);
  read(j, "private_dim", c.private_dim);
  read(j, "private_std", c.private_std);
  read(j, "seed", c.seed);
  return c;
}

Json to_json(const NoiseScheme& s) {
  return Json{{"kind", kNoiseNames.str(s.kind)},
              {"variance", s.variance},
              {"proportion", s.proportion},
              {"distribution", kDistNames.str(s.distribution)},
              {"target", kTargetNames.str(s.target)},
              {"replace_mode", kModeNames.str(s.replace_mode)},
              {"train_only", s.train_only}};
}

NoiseScheme noise_from_json(const Json& j) {
  check_keys(j, {"kind", "variance", "proportion", "distribution", "target", "replace_mode", "train_only"}, "noise");
  NoiseScheme s;
  if (j.contains("kind")) s.kind = kNoiseNames.parse(j.at("kind").get<std::string>());
  // Gaussian noise defaults to both views, replacement to view 1.
  if (s.kind == NoiseKind::gaussian) s.target = NoiseTarget::both;
  read(j, "variance", s.variance);
  read(j, "proportion", s.proportion);
  if (j.contains("distribution")) s.distribution = kDistNames.parse(j.at("distribution").get<std::string>());
  if (j.contains("target")) s.target = kTargetNames.parse(j.at("target").get<std::string>());
  if (j.contains("replace_mode")) s.replace_mode = kModeNames.parse(j.at("replace_mode").get<std::string>());
  read(j, "train_only", s.train_only);
  return s;
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
  Json data{{"kind", c.data.kind}};
  if (c.data.kind == "generate") data["generator"] = to_json(c.data.generator);
  if (c.data.kind == "seed-v-like") data["seed"] = c.data.generator.seed;
  if (c.data.kind == "csv") {
    data["view1"] = c.data.view1_path;
    data["view2"] = c.data.view2_path;
    if (!c.data.splits_path.empty()) data["splits"] = c.data.splits_path;
  }
  Json sweep = Json::array();
  for (const auto& s : c.sweep) sweep.push_back(to_json(s));
  return Json{{"name", c.name},
              {"data", data},
              {"method", to_string(c.method)},
              {"dcca", to_json(c.dcca)},
              {"svm", to_json(c.svm)},
              {"bdae", to_json(c.bdae)},
              {"normalization", to_string(c.normalization)},
              {"split",
               Json{{"kind", kSplitNames.str(c.split.kind)},
                    {"k", c.split.k},
                    {"train_parts", c.split.train_parts},
                    {"test_parts", c.split.test_parts}}},
              {"seed", c.seed},
              {"grid", Json{{"dims", c.grid_dims}, {"alphas", c.grid_alphas}}},
              {"noise", to_json(c.noise)},
              {"sweep", sweep},
              {"sweep_methods", c.sweep_methods}};
}

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j, {"name", "data", "method", "dcca", "svm", "bdae", "normalization", "split", "seed", "grid", "noise",
                 "sweep", "sweep_methods", "jobs"},
             "config");
  ExperimentConfig c;
  read(j, "name", c.name);
  if (j.contains("data")) {
    const Json& d = j.at("data");
    check_keys(d, {"kind", "generator", "seed", "view1", "view2", "splits"}, "data");
    read(d, "kind", c.data.kind);
    if (d.contains("generator")) c.data.generator = generator_from_json(d.at("generator"));
    read(d, "seed", c.data.generator.seed);
    read(d, "view1", c.data.view1_path);
    read(d, "view2", c.data.view2_path);
    read(d, "splits", c.data.splits_path);
  }
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("dcca")) c.dcca = dcca_from_json(j.at("dcca"));
  if (j.contains("svm")) c.svm = svm_from_json(j.at("svm"));
  if (j.contains("bdae")) c.bdae = bdae_from_json(j.at("bdae"));
  if (j.contains("normalization")) c.normalization = parse_scale_mode(j.at("normalization").get<std::string>());
  if (j.contains("split")) {
    const Json& s = j.at("split");
    check_keys(s, {"kind", "k", "train_parts", "test_parts"}, "split");
    if (s.contains("kind")) c.split.kind = kSplitNames.parse(s.at("kind").get<std::string>());
    read(s, "k", c.split.k);
    read(s, "train_parts", c.split.train_parts);
    read(s, "test_parts", c.split.test_parts);
  }
  read(j, "seed", c.seed);
  if (j.contains("grid")) {
    const Json& g = j.at("grid");
    check_keys(g, {"dims", "alphas"}, "grid");
    read(g, "dims", c.grid_dims);
    read(g, "alphas", c.grid_alphas);
  }
  if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
  if (j.contains("sweep")) {
    for (const auto& s : j.at("sweep")) c.sweep.push_back(noise_from_json(s));
  }
  read(j, "sweep_methods", c.sweep_methods);
  read(j, "jobs", c.jobs);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Dataset load_dataset(const ExperimentConfig& config) {
  if (config.data.kind == "seed-v-like") return seed_v_like(config.data.generator.seed);
  if (config.data.kind == "generate") return generate(config.data.generator);
  CsvTable t1 = read_feature_csv(config.data.view1_path);
  CsvTable t2 = read_feature_csv(config.data.view2_path);
  if (!t1.labels) throw IoError("view 1 CSV has no label column");
  if (t2.labels && *t2.labels != *t1.labels) throw IoError("view 1 and view 2 CSV labels disagree");
  Dataset d;
  d.view1 = std::move(t1.features);
  d.view2 = std::move(t2.features);
  d.labels = std::move(*t1.labels);
  if (!config.data.splits_path.empty()) {
    const CsvTable splits = read_feature_csv(config.data.splits_path);
    const FeatureMatrix& s = splits.features;
    if (s.rows() != d.view1.rows() || s.cols() != 2 || s.column_name(0) != "group" || s.column_name(1) != "fold") {
      throw IoError("splits CSV must have columns group,fold and one row per sample");
    }
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      d.groups.push_back(static_cast<int>(s.values(i, 0)));
      d.folds.push_back(static_cast<int>(s.values(i, 1)));
    }
  }
  d.validate();
  return d;
}

// ---------------------------------------------------------------- audit

void LeakageAudit::record(int fold, const std::string& stage, const std::vector<std::size_t>& rows) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_.push_back({fold, stage, rows});
}

std::vector<LeakageAudit::Entry> LeakageAudit::entries() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_;
}

// ---------------------------------------------------------------- pipeline

namespace {

bool feature_level(Method m) { return m != Method::max && m != Method::fuzzy; }

/// Normalized (and possibly noisy) train/test matrices for one fold.
struct Prepared {
  Matrix x1_train, x2_train, x1_test, x2_test;
  Labels y_train, y_test;
  Scaler scaler1, scaler2;
};

Labels pick(const Labels& y, const std::vector<std::size_t>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

void apply_noise(const NoiseScheme& scheme, Matrix& x1, Matrix& x2, RandomStream rng) {
  if (scheme.kind == NoiseKind::none) return;
  const bool hit1 = scheme.target != NoiseTarget::view2;
  const bool hit2 = scheme.target != NoiseTarget::view1;
  RandomStream r1 = rng.substream("view1");
  RandomStream r2 = rng.substream("view2");
  if (scheme.kind == NoiseKind::gaussian) {
    if (hit1) x1 = add_gaussian_noise(x1, scheme.variance, r1);
    if (hit2) x2 = add_gaussian_noise(x2, scheme.variance, r2);
  } else {
    if (hit1) x1 = replace_with_noise(x1, scheme.proportion, scheme.distribution, r1, scheme.replace_mode).values;
    if (hit2) x2 = replace_with_noise(x2, scheme.proportion, scheme.distribution, r2, scheme.replace_mode).values;
  }
}

Prepared prepare(const Dataset& data, const Fold& fold, const ExperimentConfig& cfg, const NoiseScheme& noise,
                 RandomStream& rng, LeakageAudit* audit, int fold_id, Warnings* warnings) {
  Prepared p;
  const Matrix x1_train = select_rows(data.view1.values, fold.train);
  const Matrix x2_train = select_rows(data.view2.values, fold.train);
  if (audit) audit->record(fold_id, "normalize", fold.train);
  auto n1 = normalize(x1_train, {select_rows(data.view1.values, fold.test)}, cfg.normalization, warnings);
  auto n2 = normalize(x2_train, {select_rows(data.view2.values, fold.test)}, cfg.normalization, warnings);
  p.x1_train = std::move(n1.train);
  p.x1_test = std::move(n1.others[0]);
  p.x2_train = std::move(n2.train);
  p.x2_test = std::move(n2.others[0]);
  p.scaler1 = n1.scaler;
  p.scaler2 = n2.scaler;
  p.y_train = pick(data.labels, fold.train);
  p.y_test = pick(data.labels, fold.test);
  RandomStream noise_rng = rng.substream("noise");
  apply_noise(noise, p.x1_train, p.x2_train, noise_rng.substream("train"));
  if (!noise.train_only) apply_noise(noise, p.x1_test, p.x2_test, noise_rng.substream("test"));
  return p;
}

/// Feature matrix handed to the classifier for feature-level methods.
Matrix representation(const Pipeline& p, const Matrix& x1, const Matrix& x2, Warnings* warnings) {
  switch (p.method) {
    case Method::concat: return concat(x1, x2);
    case Method::unimodal1: return x1;
    case Method::unimodal2: return x2;
    case Method::dcca: {
      const auto [o1, o2] = embed(*p.dcca, x1, x2);
      return fuse(o1, o2, p.alpha1);
    }
    case Method::bdae: {
      const Matrix u1 = clip_unit(p.unit1->apply(x1), warnings, "bdae view 1");
      const Matrix u2 = clip_unit(p.unit2->apply(x2), warnings, "bdae view 2");
      return encode(*p.bdae, u1, u2);
    }
    default: throw ContractError("representation: decision-level method");
  }
}

/// Fits the method (everything except the classifier for feature-level methods).
void fit_core(Pipeline& p, const Matrix& x1, const Matrix& x2, const Labels& y, const ExperimentConfig& cfg,
              RandomStream& rng, Warnings* warnings) {
  if (p.method == Method::dcca) {
    RandomStream r = rng.substream("dcca");
    p.dcca = train_dcca(x1, x2, cfg.dcca, r, warnings);
  } else if (p.method == Method::bdae) {
    p.unit1 = fit_scaler(x1, ScaleMode::minmax, warnings);
    p.unit2 = fit_scaler(x2, ScaleMode::minmax, warnings);
    const Matrix u1 = clip_unit(p.unit1->apply(x1), warnings, "bdae view 1");
    const Matrix u2 = clip_unit(p.unit2->apply(x2), warnings, "bdae view 2");
    RandomStream r = rng.substream("bdae");
    p.bdae = train_bdae(u1, u2, cfg.bdae, r, warnings);
  } else if (!feature_level(p.method)) {
    p.classifiers.clear();
    RandomStream r1 = rng.substream("svm1");
    RandomStream r2 = rng.substream("svm2");
    p.classifiers.push_back(train_svm(x1, y, cfg.svm, r1));
    p.classifiers.push_back(train_svm(x2, y, cfg.svm, r2));
    if (p.method == Method::fuzzy) {
      const std::vector<Matrix> probs{predict_proba(p.classifiers[0], x1), predict_proba(p.classifiers[1], x2)};
      p.measure = fit_fuzzy_measure(std::span<const Matrix>(probs), y, warnings).measure;
    }
  }
}

void fit_head(Pipeline& p, const Matrix& x1, const Matrix& x2, const Labels& y, const ExperimentConfig& cfg,
              RandomStream& rng, Warnings* warnings) {
  if (!feature_level(p.method)) return;
  RandomStream r = rng.substream("svm");
  p.classifiers = {train_svm(representation(p, x1, x2, warnings), y, cfg.svm, r)};
}

Labels predict_normalized(const Pipeline& p, const Matrix& x1, const Matrix& x2, Warnings* warnings) {
  if (feature_level(p.method)) return predict(p.classifiers.at(0), representation(p, x1, x2, warnings));
  const std::vector<Matrix> probs{predict_proba(p.classifiers.at(0), x1), predict_proba(p.classifiers.at(1), x2)};
  if (p.method == Method::max) return max_fusion(std::span<const Matrix>(probs));
  return choquet_fusion_predict(std::span<const Matrix>(probs), *p.measure);
}

RandomStream fold_stream(const ExperimentConfig& cfg, std::size_t fold) {
  return RandomStream(cfg.seed, 0xf01d).substream(static_cast<std::uint64_t>(fold));
}

RandomStream split_stream(const ExperimentConfig& cfg) { return RandomStream(cfg.seed, 0x5b11); }

/// One fold of one method under one noise scheme. For dcca the towers are
/// trained once and the classifier is refit for each weight in `alphas`.
std::vector<FoldResult> evaluate_fold(const Dataset& data, const Fold& fold, int fold_id, Method method,
                                      const ExperimentConfig& cfg, const NoiseScheme& noise,
                                      const std::vector<double>& alphas, LeakageAudit* audit, Warnings* warnings) {
  const std::size_t variants = method == Method::dcca ? alphas.size() : 1;
  std::vector<FoldResult> results(variants);
  for (auto& r : results) {
    r.fold = fold_id;
    r.test_size = fold.test.size();
  }
  try {
    RandomStream rng = fold_stream(cfg, static_cast<std::size_t>(fold_id));
    const Prepared prep = prepare(data, fold, cfg, noise, rng, audit, fold_id, warnings);
    Pipeline p;
    p.method = method;
    p.scaler1 = prep.scaler1;
    p.scaler2 = prep.scaler2;
    if (audit) audit->record(fold_id, "method:" + to_string(method), fold.train);
    fit_core(p, prep.x1_train, prep.x2_train, prep.y_train, cfg, rng, warnings);
    for (std::size_t v = 0; v < variants; ++v) {
      p.alpha1 = method == Method::dcca ? alphas[v] : cfg.dcca.alpha1;
      if (audit) audit->record(fold_id, "classifier", fold.train);
      fit_head(p, prep.x1_train, prep.x2_train, prep.y_train, cfg, rng, warnings);
      FoldResult& r = results[v];
      r.truth = prep.y_test;
      r.predicted = predict_normalized(p, prep.x1_test, prep.x2_test, warnings);
      r.accuracy = accuracy(r.truth, r.predicted);
      r.ok = true;
    }
  } catch (const std::exception& e) {
    for (auto& r : results) {
      if (r.ok) continue;
      r.error = e.what();
    }
  }
  return results;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::string> merge_warnings(const std::vector<Warnings>& per_task, const std::vector<std::string>& labels) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t t = 0; t < per_task.size(); ++t) {
    for (const auto& w : per_task[t]) {
      std::string line = labels[t] + ": " + w;
      if (seen.insert(line).second) out.push_back(std::move(line));
    }
  }
  return out;
}

std::string alpha_label(double a) {
  std::ostringstream s;
  s << "DCCA-" << a;
  return s.str();
}

}  // namespace

Pipeline fit_pipeline(const Dataset& data, const std::vector<std::size_t>& train, const ExperimentConfig& cfg,
                      RandomStream& rng, Warnings* warnings) {
  cfg.validate();
  Fold fold;
  fold.train = train;
  const Prepared prep = prepare(data, fold, cfg, cfg.noise, rng, nullptr, 0, warnings);
  Pipeline p;
  p.method = cfg.method;
  p.alpha1 = cfg.dcca.alpha1;
  p.scaler1 = prep.scaler1;
  p.scaler2 = prep.scaler2;
  fit_core(p, prep.x1_train, prep.x2_train, prep.y_train, cfg, rng, warnings);
  fit_head(p, prep.x1_train, prep.x2_train, prep.y_train, cfg, rng, warnings);
  return p;
}

Labels predict(const Pipeline& pipeline, const Matrix& x1, const Matrix& x2) {
  return predict_normalized(pipeline, pipeline.scaler1.apply(x1), pipeline.scaler2.apply(x2), nullptr);
}

Summary summarize(const std::vector<FoldResult>& folds, int classes) {
  Summary s;
  s.confusion = Matrix::Zero(classes, classes);
  for (const auto& f : folds) {
    if (!f.ok) {
      s.partial = true;
      s.errors.push_back("fold " + std::to_string(f.fold) + ": " + f.error);
      continue;
    }
    s.fold_accuracy.push_back(f.accuracy);
    for (std::size_t i = 0; i < f.truth.size(); ++i) s.confusion(f.truth[i], f.predicted[i]) += 1.0;
  }
  if (!s.fold_accuracy.empty()) {
    s.mean = std::accumulate(s.fold_accuracy.begin(), s.fold_accuracy.end(), 0.0) /
             static_cast<double>(s.fold_accuracy.size());
    s.std = sample_std(s.fold_accuracy);
  }
  return s;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) guarded(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- experiments

namespace {

ExperimentReport base_report(const ExperimentConfig& cfg) {
  ExperimentReport r;
  r.config = to_json(cfg);
  r.seed = cfg.seed;
  r.method = to_string(cfg.method);
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& data, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  data.validate();
  RandomStream srng = split_stream(cfg);
  const auto folds = split(data, cfg.split, srng);
  std::vector<FoldResult> results(folds.size());
  std::vector<Warnings> warnings(folds.size());
  parallel_for(folds.size(), options.jobs, [&](std::size_t f) {
    results[f] = evaluate_fold(data, folds[f], static_cast<int>(f), cfg.method, cfg, cfg.noise, {cfg.dcca.alpha1},
                               options.audit, &warnings[f])[0];
  });
  ExperimentReport report = base_report(cfg);
  report.summary = summarize(results, data.num_classes());
  std::vector<std::string> labels;
  for (std::size_t f = 0; f < folds.size(); ++f) labels.push_back("fold " + std::to_string(f));
  report.warnings = merge_warnings(warnings, labels);
  report.seconds = seconds_since(start);
  return report;
}

ExperimentReport grid_search(const ExperimentConfig& cfg_in, const Dataset& data, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = cfg_in;
  cfg.method = Method::dcca;
  if (cfg.grid_dims.empty()) cfg.grid_dims = {cfg.dcca.out_dim};
  if (cfg.grid_alphas.empty()) cfg.grid_alphas = {cfg.dcca.alpha1};
  cfg.validate();
  data.validate();
  RandomStream srng = split_stream(cfg);
  const auto folds = split(data, cfg.split, srng);
  const std::size_t nd = cfg.grid_dims.size();
  const std::size_t nf = folds.size();
  const std::size_t na = cfg.grid_alphas.size();
  // results[dim][fold][alpha]
  std::vector<std::vector<FoldResult>> results(nd * nf);
  std::vector<Warnings> warnings(nd * nf);
  parallel_for(nd * nf, options.jobs, [&](std::size_t t) {
    const std::size_t d = t / nf;
    const std::size_t f = t % nf;
    ExperimentConfig cell = cfg;
    cell.dcca.out_dim = cfg.grid_dims[d];
    results[t] = evaluate_fold(data, folds[f], static_cast<int>(f), Method::dcca, cell, cfg.noise, cfg.grid_alphas,
                               options.audit, &warnings[t]);
  });
  ExperimentReport report = base_report(cfg);
  std::vector<std::string> labels;
  for (std::size_t t = 0; t < nd * nf; ++t) {
    labels.push_back("dim " + std::to_string(cfg.grid_dims[t / nf]) + " fold " + std::to_string(t % nf));
  }
  report.warnings = merge_warnings(warnings, labels);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t a = 0; a < na; ++a) {
      std::vector<FoldResult> cell;
      for (std::size_t f = 0; f < nf; ++f) cell.push_back(results[d * nf + f][a]);
      GridCell g{cfg.grid_dims[d], cfg.grid_alphas[a], summarize(cell, data.num_classes())};
      // Ties: higher alpha1 first, then smaller dimension.
      const bool better = !report.best || g.summary.mean > report.best->summary.mean ||
                          (g.summary.mean == report.best->summary.mean &&
                           (g.alpha1 > report.best->alpha1 ||
                            (g.alpha1 == report.best->alpha1 && g.dim < report.best->dim)));
      if (better) report.best = g;
      report.grid.push_back(std::move(g));
    }
  }
  if (report.best) {
    report.summary = report.best->summary;
  }
  report.seconds = seconds_since(start);
  return report;
}

ExperimentReport noise_sweep(const ExperimentConfig& cfg_in, const Dataset& data, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = cfg_in;
  if (cfg.sweep.empty()) {
    for (double p : {0.0, 0.1, 0.3, 0.5}) {
      NoiseScheme s;
      s.kind = NoiseKind::replace;
      s.proportion = p;
      cfg.sweep.push_back(s);
    }
  }
  if (cfg.sweep_methods.empty()) {
    cfg.sweep_methods = {"dcca", "concat", "max", "fuzzy", "bdae", "unimodal-1", "unimodal-2"};
  }
  cfg.validate();
  data.validate();
  RandomStream srng = split_stream(cfg);
  const auto folds = split(data, cfg.split, srng);
  const std::vector<double> dcca_alphas{0.3, 0.5, 0.7};
  const std::size_t ns = cfg.sweep.size();
  const std::size_t nm = cfg.sweep_methods.size();
  const std::size_t nf = folds.size();
  std::vector<std::vector<FoldResult>> results(ns * nm * nf);
  std::vector<Warnings> warnings(ns * nm * nf);
  parallel_for(ns * nm * nf, options.jobs, [&](std::size_t t) {
    const std::size_t s = t / (nm * nf);
    const std::size_t m = (t / nf) % nm;
    const std::size_t f = t % nf;
    results[t] = evaluate_fold(data, folds[f], static_cast<int>(f), parse_method(cfg.sweep_methods[m]), cfg,
                               cfg.sweep[s], dcca_alphas, options.audit, &warnings[t]);
  });
  ExperimentReport report = base_report(cfg);
  std::vector<std::string> labels;
  for (std::size_t t = 0; t < results.size(); ++t) {
    labels.push_back(cfg.sweep[t / (nm * nf)].label() + " " + std::to_string(cfg.sweep[t / (nm * nf)].level()) +
                     " " + cfg.sweep_methods[(t / nf) % nm] + " fold " + std::to_string(t % nf));
  }
  report.warnings = merge_warnings(warnings, labels);
  for (std::size_t m = 0; m < nm; ++m) {
    const Method method = parse_method(cfg.sweep_methods[m]);
    const std::size_t variants = method == Method::dcca ? dcca_alphas.size() : 1;
    for (std::size_t v = 0; v < variants; ++v) {
      for (std::size_t s = 0; s < ns; ++s) {
        std::vector<FoldResult> cell;
        for (std::size_t f = 0; f < nf; ++f) cell.push_back(results[(s * nm + m) * nf + f][v]);
        NoisePoint point;
        point.method = method == Method::dcca ? alpha_label(dcca_alphas[v]) : to_string(method);
        point.scheme = cfg.sweep[s].label();
        point.level = cfg.sweep[s].level();
        point.summary = summarize(cell, data.num_classes());
        report.noise.push_back(std::move(point));
      }
    }
  }
  report.seconds = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------- output

namespace {

Json to_json(const Summary& s) {
  Json confusion = Json::array();
  for (Eigen::Index i = 0; i < s.confusion.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < s.confusion.cols(); ++j) row.push_back(static_cast<long long>(s.confusion(i, j)));
    confusion.push_back(row);
  }
  return Json{{"fold_accuracy", s.fold_accuracy}, {"mean", s.mean},       {"std", s.std},
              {"confusion", confusion},           {"partial", s.partial}, {"errors", s.errors}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

Json to_json(const ExperimentReport& r) {
  Json j{{"seed", r.seed}, {"method", r.method}, {"config", r.config}, {"summary", to_json(r.summary)}};
  if (!r.grid.empty()) {
    Json cells = Json::array();
    for (const auto& c : r.grid) cells.push_back(Json{{"dim", c.dim}, {"alpha1", c.alpha1}, {"summary", to_json(c.summary)}});
    j["grid"] = cells;
    if (r.best) j["best"] = Json{{"dim", r.best->dim}, {"alpha1", r.best->alpha1}, {"mean", r.best->summary.mean}};
  }
  if (!r.noise.empty()) {
    Json pts = Json::array();
    for (const auto& p : r.noise) {
      pts.push_back(Json{{"method", p.method}, {"scheme", p.scheme}, {"level", p.level}, {"summary", to_json(p.summary)}});
    }
    j["noise"] = pts;
  }
  j["warnings"] = r.warnings;
  return j;
}

void write_report(const ExperimentReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");

  std::ostringstream confusion;
  const Matrix& c = report.summary.confusion;
  confusion << "true";
  for (Eigen::Index j = 0; j < c.cols(); ++j) confusion << ",pred_" << j;
  confusion << "\n";
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    confusion << i;
    for (Eigen::Index j = 0; j < c.cols(); ++j) confusion << "," << static_cast<long long>(c(i, j));
    confusion << "\n";
  }
  write_text(dir / "confusion.csv", confusion.str());

  if (!report.grid.empty()) {
    std::ostringstream heat;
    heat << "dim,alpha1,mean,std\n";
    for (const auto& g : report.grid) {
      heat << g.dim << "," << format_double(g.alpha1) << "," << format_double(g.summary.mean) << ","
           << format_double(g.summary.std) << "\n";
    }
    write_text(dir / "heatmap.csv", heat.str());
  }
  if (!report.noise.empty()) {
    std::ostringstream noise;
    noise << "method,scheme,level,mean,std\n";
    for (const auto& p : report.noise) {
      noise << p.method << "," << p.scheme << "," << format_double(p.level) << "," << format_double(p.summary.mean)
            << "," << format_double(p.summary.std) << "\n";
    }
    write_text(dir / "noise.csv", noise.str());
  }
  write_text(dir / "timing.json", Json{{"seconds", report.seconds}}.dump(2) + "\n");
}

void export_embeddings(const Pipeline& p, const Dataset& data, const std::string& path) {
  data.validate();
  const Matrix x1 = p.scaler1.apply(data.view1.values);
  const Matrix x2 = p.scaler2.apply(data.view2.values);
  Matrix t1, t2, fused;
  if (p.method == Method::dcca) {
    std::tie(t1, t2) = embed(*p.dcca, x1, x2);
    fused = fuse(t1, t2, p.alpha1);
  } else if (p.method == Method::bdae) {
    const Matrix u1 = clip_unit(p.unit1->apply(x1), nullptr);
    const Matrix u2 = clip_unit(p.unit2->apply(x2), nullptr);
    t1 = p.bdae->encoder1.forward(u1);
    t2 = p.bdae->encoder2.forward(u2);
    fused = encode(*p.bdae, u1, u2);
  } else {
    throw ParameterError("export_embeddings: needs a dcca or bdae model");
  }
  struct Block {
    const Matrix* values;
    int modality;  // 1, 2, or 0 for fused
    int stage;     // 0 original, 1 transformed, 2 fused
  };
  const Block blocks[] = {{&data.view1.values, 1, 0}, {&data.view2.values, 2, 0}, {&t1, 1, 1}, {&t2, 2, 1},
                          {&fused, 0, 2}};
  Eigen::Index width = 0;
  for (const auto& b : blocks) width = std::max(width, b.values->cols());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (Eigen::Index j = 0; j < width; ++j) out << "f" << j << ",";
  out << "label,modality,stage\n";
  for (const auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.values->rows(); ++i) {
      for (Eigen::Index j = 0; j < width; ++j) {
        // Narrower blocks are zero-padded to the widest block.
        out << (j < b.values->cols() ? format_double((*b.values)(i, j)) : std::string("0")) << ",";
      }
      out << data.labels[static_cast<std::size_t>(i)] << "," << b.modality << "," << b.stage << "\n";
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace ccafuse
