// Command-line frontend for the fusion experiments.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ccafuse/harness.hpp"
#include "ccafuse/mine.hpp"
#include "ccafuse/model_io.hpp"

using namespace ccafuse;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "out";
  int jobs = 1;
};

ExperimentConfig base_config(const Globals& g) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  // One seed drives both the experiment streams and any synthetic data, so
  // `gen-data --seed s` and `evaluate --seed s` see the same samples.
  if (g.seed_set) {
    cfg.seed = g.seed;
    cfg.data.generator.seed = g.seed;
  }
  cfg.jobs = g.jobs;
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

Matrix read_matrix(const std::string& path) { return read_feature_csv(path).features.values; }

void print_warnings(const std::vector<std::string>& warnings) {
  constexpr std::size_t kShown = 10;
  for (std::size_t i = 0; i < warnings.size() && i < kShown; ++i) std::cerr << "warning: " << warnings[i] << "\n";
  if (warnings.size() > kShown) std::cerr << "warning: (" << warnings.size() - kShown << " more in report.json)\n";
}

void print_summary(const ExperimentReport& r) {
  std::cout << r.method << ": mean accuracy " << r.summary.mean << " (std " << r.summary.std << ") over "
            << r.summary.fold_accuracy.size() << " fold(s)";
  if (r.summary.partial) std::cout << " [partial: " << r.summary.errors.size() << " fold(s) failed]";
  std::cout << "\n";
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ParameterError("not a number: '" + item + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------- commands

void cmd_gen_data(const Globals& g) {
  ExperimentConfig cfg = base_config(g);
  if (cfg.data.kind == "csv") throw ParameterError("gen-data: config data source must be a generator");
  const Dataset d = load_dataset(cfg);
  fs::create_directories(g.out);
  const fs::path dir(g.out);
  write_feature_csv((dir / "view1.csv").string(), d.view1, &d.labels);
  write_feature_csv((dir / "view2.csv").string(), d.view2, &d.labels);
  std::ostringstream splits;
  splits << "group,fold\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    splits << (d.groups.empty() ? 0 : d.groups[i]) << "," << (d.folds.empty() ? 0 : d.folds[i]) << "\n";
  }
  write_file(dir / "splits.csv", splits.str());
  std::cout << "wrote " << d.size() << " samples (" << d.view1.cols() << " + " << d.view2.cols() << " features) to "
            << dir.string() << "\n";
}

struct ExtractOptions {
  std::string input;
  double fs = 200.0;
  double window = 4.0;
  std::string kind = "de";
  double synthetic_seconds = 0.0;
  int channels = 1;
};

void cmd_extract(const Globals& g, const ExtractOptions& o) {
  SignalEpoch epoch;
  epoch.sampling_rate = o.fs;
  if (!o.input.empty()) {
    const FeatureMatrix m = read_feature_csv(o.input).features;
    epoch.samples = m.values;
    for (Eigen::Index c = 0; c < m.cols(); ++c) epoch.channel_names.push_back(m.column_name(c));
  } else if (o.synthetic_seconds > 0.0) {
    RandomStream rng(g.seed_set ? g.seed : 1, 0x516);
    const auto n = static_cast<Eigen::Index>(std::llround(o.synthetic_seconds * o.fs));
    epoch.samples = normal_matrix(rng, n, o.channels);
  } else {
    throw ParameterError("extract-features: give --input or --synthetic-seconds");
  }
  Warnings warnings;
  FeatureMatrix features;
  if (o.kind == "de") {
    features = de_band(epoch, default_bands(), o.window, &warnings);
  } else if (o.kind == "log-energy") {
    features = log_band_energy(epoch, default_bands(), o.window, &warnings);
  } else if (o.kind == "stats") {
    features = stat_features(epoch);
  } else {
    throw ParameterError("extract-features: unknown kind '" + o.kind + "'");
  }
  print_warnings(warnings);
  fs::create_directories(g.out);
  const fs::path path = fs::path(g.out) / "features.csv";
  write_feature_csv(path.string(), features);
  std::cout << "wrote " << features.rows() << " x " << features.cols() << " features to " << path.string() << "\n";
}

void cmd_train(const Globals& g, const std::string& method) {
  ExperimentConfig cfg = base_config(g);
  if (!method.empty()) cfg.method = parse_method(method);
  const Dataset d = load_dataset(cfg);
  std::vector<std::size_t> all(d.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  RandomStream rng(cfg.seed, 0x7a1);
  Warnings warnings;
  const Pipeline p = fit_pipeline(d, all, cfg, rng, &warnings);
  print_warnings(warnings);
  fs::create_directories(g.out);
  const fs::path dir(g.out);
  save_pipeline(p, (dir / "model.ccafuse").string());
  Json info{{"method", to_string(p.method)}, {"seed", cfg.seed}, {"config", to_json(cfg)},
            {"train_accuracy", accuracy(d.labels, predict(p, d.view1.values, d.view2.values))}};
  if (p.dcca) info["dcca_training_curve"] = p.dcca->training_curve;
  if (p.bdae) info["bdae_finetune_curve"] = p.bdae->finetune_curve;
  info["warnings"] = warnings;
  write_file(dir / "train.json", info.dump(2) + "\n");
  std::cout << "trained " << to_string(p.method) << " on " << d.size() << " samples; model at "
            << (dir / "model.ccafuse").string() << "\n";
}

void cmd_evaluate(const Globals& g, const std::string& model_path, const std::string& method) {
  ExperimentConfig cfg = base_config(g);
  if (!method.empty()) cfg.method = parse_method(method);
  const Dataset d = load_dataset(cfg);
  ExperimentReport report;
  if (!model_path.empty()) {
    const Pipeline p = load_pipeline(model_path);
    FoldResult r;
    r.ok = true;
    r.truth = d.labels;
    r.predicted = predict(p, d.view1.values, d.view2.values);
    r.accuracy = accuracy(r.truth, r.predicted);
    r.test_size = d.size();
    report.config = to_json(cfg);
    report.seed = cfg.seed;
    report.method = to_string(p.method);
    report.summary = summarize({r}, d.num_classes());
  } else {
    report = run_experiment(cfg, d, RunOptions{g.jobs, nullptr});
  }
  print_warnings(report.warnings);
  write_report(report, g.out);
  print_summary(report);
}

void cmd_grid(const Globals& g, const std::string& dims, const std::string& alphas) {
  ExperimentConfig cfg = base_config(g);
  if (!dims.empty()) {
    cfg.grid_dims.clear();
    for (double v : parse_list(dims)) cfg.grid_dims.push_back(static_cast<Eigen::Index>(v));
  }
  if (!alphas.empty()) cfg.grid_alphas = parse_list(alphas);
  const Dataset d = load_dataset(cfg);
  const ExperimentReport report = grid_search(cfg, d, RunOptions{g.jobs, nullptr});
  print_warnings(report.warnings);
  write_report(report, g.out);
  if (report.best) {
    std::cout << "best cell: dim " << report.best->dim << ", alpha1 " << report.best->alpha1 << ", mean accuracy "
              << report.best->summary.mean << "\n";
  }
}

struct SweepOptions {
  std::string kind;
  std::string levels;
  std::string dist;
  std::string target;
  std::string methods;
  std::string replace_mode;
  bool train_only = false;
};

void cmd_sweep(const Globals& g, const SweepOptions& o) {
  ExperimentConfig cfg = base_config(g);
  if (!o.kind.empty() || !o.levels.empty()) {
    Json scheme{{"kind", o.kind.empty() ? "replace" : o.kind}};
    if (!o.dist.empty()) scheme["distribution"] = o.dist;
    if (!o.target.empty()) scheme["target"] = o.target;
    if (!o.replace_mode.empty()) scheme["replace_mode"] = o.replace_mode;
    scheme["train_only"] = o.train_only;
    const std::vector<double> levels = o.levels.empty() ? std::vector<double>{0.0, 0.1, 0.3, 0.5} : parse_list(o.levels);
    cfg.sweep.clear();
    for (double level : levels) {
      Json s = scheme;
      s[s["kind"] == "gaussian" ? "variance" : "proportion"] = level;
      Json wrapper{{"sweep", Json::array({s})}};
      cfg.sweep.push_back(config_from_json(wrapper).sweep[0]);
    }
  } else if (o.train_only) {
    for (auto& s : cfg.sweep) s.train_only = true;
  }
  if (!o.methods.empty()) {
    cfg.sweep_methods.clear();
    std::stringstream ss(o.methods);
    std::string m;
    while (std::getline(ss, m, ',')) cfg.sweep_methods.push_back(m);
  }
  const Dataset d = load_dataset(cfg);
  const ExperimentReport report = noise_sweep(cfg, d, RunOptions{g.jobs, nullptr});
  print_warnings(report.warnings);
  write_report(report, g.out);
  for (const auto& p : report.noise) {
    std::cout << p.method << " " << p.scheme << " " << p.level << ": " << p.summary.mean << "\n";
  }
}

struct MineOptions {
  std::string x_path;
  std::string z_path;
  std::string model_path;
  int epochs = 0;
  int batch = 0;
};

void cmd_mine(const Globals& g, const MineOptions& o) {
  ExperimentConfig cfg = base_config(g);
  Matrix x, z;
  Matrix tx, tz;
  bool compare = false;
  if (!o.x_path.empty() || !o.z_path.empty()) {
    if (o.x_path.empty() || o.z_path.empty()) throw ParameterError("mine: give both --x and --z");
    x = read_matrix(o.x_path);
    z = read_matrix(o.z_path);
  } else {
    const Dataset d = load_dataset(cfg);
    x = d.view1.values;
    z = d.view2.values;
  }
  if (!o.model_path.empty()) {
    const Pipeline p = load_pipeline(o.model_path);
    if (!p.dcca) throw ParameterError("mine: --model must be a dcca model");
    std::tie(tx, tz) = embed(*p.dcca, p.scaler1.apply(x), p.scaler2.apply(z));
    compare = true;
  }
  MineConfig mc;
  if (o.epochs > 0) mc.epochs = o.epochs;
  if (o.batch > 0) mc.batch_size = mc.optimizer.batch_size = o.batch;
  RandomStream rng(cfg.seed, 0x313e);
  fs::create_directories(g.out);
  const fs::path dir(g.out);
  std::ostringstream csv;
  Json info{{"seed", cfg.seed}, {"epochs", mc.epochs}, {"batch_size", mc.batch_size}};
  if (compare) {
    const MiComparison c = compare_mi(x, z, tx, tz, mc, rng);
    csv << "epoch,original,original_smoothed,transformed,transformed_smoothed\n";
    for (std::size_t e = 0; e < c.original.values.size(); ++e) {
      csv << e + 1 << "," << format_double(c.original.values[e]) << "," << format_double(c.original.smoothed[e]) << ","
          << format_double(c.transformed.values[e]) << "," << format_double(c.transformed.smoothed[e]) << "\n";
    }
    info["original"] = c.original.estimate;
    info["transformed"] = c.transformed.estimate;
    info["difference"] = c.difference;
    std::cout << "MI original " << c.original.estimate << " nats, transformed " << c.transformed.estimate
              << " nats, difference " << c.difference << "\n";
  } else {
    const MiCurve c = estimate_mi(x, z, mc, rng);
    csv << "epoch,value,smoothed\n";
    for (std::size_t e = 0; e < c.values.size(); ++e) {
      csv << e + 1 << "," << format_double(c.values[e]) << "," << format_double(c.smoothed[e]) << "\n";
    }
    info["estimate"] = c.estimate;
    std::cout << "MI estimate " << c.estimate << " nats\n";
  }
  write_file(dir / "mi_curve.csv", csv.str());
  write_file(dir / "mi.json", info.dump(2) + "\n");
}

void cmd_export(const Globals& g, const std::string& model_path) {
  const ExperimentConfig cfg = base_config(g);
  const Dataset d = load_dataset(cfg);
  const Pipeline p = load_pipeline(model_path);
  fs::create_directories(g.out);
  const fs::path path = fs::path(g.out) / "embeddings.csv";
  export_embeddings(p, d, path.string());
  std::cout << "wrote " << 5 * d.size() << " rows to " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal fusion with deep canonical correlation analysis and baselines"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "experiment configuration (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", g.seed, "experiment and synthetic-data seed (overrides the config)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "write the configured synthetic dataset as CSV");

  ExtractOptions ext;
  auto* extract = app.add_subcommand("extract-features", "band features from a multichannel signal CSV");
  extract->add_option("--input", ext.input, "signal CSV: header row, one column per channel");
  extract->add_option("--fs", ext.fs, "sampling rate in Hz")->capture_default_str();
  extract->add_option("--window", ext.window, "window length in seconds")->capture_default_str();
  extract->add_option("--kind", ext.kind, "de | log-energy | stats")->capture_default_str();
  extract->add_option("--synthetic-seconds", ext.synthetic_seconds, "use white noise of this duration instead");
  extract->add_option("--channels", ext.channels, "channels of synthetic noise")->capture_default_str();

  std::string method;
  auto* train = app.add_subcommand("train", "fit a pipeline on the whole dataset and save it");
  train->add_option("--method", method, "dcca | concat | max | fuzzy | bdae | unimodal-1 | unimodal-2");

  std::string model_path;
  auto* evaluate = app.add_subcommand("evaluate", "cross-validate the configured method, or score a saved model");
  evaluate->add_option("--model", model_path, "saved model; omit to cross-validate")->check(CLI::ExistingFile);
  evaluate->add_option("--method", method, "override the configured method");

  std::string dims, alphas;
  auto* grid = app.add_subcommand("grid-search", "dcca accuracy over output dimension x view-1 weight");
  grid->add_option("--dims", dims, "comma-separated output dimensions");
  grid->add_option("--alphas", alphas, "comma-separated view-1 weights");

  SweepOptions sw;
  auto* sweep = app.add_subcommand("noise-sweep", "accuracy under increasing feature noise");
  sweep->add_option("--kind", sw.kind, "replace | gaussian");
  sweep->add_option("--levels", sw.levels, "comma-separated proportions or variances");
  sweep->add_option("--dist", sw.dist, "normal | gamma | uniform (replace)");
  sweep->add_option("--target", sw.target, "view1 | view2 | both");
  sweep->add_option("--methods", sw.methods, "comma-separated methods");
  sweep->add_option("--replace-mode", sw.replace_mode, "entries | dims");
  sweep->add_flag("--noise-train-only", sw.train_only, "leave test features clean");

  MineOptions mo;
  auto* mine = app.add_subcommand("mine", "neural mutual information estimate between two views");
  mine->add_option("--x", mo.x_path, "first view CSV")->check(CLI::ExistingFile);
  mine->add_option("--z", mo.z_path, "second view CSV")->check(CLI::ExistingFile);
  mine->add_option("--model", mo.model_path, "dcca model: also estimate on its transformed views")
      ->check(CLI::ExistingFile);
  mine->add_option("--epochs", mo.epochs, "training epochs");
  mine->add_option("--batch", mo.batch, "minibatch size");

  auto* exp = app.add_subcommand("export-embeddings", "original, transformed and fused features as CSV");
  exp->add_option("--model", model_path, "saved dcca or bdae model")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (gen->parsed()) cmd_gen_data(g);
    if (extract->parsed()) cmd_extract(g, ext);
    if (train->parsed()) cmd_train(g, method);
    if (evaluate->parsed()) cmd_evaluate(g, model_path, method);
    if (grid->parsed()) cmd_grid(g, dims, alphas);
    if (sweep->parsed()) cmd_sweep(g, sw);
    if (mine->parsed()) cmd_mine(g, mo);
    if (exp->parsed()) cmd_export(g, model_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
