// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ccafuse/bdae.hpp"
#include "ccafuse/cca.hpp"
#include "ccafuse/dcca.hpp"
#include "ccafuse/features.hpp"
#include "ccafuse/fusion.hpp"
#include "ccafuse/harness.hpp"
#include "ccafuse/mine.hpp"

using namespace ccafuse;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [X]");
  }
};

std::string fmt(const char* format, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

// 1: cca_loss gradient against central differences.
Outcome gradient_fidelity() {
  Outcome out;
  const auto t0 = Clock::now();
  RandomStream rng(2024, 1);
  double worst = 0.0;
  const double h = 1e-5;
  for (int rep = 0; rep < 20; ++rep) {
    const auto n = static_cast<Eigen::Index>(10 + rng.index(31));
    const auto d = static_cast<Eigen::Index>(2 + rng.index(5));
    const Matrix o1 = normal_matrix(rng, n, d);
    const Matrix o2 = 0.5 * o1 + normal_matrix(rng, n, d);
    const CcaLoss loss = cca_loss(o1, o2, 1e-8);
    for (int which = 0; which < 2; ++which) {
      const Matrix& grad = which == 0 ? loss.grad1 : loss.grad2;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
          Matrix p1 = o1, p2 = o2, m1 = o1, m2 = o2;
          (which == 0 ? p1 : p2)(i, j) += h;
          (which == 0 ? m1 : m2)(i, j) -= h;
          const double numeric = (cca_loss(p1, p2, 1e-8).corr - cca_loss(m1, m2, 1e-8).corr) / (2 * h);
          worst = std::max(worst, relative_error(grad(i, j), numeric));
        }
      }
    }
  }
  const double t = seconds_since(t0);
  out.require(worst < 1e-4, "max rel err " + fmt("%.2e", worst));
  out.require(t < 5.0, "runtime " + fmt("%.2fs", t));
  return out;
}

// 2: linear CCA recovers planted correlations; 1-D CCA is |Pearson r|.
Outcome cca_oracle() {
  Outcome out;
  const auto t0 = Clock::now();
  RandomStream rng(2024, 2);
  const std::vector<double> planted{0.9, 0.5, 0.1};
  const auto [x1, x2] = planted_cca_data(rng, planted, 6, 5, 20000);
  const CcaModel m = fit_cca(x1, x2, 3);
  double err = 0.0;
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(m.correlations(i) - planted[static_cast<std::size_t>(i)]));
  out.require(err <= 0.03, "planted max err " + fmt("%.4f", err));

  const Matrix a = normal_matrix(rng, 500, 1);
  const Matrix b = 0.4 * a + normal_matrix(rng, 500, 1);
  const double pe = std::abs(fit_cca(a, b, 1, 0.0).correlations(0) - std::abs(pearson(a.col(0), b.col(0))));
  out.require(pe < 1e-9, "1-D vs |r| " + fmt("%.1e", pe));
  const double t = seconds_since(t0);
  out.require(t < 5.0, "runtime " + fmt("%.2fs", t));
  return out;
}

// 3: MINE against the bivariate Gaussian closed form.
Outcome mine_oracle() {
  Outcome out;
  for (double rho : {0.0, 0.5, 0.9}) {
    RandomStream data_rng(2024, 3);
    const Eigen::Index n = 20000;
    const Matrix x = normal_matrix(data_rng, n, 1);
    const Matrix z = rho * x + std::sqrt(1.0 - rho * rho) * normal_matrix(data_rng, n, 1);
    RandomStream rng(2024, 30);
    const auto t0 = Clock::now();
    const MiCurve c = estimate_mi(x, z, MineConfig{}, rng);
    const double t = seconds_since(t0);
    const double truth = -0.5 * std::log(1.0 - rho * rho);
    const bool ok = rho == 0.0 ? (c.estimate >= -0.02 && c.estimate <= 0.05) : std::abs(c.estimate - truth) <= 0.1;
    out.require(ok, "rho " + fmt("%.1f", rho) + ": " + fmt("%.4f", c.estimate) + " vs " + fmt("%.4f", truth));
    out.require(t < 120.0, fmt("%.1fs", t));
  }
  return out;
}

// 4: differential entropy of white noise.
Outcome de_oracle() {
  Outcome out;
  RandomStream rng(2024, 4);
  SignalEpoch e;
  e.sampling_rate = 1024.0;
  e.samples = normal_matrix(rng, 4096, 1);
  const std::vector<BandSpec> full{{"all", 0.0, 512.0}};
  const double de = de_band(e, full, 4.0).values(0, 0);
  out.require(std::abs(de - 1.4189) <= 0.05, "DE " + fmt("%.4f", de));
  e.samples *= 2.0;
  const double shift = de_band(e, full, 4.0).values(0, 0) - de;
  out.require(std::abs(shift - std::log(2.0)) <= 0.02, "x2 shift " + fmt("%.4f", shift));
  return out;
}

// 5: Choquet identities and invariants.
Outcome choquet_identities() {
  Outcome out;
  RandomStream rng(2024, 5);
  int violations = 0;
  double worst_additive = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + static_cast<int>(rng.index(5));
    std::vector<double> f(static_cast<std::size_t>(n));
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      f[static_cast<std::size_t>(i)] = rng.uniform();
      w[static_cast<std::size_t>(i)] = rng.uniform() + 0.01;
      total += w[static_cast<std::size_t>(i)];
    }
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      w[static_cast<std::size_t>(i)] /= total;
      mean += w[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
    }
    worst_additive = std::max(worst_additive, std::abs(choquet(f, FuzzyMeasure::additive(w)) - mean));
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    if (choquet(f, FuzzyMeasure::possibility(n)) != *hi) ++violations;
    if (choquet(f, FuzzyMeasure::necessity(n)) != *lo) ++violations;

    // Random monotone measure: cumulative maxima plus increments, normalized.
    const std::uint32_t full = (1u << n) - 1u;
    std::vector<double> v(full + 1, 0.0);
    for (std::uint32_t s = 1; s <= full; ++s) {
      double base = 0.0;
      for (int i = 0; i < n; ++i)
        if (s & (1u << i)) base = std::max(base, v[s & ~(1u << i)]);
      v[s] = base + rng.uniform();
    }
    FuzzyMeasure mu(n);
    for (std::uint32_t s = 0; s <= full; ++s) mu.set(s, v[s] / v[full]);
    const double c = choquet(f, mu);
    if (c < *lo - 1e-12 || c > *hi + 1e-12) ++violations;
    std::vector<double> raised = f;
    raised[rng.index(static_cast<std::size_t>(n))] += rng.uniform();
    if (choquet(raised, mu) < c - 1e-12) ++violations;
  }
  out.require(worst_additive < 1e-9, "additive err " + fmt("%.1e", worst_additive));
  out.require(violations == 0, std::to_string(violations) + " violations in 1000 cases");
  return out;
}

// 6: RBM normalization, CD-1 progress, fine-tuning gain.
Outcome rbm_bdae() {
  Outcome out;
  RandomStream rng(2024, 6);
  double worst = 0.0;
  for (Eigen::Index m = 1; m <= 4; ++m) {
    for (Eigen::Index n = 1; n <= 4; ++n) {
      Rbm r;
      r.weights = normal_matrix(rng, m, n);
      r.visible_bias = normal_matrix(rng, m, 1).col(0);
      r.hidden_bias = normal_matrix(rng, n, 1).col(0);
      const double z = partition_function(r);
      double total = 0.0;
      for (std::uint32_t vm = 0; vm < (1u << m); ++vm) {
        for (std::uint32_t hm = 0; hm < (1u << n); ++hm) {
          Vector v(m), h(n);
          for (Eigen::Index i = 0; i < m; ++i) v(i) = (vm >> i) & 1u;
          for (Eigen::Index j = 0; j < n; ++j) h(j) = (hm >> j) & 1u;
          total += joint_probability(r, v, h, z);
        }
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  out.require(worst < 1e-9, "sum p(v,h) err " + fmt("%.1e", worst));

  Matrix bits(20, 8);
  for (Eigen::Index i = 0; i < 20; ++i) {
    if (i % 2 == 0) bits.row(i) << 0, 0, 0, 0, 1, 1, 1, 1;
    else bits.row(i) << 1, 1, 1, 1, 0, 0, 0, 0;
  }
  std::vector<double> curve;
  train_rbm(bits, RbmTrainConfig{4, 200, 0.1, 4}, rng, &curve);
  const double drop = 1.0 - curve.back() / curve.front();
  out.require(drop >= 0.30, "cd1 drop " + fmt("%.1f%%", 100 * drop));

  GenConfig g;
  g.samples_per_class = 100;
  const Dataset d = generate(g);
  const Matrix u1 = fit_scaler(d.view1.values, ScaleMode::minmax).apply(d.view1.values);
  const Matrix u2 = fit_scaler(d.view2.values, ScaleMode::minmax).apply(d.view2.values);
  BdaeConfig bc;
  bc.hidden1 = 32;
  bc.hidden2 = 16;
  bc.shared = 8;
  bc.pretrain_epochs = 20;
  bc.finetune_epochs = 40;
  bc.finetune.learning_rate = 1e-2;
  bc.finetune.batch_size = 32;
  const BdaeModel model = train_bdae(u1, u2, bc, rng);
  const double gain = 1.0 - model.finetune_curve.back() / model.pretrain_error;
  out.require(gain >= 0.10, "fine-tune gain " + fmt("%.1f%%", 100 * gain));
  return out;
}

ExperimentConfig seed_config(int seed) {
  ExperimentConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.data.generator.seed = static_cast<std::uint64_t>(seed);
  return cfg;
}

// 7: DCCA fusion ordering on the SEED-V-like task.
Outcome fusion_ordering() {
  Outcome out;
  const auto t0 = Clock::now();
  std::map<std::string, double> mean;
  const std::vector<std::string> methods{"unimodal-1", "unimodal-2", "concat", "dcca"};
  for (int seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = seed_config(seed);
    const Dataset d = load_dataset(cfg);
    for (const auto& m : methods) {
      cfg.method = parse_method(m);
      const ExperimentReport r = run_experiment(cfg, d);
      if (r.summary.partial) out.require(false, m + " seed " + std::to_string(seed) + " partial");
      mean[m] += r.summary.mean / 5.0;
    }
  }
  const double t = seconds_since(t0);
  const double best_uni = std::max(mean["unimodal-1"], mean["unimodal-2"]);
  out.require(mean["dcca"] >= mean["concat"],
              "dcca " + fmt("%.4f", mean["dcca"]) + " >= concat " + fmt("%.4f", mean["concat"]));
  out.require(mean["dcca"] >= best_uni + 0.02, "best unimodal " + fmt("%.4f", best_uni) + " + 0.02");
  out.require(t < 600.0, "runtime " + fmt("%.0fs", t));
  return out;
}

// 8: noise robustness trend under view-1 replacement noise.
Outcome noise_trend() {
  Outcome out;
  std::map<std::string, std::map<double, double>> acc;
  for (int seed = 1; seed <= 5; ++seed) {
    const ExperimentConfig cfg = seed_config(seed);
    const Dataset d = load_dataset(cfg);
    const ExperimentReport r = noise_sweep(cfg, d);
    for (const auto& p : r.noise) {
      if (p.summary.partial) out.require(false, p.method + " partial");
      acc[p.method][p.level] += p.summary.mean / 5.0;
    }
  }
  int rises = 0;
  std::string worst;
  for (const auto& [method, curve] : acc) {
    double prev = -1.0;
    for (const auto& [level, a] : curve) {
      if (prev >= 0.0 && a > prev + 0.02) {
        ++rises;
        worst += " " + method + "@" + fmt("%.1f", level);
      }
      prev = a;
    }
  }
  out.require(rises == 0, "non-increasing within 2pt" + (worst.empty() ? "" : ":" + worst));
  auto drop = [&](const std::string& m) { return acc[m].begin()->second - acc[m].rbegin()->second; };
  out.require(acc.count("DCCA-0.3") && acc.count("DCCA-0.7") && drop("DCCA-0.3") < drop("DCCA-0.7"),
              "drop DCCA-0.3 " + fmt("%.4f", drop("DCCA-0.3")) + " < DCCA-0.7 " + fmt("%.4f", drop("DCCA-0.7")));
  return out;
}

// 9: MINE sees more dependence between DCCA-transformed views than raw ones.
Outcome mi_ordering() {
  Outcome out;
  int positive = 0;
  std::string diffs;
  for (int seed = 1; seed <= 5; ++seed) {
    GenConfig g = seed_v_like_config(static_cast<std::uint64_t>(seed));
    g.dim1 = 60;
    g.dim2 = 20;
    g.samples_per_class = 800;
    const Dataset d = generate(g);
    const Matrix x1 = normalize(d.view1.values, {}, ScaleMode::zscore).train;
    const Matrix x2 = normalize(d.view2.values, {}, ScaleMode::zscore).train;
    DccaConfig dc;
    dc.out_dim = 6;
    RandomStream rng(static_cast<std::uint64_t>(seed), 3);
    const DccaModel model = train_dcca(x1, x2, dc, rng);
    const auto [o1, o2] = embed(model, x1, x2);
    MineConfig mc;
    mc.epochs = 30;
    RandomStream mine_rng(static_cast<std::uint64_t>(seed), 4);
    const MiComparison c = compare_mi(x1, x2, o1, o2, mc, mine_rng);
    if (c.difference > 0.0) ++positive;
    diffs += fmt(" %.3f", c.difference);
  }
  out.require(positive >= 4, std::to_string(positive) + "/5 positive (diff" + diffs + ")");
  return out;
}

// 10: every CLI command, run twice, writes identical files.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome cli_determinism() {
  Outcome out;
  const char* cli = std::getenv("CCAFUSE_CLI_PATH");
#ifdef CCAFUSE_CLI_DEFAULT
  if (cli == nullptr) cli = CCAFUSE_CLI_DEFAULT;
#endif
  if (cli == nullptr || !fs::exists(cli)) {
    out.require(false, "CLI binary not found (set CCAFUSE_CLI_PATH)");
    return out;
  }
  const fs::path root = fs::temp_directory_path() / "ccafuse_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);

  ExperimentConfig cfg;
  cfg.data.kind = "generate";
  cfg.data.generator.samples_per_class = 60;
  cfg.split = SplitScheme{SplitKind::kfold, 3};
  cfg.dcca.hidden1 = {24};
  cfg.dcca.hidden2 = {24};
  cfg.dcca.out_dim = 3;
  cfg.dcca.epochs = 6;
  cfg.bdae.pretrain_epochs = 3;
  cfg.bdae.finetune_epochs = 3;
  cfg.bdae.hidden1 = 16;
  cfg.bdae.hidden2 = 16;
  cfg.bdae.shared = 4;
  const fs::path config = root / "config.json";
  std::ofstream(config) << to_json(cfg).dump(2) << "\n";

  const fs::path shared = root / "shared";
  const fs::path log = root / "cli.log";
  auto run = [&](const fs::path& out_dir, const std::string& args) {
    const std::string cmd = std::string("'") + cli + "' --config " + quote(config) + " --seed 7 --out " +
                            quote(out_dir) + " " + args + " >> " + quote(log) + " 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  // Inputs the later commands read: a dataset and a saved model.
  if (!run(shared, "gen-data") || !run(shared, "train --method dcca")) {
    out.require(false, "setup commands failed, see " + log.string());
    return out;
  }
  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen-data", "gen-data"},
      {"extract-features", "extract-features --synthetic-seconds 40 --channels 4"},
      {"train", "train --method bdae"},
      {"evaluate", "evaluate --method fuzzy"},
      {"evaluate-model", "evaluate --model " + quote(shared / "model.ccafuse")},
      {"grid-search", "grid-search --dims 2,3 --alphas 0.3,0.7"},
      {"noise-sweep", "noise-sweep --levels 0,0.3 --methods concat,dcca"},
      {"mine", "mine --x " + quote(shared / "view1.csv") + " --z " + quote(shared / "view2.csv") + " --model " +
                   quote(shared / "model.ccafuse") + " --epochs 5 --batch 60"},
      {"export-embeddings", "export-embeddings --model " + quote(shared / "model.ccafuse")},
  };
  for (const auto& [name, args] : commands) {
    const fs::path a = root / (name + "_a");
    const fs::path b = root / (name + "_b");
    if (!run(a, args) || !run(b, args)) {
      out.require(false, name + " exited with an error");
      continue;
    }
    std::set<std::string> files;
    for (const auto& dir : {a, b})
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.insert(fs::relative(e.path(), dir).string());
    int differing = 0;
    int compared = 0;
    for (const auto& f : files) {
      if (fs::path(f).filename() == "timing.json") continue;  // wall-clock time only
      ++compared;
      if (!fs::exists(a / f) || !fs::exists(b / f) || slurp(a / f) != slurp(b / f)) ++differing;
    }
    out.require(differing == 0 && compared > 0, name + " " + std::to_string(compared - differing) + "/" +
                                                    std::to_string(compared) + " identical");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},   {"CCA oracle", cca_oracle},
      {"MINE oracle", mine_oracle},               {"DE oracle", de_oracle},
      {"Choquet identities", choquet_identities}, {"RBM/BDAE", rbm_bdae},
      {"fusion ordering", fusion_ordering},       {"noise robustness", noise_trend},
      {"MI ordering", mi_ordering},               {"determinism", cli_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && selected.count(id) == 0) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures;
}
