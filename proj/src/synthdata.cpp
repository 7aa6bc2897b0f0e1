#include "ccafuse/synthdata.hpp"

#include <cmath>

#include "ccafuse/errors.hpp"

namespace ccafuse {

void GenConfig::validate() const {
  if (classes < 2) throw ParameterError("generator: need at least two classes");
  if (latent_dim < 1) throw ParameterError("generator: latent dimension must be >= 1");
  if (dim1 < 1 || dim2 < 1) throw ParameterError("generator: view dimensions must be >= 1");
  if (samples_per_class < 1) throw ParameterError("generator: samples per class must be >= 1");
  if (noise1 < 0.0 || noise2 < 0.0 || private_std < 0.0 || latent_std < 0.0) {
    throw ParameterError("generator: noise levels must be non-negative");
  }
  if (private_dim < 0) throw ParameterError("generator: private dimension must be >= 0");
  if (!(separation >= 0.0) || !(mixing_scale > 0.0)) throw ParameterError("generator: invalid scale");
}

namespace {

struct Generator {
  Matrix class_means;  // K x L
  Matrix a1, a2;       // L x d
  Matrix b1, b2;       // P x d

  Generator(const GenConfig& cfg, RandomStream& rng) {
    const auto k = cfg.classes;
    const auto l = cfg.latent_dim;
    RandomStream means_rng = rng.substream("means");
    class_means = normal_matrix(means_rng, k, l);
    for (Eigen::Index c = 0; c < k; ++c) {
      const double norm = class_means.row(c).norm();
      if (norm > 0.0) class_means.row(c) *= cfg.separation / norm;
    }
    RandomStream mix_rng = rng.substream("mixing");
    const double root_l = std::sqrt(static_cast<double>(l));
    a1 = normal_matrix(mix_rng, l, cfg.dim1) / root_l;
    a2 = normal_matrix(mix_rng, l, cfg.dim2) * (cfg.mixing_scale / root_l);
    if (cfg.private_dim > 0) {
      const double root_p = std::sqrt(static_cast<double>(cfg.private_dim));
      b1 = normal_matrix(mix_rng, cfg.private_dim, cfg.dim1) / root_p;
      b2 = normal_matrix(mix_rng, cfg.private_dim, cfg.dim2) / root_p;
    }
  }
};

void fill_views(const GenConfig& cfg, const Generator& g, const Matrix& z, RandomStream& rng, Matrix& x1,
                Matrix& x2) {
  RandomStream noise_rng = rng.substream("noise");
  RandomStream private_rng = rng.substream("private");
  x1 = z * g.a1;
  Matrix mixed = z * g.a2;
  x2 = cfg.nonlinear2 ? Matrix(mixed.array().tanh().matrix()) : mixed;
  if (cfg.private_dim > 0 && cfg.private_std > 0.0) {
    x1 += cfg.private_std * normal_matrix(private_rng, z.rows(), cfg.private_dim) * g.b1;
    x2 += cfg.private_std * normal_matrix(private_rng, z.rows(), cfg.private_dim) * g.b2;
  }
  if (cfg.noise1 > 0.0) x1 += cfg.noise1 * normal_matrix(noise_rng, x1.rows(), x1.cols());
  if (cfg.noise2 > 0.0) x2 += cfg.noise2 * normal_matrix(noise_rng, x2.rows(), x2.cols());
}

}  // namespace

Dataset generate(const GenConfig& cfg) {
  cfg.validate();
  RandomStream rng(cfg.seed, 0x5e7d);
  const Generator g(cfg, rng);
  const Eigen::Index n = static_cast<Eigen::Index>(cfg.classes) * cfg.samples_per_class;
  RandomStream latent_rng = rng.substream("latent");
  Matrix z = cfg.latent_std * normal_matrix(latent_rng, n, cfg.latent_dim);
  Dataset d;
  d.labels.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i / cfg.samples_per_class);
    z.row(i) += g.class_means.row(c);
    d.labels.push_back(c);
    d.groups.push_back(c);
  }
  fill_views(cfg, g, z, rng, d.view1.values, d.view2.values);
  d.view1.columns = numbered_columns("x1_", cfg.dim1);
  d.view2.columns = numbered_columns("x2_", cfg.dim2);
  return d;
}

GenConfig seed_v_like_config(std::uint64_t seed) {
  GenConfig cfg;
  cfg.classes = 5;
  cfg.latent_dim = 6;
  cfg.dim1 = 310;
  cfg.dim2 = 33;
  cfg.samples_per_class = 300;
  cfg.noise1 = 1.0;
  cfg.noise2 = 0.6;
  cfg.nonlinear2 = true;
  cfg.separation = 3.0;
  cfg.latent_std = 1.0;
  cfg.private_dim = 4;
  cfg.private_std = 1.0;
  cfg.seed = seed;
  return cfg;
}

Dataset seed_v_like(std::uint64_t seed) {
  const GenConfig cfg = seed_v_like_config(seed);
  constexpr int kClips = 15;
  constexpr int kClipsPerFold = 5;
  const int per_clip = cfg.samples_per_class * cfg.classes / kClips;

  RandomStream rng(cfg.seed, 0x5eed5);
  const Generator g(cfg, rng);
  RandomStream latent_rng = rng.substream("latent");
  RandomStream clip_rng = rng.substream("clip");
  const Eigen::Index n = static_cast<Eigen::Index>(kClips) * per_clip;
  Matrix z = cfg.latent_std * normal_matrix(latent_rng, n, cfg.latent_dim);
  // Each clip shifts its latent mean slightly: samples from one clip are
  // more alike than samples from different clips of the same class.
  const Matrix clip_offsets = 0.3 * normal_matrix(clip_rng, kClips, cfg.latent_dim);
  Dataset d;
  for (int clip = 0; clip < kClips; ++clip) {
    const int label = clip % cfg.classes;
    for (int i = 0; i < per_clip; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(clip) * per_clip + i;
      z.row(row) += g.class_means.row(label) + clip_offsets.row(clip);
      d.labels.push_back(label);
      d.groups.push_back(clip);
      d.folds.push_back(clip / kClipsPerFold);
    }
  }
  fill_views(cfg, g, z, rng, d.view1.values, d.view2.values);
  d.view1.columns = numbered_columns("eeg_", cfg.dim1);
  d.view2.columns = numbered_columns("eye_", cfg.dim2);
  return d;
}

}  // namespace ccafuse
