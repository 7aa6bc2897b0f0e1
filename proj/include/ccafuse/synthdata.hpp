#pragma once

#include <cstdint>

#include "ccafuse/dataset.hpp"
#include "ccafuse/random.hpp"

namespace ccafuse {

struct GenConfig {
  int classes = 3;
  int latent_dim = 4;
  int dim1 = 20;
  int dim2 = 10;
  int samples_per_class = 200;
  double noise1 = 0.5;          // iid noise std, view 1
  double noise2 = 0.5;          // iid noise std, view 2
  bool nonlinear2 = true;       // view 2 = tanh(mixing) instead of affine
  double mixing_scale = 1.5;    // scale of the view-2 mixing matrix
  double separation = 4.0;      // norm of each class mean in latent space
  double latent_std = 1.0;      // within-class spread of the latent factors
  int private_dim = 0;          // view-specific structured nuisance factors
  double private_std = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Shared latent z ~ N(class mean, latent_std^2 I) drives both views:
///   X1 = z A1 + p1 B1 + e1,   X2 = tanh(z A2) + p2 B2 + e2   (or z A2 when linear)
/// Rows are ordered class by class. `groups` holds the class index.
Dataset generate(const GenConfig& config);

/// Five classes, 310 + 33 features, 15 clips (3 per class, 100 samples each)
/// arranged in three predefined folds of five clips with one clip per class.
GenConfig seed_v_like_config(std::uint64_t seed);
Dataset seed_v_like(std::uint64_t seed);

}  // namespace ccafuse
