#pragma once

#include <string>
#include <vector>

#include "ccafuse/dataset.hpp"
#include "ccafuse/errors.hpp"

namespace ccafuse {

/// Multichannel recording. `samples` is T x C: one column per channel.
struct SignalEpoch {
  Matrix samples;
  double sampling_rate = 0.0;
  std::vector<std::string> channel_names;

  Eigen::Index length() const { return samples.rows(); }
  Eigen::Index channels() const { return samples.cols(); }
  std::string channel_name(Eigen::Index c) const;
  void validate() const;
};

struct BandSpec {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
};

/// delta, theta, alpha, beta, gamma.
std::vector<BandSpec> default_bands();

/// Power of each band per non-overlapping Hann-windowed frame. Returns a
/// (frames) x (channels * bands) matrix, channel-major columns.
Matrix band_power(const SignalEpoch& epoch, const std::vector<BandSpec>& bands, double window_seconds);

/// Differential entropy 0.5 * ln(2 pi e power) of each band under a Gaussian
/// model. Power below 1e-12 is floored with a warning.
FeatureMatrix de_band(const SignalEpoch& epoch, const std::vector<BandSpec>& bands, double window_seconds,
                      Warnings* warnings = nullptr);

/// ln of the mean band energy; same layout and flooring as de_band.
FeatureMatrix log_band_energy(const SignalEpoch& epoch, const std::vector<BandSpec>& bands,
                              double window_seconds, Warnings* warnings = nullptr);

/// max, min, mean, std, var, squared sum per channel (std/var with N-1).
FeatureMatrix stat_features(const SignalEpoch& epoch);

enum class ScaleMode { zscore, minmax };
std::string to_string(ScaleMode mode);
ScaleMode parse_scale_mode(const std::string& text);

/// Column-wise affine map x -> (x - offset) / scale.
struct Scaler {
  ScaleMode mode = ScaleMode::zscore;
  RowVector offset;
  RowVector scale;

  Matrix apply(const Matrix& x) const;
};

Scaler fit_scaler(const Matrix& train, ScaleMode mode, Warnings* warnings = nullptr);

struct Normalized {
  Matrix train;
  std::vector<Matrix> others;
  Scaler scaler;
};

/// Fit on `train` only, then apply to `train` and every matrix in `apply_to`.
/// Zero-variance columns are left unscaled (scale 1) with a warning.
Normalized normalize(const Matrix& train, const std::vector<Matrix>& apply_to, ScaleMode mode,
                     Warnings* warnings = nullptr);

/// Clamp into [0, 1]; warns with the number of clipped entries.
Matrix clip_unit(const Matrix& x, Warnings* warnings = nullptr, const std::string& what = "input");

}  // namespace ccafuse
