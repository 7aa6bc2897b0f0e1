#include "ccafuse/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace ccafuse {

namespace {

constexpr double kPowerFloor = 1e-12;

std::size_t frame_length(const SignalEpoch& epoch, double window_seconds) {
  if (!(window_seconds > 0.0)) throw ParameterError("features: window length must be positive");
  const double exact = window_seconds * epoch.sampling_rate;
  const auto len = static_cast<std::size_t>(std::llround(exact));
  if (len < 2) throw ParameterError("features: window shorter than two samples");
  if (static_cast<Eigen::Index>(len) > epoch.length()) {
    throw DimensionError("features: window does not fit in the epoch");
  }
  return len;
}

void check_bands(const std::vector<BandSpec>& bands, double fs) {
  if (bands.empty()) throw ParameterError("features: no bands given");
  for (const auto& b : bands) {
    if (b.low_hz < 0.0 || !(b.low_hz < b.high_hz)) {
      throw ParameterError("features: band '" + b.name + "' must satisfy 0 <= low < high");
    }
    if (b.high_hz > fs / 2.0 + 1e-9) {
      throw ParameterError("features: band '" + b.name + "' extends above the Nyquist frequency");
    }
  }
}

FeatureMatrix floored_log_features(const SignalEpoch& epoch, const std::vector<BandSpec>& bands,
                                   double window_seconds, Warnings* warnings, double offset,
                                   double multiplier, const char* what) {
  Matrix power = band_power(epoch, bands, window_seconds);
  Eigen::Index floored = 0;
  for (Eigen::Index i = 0; i < power.size(); ++i) {
    double& p = power.data()[i];
    if (!(p >= kPowerFloor)) {
      p = kPowerFloor;
      ++floored;
    }
  }
  if (floored > 0) {
    warn(warnings, std::string(what) + ": " + std::to_string(floored) + " band powers below 1e-12 were floored");
  }
  FeatureMatrix out;
  out.values = (multiplier * (offset + power.array().log())).matrix();
  for (Eigen::Index c = 0; c < epoch.channels(); ++c) {
    for (const auto& b : bands) out.columns.push_back(epoch.channel_name(c) + "_" + b.name);
  }
  return out;
}

}  // namespace

std::string SignalEpoch::channel_name(Eigen::Index c) const {
  if (c < static_cast<Eigen::Index>(channel_names.size())) return channel_names[static_cast<std::size_t>(c)];
  return "ch" + std::to_string(c);
}

void SignalEpoch::validate() const {
  if (!(sampling_rate > 0.0)) throw ParameterError("signal: sampling rate must be positive");
  if (samples.rows() < 1 || samples.cols() < 1) throw DimensionError("signal: empty epoch");
  if (!channel_names.empty() && static_cast<Eigen::Index>(channel_names.size()) != samples.cols()) {
    throw DimensionError("signal: channel name count does not match channel count");
  }
  require_finite(samples, "signal");
}

std::vector<BandSpec> default_bands() {
  return {{"delta", 1.0, 4.0}, {"theta", 4.0, 8.0}, {"alpha", 8.0, 14.0}, {"beta", 14.0, 31.0}, {"gamma", 31.0, 50.0}};
}

Matrix band_power(const SignalEpoch& epoch, const std::vector<BandSpec>& bands, double window_seconds) {
  epoch.validate();
  check_bands(bands, epoch.sampling_rate);
  const std::size_t len = frame_length(epoch, window_seconds);
  const auto frames = static_cast<Eigen::Index>(static_cast<std::size_t>(epoch.length()) / len);
  const double fs = epoch.sampling_rate;

  std::vector<double> window(len);
  double window_energy = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    // periodic Hann
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
    window_energy += window[i] * window[i];
  }

  // One-sided spectrum bin k covers frequency k * fs / len.
  const std::size_t half = len / 2;
  std::vector<std::vector<std::size_t>> bins(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const bool to_nyquist = bands[b].high_hz >= fs / 2.0 - 1e-9;
    for (std::size_t k = 0; k <= half; ++k) {
      const double f = static_cast<double>(k) * fs / static_cast<double>(len);
      if (f >= bands[b].low_hz && (f < bands[b].high_hz || (to_nyquist && k == half))) bins[b].push_back(k);
    }
  }

  Eigen::FFT<double> fft;
  std::vector<double> frame(len);
  std::vector<std::complex<double>> spectrum;
  const auto nb = static_cast<Eigen::Index>(bands.size());
  Matrix out(frames, epoch.channels() * nb);
  const double norm = static_cast<double>(len) * window_energy;
  for (Eigen::Index w = 0; w < frames; ++w) {
    for (Eigen::Index c = 0; c < epoch.channels(); ++c) {
      const Eigen::Index start = w * static_cast<Eigen::Index>(len);
      for (std::size_t i = 0; i < len; ++i) {
        frame[i] = window[i] * epoch.samples(start + static_cast<Eigen::Index>(i), c);
      }
      fft.fwd(spectrum, frame);
      for (std::size_t b = 0; b < bands.size(); ++b) {
        double p = 0.0;
        for (std::size_t k : bins[b]) {
          const double mag2 = std::norm(spectrum[k]);
          const bool edge = k == 0 || (len % 2 == 0 && k == half);
          p += edge ? mag2 : 2.0 * mag2;
        }
        out(w, c * nb + static_cast<Eigen::Index>(b)) = p / norm;
      }
    }
  }
  return out;
}

FeatureMatrix de_band(const SignalEpoch& epoch, const std::vector<BandSpec>& bands, double window_seconds,
                      Warnings* warnings) {
  const double offset = std::log(2.0 * std::numbers::pi * std::numbers::e);
  return floored_log_features(epoch, bands, window_seconds, warnings, offset, 0.5, "de_band");
}

FeatureMatrix log_band_energy(const SignalEpoch& epoch, const std::vector<BandSpec>& bands,
                              double window_seconds, Warnings* warnings) {
  return floored_log_features(epoch, bands, window_seconds, warnings, 0.0, 1.0, "log_band_energy");
}

FeatureMatrix stat_features(const SignalEpoch& epoch) {
  epoch.validate();
  const Eigen::Index n = epoch.length();
  if (n < 2) throw DimensionError("stat_features: need at least two samples per channel");
  static const char* kNames[] = {"max", "min", "mean", "std", "var", "sumsq"};
  FeatureMatrix out;
  out.values.resize(1, epoch.channels() * 6);
  for (Eigen::Index c = 0; c < epoch.channels(); ++c) {
    const auto col = epoch.samples.col(c);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n - 1);
    const double stats[6] = {col.maxCoeff(), col.minCoeff(), mean, std::sqrt(var), var, col.squaredNorm()};
    for (int s = 0; s < 6; ++s) {
      out.values(0, c * 6 + s) = stats[s];
      out.columns.push_back(epoch.channel_name(c) + "_" + kNames[s]);
    }
  }
  return out;
}

std::string to_string(ScaleMode mode) { return mode == ScaleMode::zscore ? "zscore" : "minmax"; }

ScaleMode parse_scale_mode(const std::string& text) {
  if (text == "zscore") return ScaleMode::zscore;
  if (text == "minmax") return ScaleMode::minmax;
  throw ParameterError("unknown normalization mode '" + text + "'");
}

Matrix Scaler::apply(const Matrix& x) const {
  if (x.cols() != offset.size()) throw DimensionError("scaler: column count differs from the fitted data");
  return ((x.rowwise() - offset).array().rowwise() / scale.array()).matrix();
}

Scaler fit_scaler(const Matrix& train, ScaleMode mode, Warnings* warnings) {
  if (train.rows() < 1 || train.cols() < 1) throw DimensionError("normalize: empty training matrix");
  require_finite(train, "normalize");
  Scaler s;
  s.mode = mode;
  const auto d = train.cols();
  s.offset.resize(d);
  s.scale.resize(d);
  int degenerate = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = train.col(j);
    double spread = 0.0;
    if (mode == ScaleMode::zscore) {
      s.offset(j) = col.mean();
      if (train.rows() > 1) {
        spread = std::sqrt((col.array() - s.offset(j)).square().sum() / static_cast<double>(train.rows() - 1));
      }
    } else {
      s.offset(j) = col.minCoeff();
      spread = col.maxCoeff() - s.offset(j);
    }
    if (spread > 0.0) {
      s.scale(j) = spread;
    } else {
      s.offset(j) = 0.0;
      s.scale(j) = 1.0;
      ++degenerate;
    }
  }
  if (degenerate > 0) {
    warn(warnings, "normalize: " + std::to_string(degenerate) + " constant column(s) left unscaled");
  }
  return s;
}

Normalized normalize(const Matrix& train, const std::vector<Matrix>& apply_to, ScaleMode mode, Warnings* warnings) {
  Normalized out;
  out.scaler = fit_scaler(train, mode, warnings);
  out.train = out.scaler.apply(train);
  out.others.reserve(apply_to.size());
  for (const auto& m : apply_to) out.others.push_back(out.scaler.apply(m));
  return out;
}

Matrix clip_unit(const Matrix& x, Warnings* warnings, const std::string& what) {
  const Eigen::Index outside = ((x.array() < 0.0) || (x.array() > 1.0)).count();
  if (outside > 0) {
    warn(warnings, what + ": clipped " + std::to_string(outside) + " value(s) into [0, 1]");
  }
  return x.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace ccafuse
