#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace ccafuse {

/// Seeded pseudo-random stream.
///
/// A stream is identified by (seed, stream id); the same pair yields the same
/// draw sequence on every platform. Only the engine (mt19937_64, whose output
/// is fixed by the standard) is taken from the library: the real-valued
/// distributions are implemented here because the std:: distributions are
/// implementation-defined.
///
/// Streams are single-owner. Hand each worker its own substream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Independent child stream; deterministic in (seed, stream id, key).
  RandomStream substream(std::uint64_t key) const;
  RandomStream substream(std::string_view key) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Gamma(shape, scale=1) via Marsaglia-Tsang.
  double gamma(double shape);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  void shuffle(std::span<std::size_t> values);
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// SplitMix64 finalizer, used to derive substream identifiers.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_string(std::string_view s);

}  // namespace ccafuse
