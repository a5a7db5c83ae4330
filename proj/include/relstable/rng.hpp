#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace relstable {

/// SplitMix64 finalizer; used to derive independent engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// A reproducible random stream identified by (seed, stream_id).
///
/// Distinct stream ids hash to unrelated 64-bit engine seeds, so workers can
/// own disjoint streams without coordination. substream(k) derives a child
/// stream deterministically; estimators use it to tie each batch of paths to
/// its batch index rather than to the worker that happens to run it.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed),
        stream_(stream_id),
        engine_(mix64(mix64(seed) ^ mix64(stream_id + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  RngStream substream(std::uint64_t k) const {
    return RngStream(seed_, mix64(stream_ ^ mix64(k + 0x2545f4914f6cdd1dULL)));
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  double normal() { return normal_(engine_); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace relstable
