#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace pairassoc {

/// Deterministic random stream addressed by (seed, path).
///
/// The path names a substream, e.g. {setting, replicate, cluster}. The state is
/// a xoshiro256** generator keyed by a SplitMix64 hash of the seed and every path
/// element, so a stream never depends on how many draws another stream made and
/// Monte Carlo results do not depend on scheduling. Streams are cheap to create;
/// one stream must not be shared between threads.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::vector<std::uint64_t> path = {});

  /// Substream with `index` appended to this stream's path.
  RandomStream child(std::uint64_t index) const;

  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1); never returns an endpoint.
  double uniform_open() noexcept;
  /// Standard normal by inversion of uniform_open().
  double normal();
  bool bernoulli(double p) noexcept { return uniform() < p; }
  /// Unbiased integer in [0, n). Requires n > 0.
  std::size_t uniform_index(std::size_t n) noexcept;

  template <typename It>
  void shuffle(It first, It last) noexcept {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = uniform_index(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t state_[4];
};

/// One draw from a bivariate normal via the lower-triangular factor of the
/// covariance. Throws ValidationError unless both sds are positive and |corr| <= 1.
std::pair<double, double> bivariate_normal(std::pair<double, double> mean,
                                           std::pair<double, double> sd, double corr,
                                           RandomStream& stream);

/// 64-bit finalizer from SplitMix64; exposed for hashing configuration values.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace pairassoc
