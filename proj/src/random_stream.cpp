#include "pairassoc/random_stream.hpp"

#include <cmath>

#include "pairassoc/errors.hpp"
#include "pairassoc/normal.hpp"

namespace pairassoc {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

std::uint64_t derive_key(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
  std::uint64_t h = mix64(seed ^ 0x5851F42D4C957F2DULL);
  std::uint64_t level = 1;
  for (std::uint64_t element : path) {
    h = mix64(h ^ mix64(element + kGolden * level));
    ++level;
  }
  return h;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::vector<std::uint64_t> path)
    : seed_(seed), path_(std::move(path)) {
  std::uint64_t key = derive_key(seed_, path_);
  for (auto& word : state_) {
    key += kGolden;
    word = mix64(key);
  }
}

RandomStream RandomStream::child(std::uint64_t index) const {
  std::vector<std::uint64_t> p = path_;
  p.push_back(index);
  return RandomStream(seed_, std::move(p));
}

std::uint64_t RandomStream::next_u64() noexcept {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RandomStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() { return normal_quantile(uniform_open()); }

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::size_t RandomStream::uniform_index(std::size_t n) noexcept {
  // Lemire's multiply-shift with rejection of the biased low region.
  const std::uint64_t range = n;
  u128 m = static_cast<u128>(next_u64()) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      m = static_cast<u128>(next_u64()) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

std::pair<double, double> bivariate_normal(std::pair<double, double> mean,
                                           std::pair<double, double> sd, double corr,
                                           RandomStream& stream) {
  if (!(sd.first > 0.0) || !(sd.second > 0.0) || !std::isfinite(sd.first) ||
      !std::isfinite(sd.second)) {
    throw ValidationError("bivariate_normal: standard deviations must be positive");
  }
  if (!(std::fabs(corr) <= 1.0)) {
    throw ValidationError("bivariate_normal: correlation must lie in [-1, 1]");
  }
  const double z1 = stream.normal();
  const double z2 = stream.normal();
  const double first = mean.first + sd.first * z1;
  const double second =
      mean.second + sd.second * (corr * z1 + std::sqrt(1.0 - corr * corr) * z2);
  return {first, second};
}

}  // namespace pairassoc
