#include "grem/rng.hpp"

#include <bit>
#include <cmath>

namespace grem {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t key) {
  std::uint64_t st = key;
  for (auto& w : s_) w = splitmix64(st);
}

Rng::result_type Rng::operator()() {
  const std::uint64_t out = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return out;
}

double Rng::exponential() { return -std::log(uniform()); }

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire's nearly divisionless method
  unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    const std::uint64_t thresh = -n % n;
    while (lo < thresh) {
      m = static_cast<unsigned __int128>((*this)()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t Rng::poisson(double mean) {
  if (mean <= 0) return 0;
  if (mean < 16) {
    const double limit = std::exp(-mean);
    double prod = uniform();
    std::uint64_t k = 0;
    while (prod > limit) {
      prod *= uniform();
      ++k;
    }
    return k;
  }
  std::poisson_distribution<std::uint64_t> d(mean);
  return d(*this);
}

double Rng::gamma(double shape) {
  std::gamma_distribution<double> d(shape, 1.0);
  return d(*this);
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t st = seed ^ 0x6a09e667f3bcc909ULL;
  std::uint64_t k = splitmix64(st);
  st = k ^ h;
  k = splitmix64(st);
  st = k ^ index;
  return splitmix64(st);
}

Rng derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  return Rng(stream_key(seed, tag, index));
}

}  // namespace grem
