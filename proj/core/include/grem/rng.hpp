#pragma once
#include <cstdint>
#include <random>
#include <string_view>

namespace grem {

// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  // open interval (0,1)
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential();
  double normal() { return normal_(*this); }
  std::uint64_t below(std::uint64_t n);
  std::uint64_t poisson(double mean);
  double gamma(double shape);

 private:
  std::uint64_t s_[4];
  std::normal_distribution<double> normal_;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t stream_key(std::uint64_t seed, std::string_view tag, std::uint64_t index);

// (seed, tag, index) -> independent reproducible stream
Rng derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index);

inline constexpr std::string_view kGeneratorName = "xoshiro256**/splitmix64";

}  // namespace grem
