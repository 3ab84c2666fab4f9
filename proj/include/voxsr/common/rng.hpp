// Portable deterministic random number generation.
//
// xoshiro256++ seeded through splitmix64. Gaussian variates use Box-Muller
// instead of std::normal_distribution so that streams are bit-identical
// across standard library implementations. Substreams are derived from
// (seed, stream) so independent consumers never share state.

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace voxsr {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  // Substream constructors: deterministic functions of (seed, stream).
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t mix = seed;
    detail::splitmix64(mix);
    reseed(mix ^ (stream * 0x9e3779b97f4a7c15ull) ^ 0x6a09e667f3bcc909ull);
  }
  Rng(std::uint64_t seed, std::string_view stream) : Rng(seed, detail::fnv1a(stream)) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range via rejection-free Lemire-style reduction.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::vector<double> normal_vec(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = normal();
    return out;
  }

  // First k entries of a random permutation of [0, n).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i),
                                                          static_cast<std::int64_t>(n - 1)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = detail::splitmix64(sm);
    have_spare_ = false;
  }

  std::uint64_t s_[4] = {};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace voxsr
