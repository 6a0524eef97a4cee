#pragma once

#include <cstdint>
#include <iterator>
#include <limits>
#include <random>
#include <string_view>

namespace clp {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Counter-based seed derivation. A root seed is split into named, indexed
// streams; a stream depends only on (root, name, indices), never on the order
// in which other streams were consumed.
class SeedTree {
 public:
  constexpr explicit SeedTree(std::uint64_t root) noexcept : key_(detail::splitmix64(root)) {}

  template <typename... Ix>
  constexpr SeedTree child(std::string_view name, Ix... indices) const noexcept {
    std::uint64_t k = detail::splitmix64(key_ ^ detail::fnv1a(name));
    ((k = detail::splitmix64(k ^ detail::splitmix64(static_cast<std::uint64_t>(indices) + 0x632be59bd9b4e019ULL))), ...);
    SeedTree t{0};
    t.key_ = k;
    return t;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

  Rng rng() const {
    std::seed_seq seq{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
    return Rng(seq);
  }

  template <typename... Ix>
  Rng stream(std::string_view name, Ix... indices) const {
    return child(name, indices...).rng();
  }

 private:
  std::uint64_t key_;
};

// Uniform [0,1) from the top 53 bits; avoids the implementation latitude of
// std::uniform_real_distribution so generated data is identical across
// standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

inline bool bernoulli(Rng& rng, double p) {
  return uniform01(rng) < p;
}

// Fisher-Yates with uniform_index; std::shuffle's sequence is unspecified.
template <typename Range>
void shuffle(Range& r, Rng& rng) {
  using std::swap;
  const auto n = static_cast<std::uint64_t>(std::size(r));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    swap(r[i - 1], r[j]);
  }
}

}  // namespace clp
