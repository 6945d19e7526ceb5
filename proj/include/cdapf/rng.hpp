#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace cdapf {

// SplitMix64 (Steele, Lea, Flood 2014). Every seeded operation in the
// project draws from this generator so results are reproducible across
// implementations:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound) by rejection of the biased tail.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = max() - (max() % bound + 1) % bound;
    std::uint64_t v;
    do {
      v = (*this)();
    } while (v > limit);
    return v % bound;
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates from the back: for i = n-1 down to 1, swap(i, below(i+1)).
// This exact order is part of the reproducibility contract.
template <typename T>
void seeded_shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace cdapf
