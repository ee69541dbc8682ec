#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace haluj::rng {

// mt19937_64 is bit-exact across platforms; the distribution helpers below
// are hand-rolled because std::uniform_int_distribution is not.

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffset) {
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

/// Derive an independent substream seed from a base seed and a stage tag.
/// Distinct tags give unrelated streams, so adding a consumer never perturbs
/// the draws of existing ones.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stage) {
  return fnv1a64(stage, fnv1a64_u64(base));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stage, std::string_view key) {
  return fnv1a64(key, fnv1a64("/", derive_seed(base, stage)));
}

/// Uniform draw in [0, bound) via rejection; unbiased and engine-portable.
inline std::uint64_t bounded_rand(std::mt19937_64& gen, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t r = gen();
    if (r >= threshold) return r % bound;
  }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double canonical(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// In-place Fisher-Yates shuffle using bounded_rand.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded_rand(gen, i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

/// A permutation p of 0..n-1 such that applying it (out[i] = in[p[i]]) equals
/// shuffling `in` with the same generator state.
inline std::vector<std::size_t> shuffle_permutation(std::size_t n, std::mt19937_64& gen) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  shuffle(p, gen);
  return p;
}

/// Draw k distinct indices from 0..n-1, order randomized.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& gen) {
  std::vector<std::size_t> p = shuffle_permutation(n, gen);
  if (k < p.size()) p.resize(k);
  return p;
}

}  // namespace haluj::rng
