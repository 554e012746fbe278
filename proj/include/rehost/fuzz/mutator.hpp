#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rehost::fuzz {

inline constexpr size_t kMaxInputSize = 4096;

// mt19937_64 with a portable bounded draw (std::uniform_int_distribution is
// implementation-defined, which would break cross-platform determinism).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  uint64_t next() { return gen_(); }
  // Uniform in [0, n); n must be > 0.
  uint64_t below(uint64_t n);

 private:
  std::mt19937_64 gen_;
};

inline constexpr uint32_t kInterestingValues[] = {0x0,  0x1,    0x7F,       0x80,
                                                  0xFF, 0xFFFF, 0x7FFFFFFF, 0xFFFFFFFF};

using Bytes = std::vector<uint8_t>;

// Havoc: 1 << rand(0..6) stacked operations (bit/byte flips, +-1..35
// arithmetic on 1/2/4-byte little-endian windows, interesting constants,
// block delete/insert/clone), preceded 1 time in 16 by a splice with a second
// corpus entry. The result is never empty and never exceeds max_size.
Bytes mutate(const Bytes& parent, std::span<const Bytes* const> others, Rng& rng,
             size_t max_size = kMaxInputSize);

}  // namespace rehost::fuzz
