#include "rehost/fuzz/mutator.hpp"

#include <algorithm>

namespace rehost::fuzz {

uint64_t Rng::below(uint64_t n) {
  // Rejection sampling over the largest multiple of n.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = gen_();
  } while (v >= limit);
  return v % n;
}

namespace {

uint32_t load_le(const Bytes& b, size_t pos, size_t width) {
  uint32_t v = 0;
  for (size_t i = 0; i < width; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
  return v;
}

void store_le(Bytes& b, size_t pos, size_t width, uint32_t v) {
  for (size_t i = 0; i < width; ++i) b[pos + i] = static_cast<uint8_t>(v >> (8 * i));
}

size_t pick_width(Rng& rng) {
  static constexpr size_t kWidths[] = {1, 2, 4};
  return kWidths[rng.below(3)];
}

void havoc_op(Bytes& b, Rng& rng, size_t max_size) {
  switch (rng.below(8)) {
    case 0: {  // bit flip
      if (b.empty()) return;
      b[rng.below(b.size())] ^= static_cast<uint8_t>(1u << rng.below(8));
      return;
    }
    case 1: {  // byte flip or random byte
      if (b.empty()) return;
      uint8_t& byte = b[rng.below(b.size())];
      byte = rng.below(2) ? static_cast<uint8_t>(byte ^ 0xFF) : static_cast<uint8_t>(rng.below(256));
      return;
    }
    case 2:
    case 3: {  // arithmetic
      const size_t w = pick_width(rng);
      if (b.size() < w) return;
      const size_t pos = rng.below(b.size() - w + 1);
      const uint32_t delta = static_cast<uint32_t>(1 + rng.below(35));
      uint32_t v = load_le(b, pos, w);
      v = rng.below(2) ? v + delta : v - delta;
      store_le(b, pos, w, v);
      return;
    }
    case 4:
    case 5: {  // interesting constant
      const size_t w = pick_width(rng);
      if (b.size() < w) return;
      const size_t pos = rng.below(b.size() - w + 1);
      store_le(b, pos, w, kInterestingValues[rng.below(std::size(kInterestingValues))]);
      return;
    }
    case 6: {  // delete block
      if (b.size() < 2) return;
      const size_t len = 1 + rng.below(std::min<size_t>(b.size() - 1, 16));
      const size_t pos = rng.below(b.size() - len + 1);
      b.erase(b.begin() + static_cast<ptrdiff_t>(pos), b.begin() + static_cast<ptrdiff_t>(pos + len));
      return;
    }
    case 7: {  // insert random or cloned block
      if (b.size() >= max_size) return;
      const size_t len = 1 + rng.below(std::min<size_t>(max_size - b.size(), 16));
      const size_t at = rng.below(b.size() + 1);
      Bytes chunk(len);
      if (!b.empty() && rng.below(2)) {
        const size_t src = rng.below(b.size());
        for (size_t i = 0; i < len; ++i) chunk[i] = b[(src + i) % b.size()];
      } else {
        for (auto& c : chunk) c = static_cast<uint8_t>(rng.below(256));
      }
      b.insert(b.begin() + static_cast<ptrdiff_t>(at), chunk.begin(), chunk.end());
      return;
    }
  }
}

}  // namespace

Bytes mutate(const Bytes& parent, std::span<const Bytes* const> others, Rng& rng, size_t max_size) {
  Bytes child = parent;
  if (!others.empty() && rng.below(16) == 0) {
    const Bytes& other = *others[rng.below(others.size())];
    const size_t cut_a = rng.below(child.size() + 1);
    const size_t cut_b = rng.below(other.size() + 1);
    child.resize(cut_a);
    child.insert(child.end(), other.begin() + static_cast<ptrdiff_t>(cut_b), other.end());
  }
  const uint64_t ops = uint64_t{1} << rng.below(7);
  for (uint64_t i = 0; i < ops; ++i) havoc_op(child, rng, max_size);
  if (child.size() > max_size) child.resize(max_size);
  if (child.empty()) child.push_back(0);
  return child;
}

}  // namespace rehost::fuzz
