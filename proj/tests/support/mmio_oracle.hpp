#pragma once

#include <cstdint>
#include <vector>

#include "rehost/mmio/mmio_map.hpp"

namespace rehost::test {

// Brute-force reference for build_mmio_map over a small address space: every
// byte of a contributed page is marked, then every unmarked gap of at most
// `merge_gap` bytes between two marked runs is filled (repeated until stable),
// and the maximal marked runs become the intervals.
inline std::vector<mmio::Interval> per_byte_classifier(const std::vector<uint32_t>& addrs, uint32_t space,
                                                      mmio::PageGeometry g) {
  std::vector<bool> mark(space, false);
  for (uint32_t a : addrs) {
    const uint32_t base = a - a % g.page_size;
    for (uint32_t x = base; x < base + g.page_size && x < space; ++x) mark[x] = true;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    uint32_t x = 0;
    while (x < space) {
      if (mark[x]) {
        ++x;
        continue;
      }
      uint32_t end = x;
      while (end < space && !mark[end]) ++end;
      if (x > 0 && end < space && end - x <= g.merge_gap) {
        for (uint32_t y = x; y < end; ++y) mark[y] = true;
        changed = true;
      }
      x = end;
    }
  }
  std::vector<mmio::Interval> out;
  for (uint32_t x = 0; x < space;) {
    if (!mark[x]) {
      ++x;
      continue;
    }
    uint32_t end = x;
    while (end < space && mark[end]) ++end;
    out.push_back({x, end - 1});
    x = end;
  }
  return out;
}

}  // namespace rehost::test
