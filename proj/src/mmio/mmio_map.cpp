#include "rehost/mmio/mmio_map.hpp"

#include <algorithm>

namespace rehost::mmio {

bool MmioMap::contains(uint32_t addr) const {
  // First interval whose lo is greater than addr; the candidate is the one before.
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), addr,
                             [](uint32_t a, const Interval& iv) { return a < iv.lo; });
  if (it == intervals_.begin()) return false;
  return std::prev(it)->contains(addr);
}

MmioMap build_mmio_map(std::span<const uint32_t> addrs, PageGeometry geom) {
  const uint64_t page = geom.page_size;
  std::vector<uint64_t> bases;
  bases.reserve(addrs.size());
  for (uint32_t x : addrs) bases.push_back(x - x % page);
  std::sort(bases.begin(), bases.end());
  bases.erase(std::unique(bases.begin(), bases.end()), bases.end());

  // A single sweep over sorted pages reaches the transitive fixpoint: each page
  // either extends the open interval or starts a new one.
  std::vector<Interval> out;
  uint64_t lo = 0;
  uint64_t hi = 0;  // inclusive
  bool open = false;
  for (uint64_t b : bases) {
    uint64_t end = std::min<uint64_t>(b + page - 1, 0xFFFF'FFFFull);
    if (open && b <= hi + 1 + geom.merge_gap) {
      hi = std::max(hi, end);
      continue;
    }
    if (open) out.push_back({static_cast<uint32_t>(lo), static_cast<uint32_t>(hi)});
    lo = b;
    hi = end;
    open = true;
  }
  if (open) out.push_back({static_cast<uint32_t>(lo), static_cast<uint32_t>(hi)});
  return MmioMap(std::move(out));
}

}  // namespace rehost::mmio
