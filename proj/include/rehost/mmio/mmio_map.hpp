#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rehost::mmio {

// Inclusive address range.
struct Interval {
  uint32_t lo = 0;
  uint32_t hi = 0;

  bool contains(uint32_t addr) const { return addr >= lo && addr <= hi; }
  bool operator==(const Interval&) const = default;
  auto operator<=>(const Interval&) const = default;
};

// Page size and merge distance. The default is 4 KiB pages merged when the
// gap between them is at most 2 KiB; tests also use scaled-down geometries.
struct PageGeometry {
  uint32_t page_size = 4096;
  uint32_t merge_gap = 2048;
};

class MmioMap {
 public:
  MmioMap() = default;
  // `intervals` must already be sorted and disjoint.
  explicit MmioMap(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {}

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  size_t size() const { return intervals_.size(); }

  // Binary search over the sorted interval list.
  bool contains(uint32_t addr) const;

  bool operator==(const MmioMap&) const = default;

 private:
  std::vector<Interval> intervals_;
};

MmioMap build_mmio_map(std::span<const uint32_t> addrs, PageGeometry geom = {});

inline bool is_mmio(const MmioMap& m, uint32_t addr) { return m.contains(addr); }

}  // namespace rehost::mmio
