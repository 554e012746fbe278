#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rehost/fir/ast.hpp"

namespace rehost::fir {

inline constexpr uint32_t kGlobalsBase = 0x2000'0000;
inline constexpr uint32_t kGlobalsCapacity = 512 * 1024;
inline constexpr uint32_t kStacksBase = 0x2008'0000;
inline constexpr uint32_t kStackRegionSize = 8 * 1024;
inline constexpr uint32_t kStacksCapacity = 512 * 1024;
inline constexpr uint32_t kHeapBase = 0x2010'0000;
inline constexpr uint32_t kHeapCapacity = 1024 * 1024;
// [kReservedLo, kReservedHi) covers every segment any layout can produce.
inline constexpr uint32_t kReservedLo = kGlobalsBase;
inline constexpr uint32_t kReservedHi = kHeapBase + kHeapCapacity;
// Device-register band used by fixtures; never overlaps a segment.
inline constexpr uint32_t kDeviceBandLo = 0x4000'0000;
inline constexpr uint32_t kDeviceBandHi = 0x6000'0000;

class LayoutOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SegmentKind : uint8_t { kGlobals, kStack, kHeap };

struct Segment {
  SegmentKind kind = SegmentKind::kGlobals;
  uint32_t base = 0;
  uint32_t size = 0;
  // Owning context for stack regions: "" for the entry context, else a task name.
  std::string owner;

  bool contains(uint32_t addr, uint32_t width = 1) const {
    return addr >= base && static_cast<uint64_t>(addr) + width <= static_cast<uint64_t>(base) + size;
  }
  bool operator==(const Segment&) const = default;
};

struct GlobalSlot {
  uint32_t address = 0;
  uint32_t size = 0;
  bool operator==(const GlobalSlot&) const = default;
};

struct MemoryLayout {
  uint32_t globals_base = kGlobalsBase;
  uint32_t stacks_base = kStacksBase;
  uint32_t heap_base = kHeapBase;
  std::map<std::string, GlobalSlot> globals;
  std::vector<Segment> segments;  // Globals, then stacks (entry first), then Heap

  const Segment* segment_for(uint32_t addr, uint32_t width = 1) const;
  const Segment& globals_segment() const { return segments.front(); }
  const Segment& heap_segment() const { return segments.back(); }
  std::vector<const Segment*> stack_regions() const;

  bool operator==(const MemoryLayout&) const = default;
};

MemoryLayout layout_memory(const Program& p);

}  // namespace rehost::fir
