#include "rehost/fir/layout.hpp"

namespace rehost::fir {

const Segment* MemoryLayout::segment_for(uint32_t addr, uint32_t width) const {
  for (const auto& s : segments) {
    if (s.contains(addr, width)) return &s;
  }
  return nullptr;
}

std::vector<const Segment*> MemoryLayout::stack_regions() const {
  std::vector<const Segment*> out;
  for (const auto& s : segments) {
    if (s.kind == SegmentKind::kStack) out.push_back(&s);
  }
  return out;
}

MemoryLayout layout_memory(const Program& p) {
  MemoryLayout layout;
  uint64_t cursor = 0;
  for (const auto& g : p.globals) {
    uint64_t size = g.elements ? static_cast<uint64_t>(*g.elements) * 4u : 4u;
    if (cursor + size > kGlobalsCapacity) {
      throw LayoutOverflow("globals exceed " + std::to_string(kGlobalsCapacity) +
                           " bytes at '" + g.name + "'");
    }
    layout.globals[g.name] = {kGlobalsBase + static_cast<uint32_t>(cursor),
                              static_cast<uint32_t>(size)};
    cursor += size;  // sizes are multiples of 4, so alignment is preserved
  }
  layout.segments.push_back(
      {SegmentKind::kGlobals, kGlobalsBase, static_cast<uint32_t>(cursor), ""});

  const uint64_t regions = p.tasks.size() + 1;
  if (regions * kStackRegionSize > kStacksCapacity) {
    throw LayoutOverflow("stack regions exceed " + std::to_string(kStacksCapacity) +
                         " bytes (" + std::to_string(regions) + " contexts)");
  }
  layout.segments.push_back({SegmentKind::kStack, kStacksBase, kStackRegionSize, ""});
  for (size_t k = 0; k < p.tasks.size(); ++k) {
    layout.segments.push_back({SegmentKind::kStack,
                               kStacksBase + static_cast<uint32_t>(k + 1) * kStackRegionSize,
                               kStackRegionSize, p.tasks[k].name});
  }
  layout.segments.push_back({SegmentKind::kHeap, kHeapBase, kHeapCapacity, ""});
  return layout;
}

}  // namespace rehost::fir
