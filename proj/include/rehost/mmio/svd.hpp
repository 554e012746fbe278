#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rehost/mmio/mmio_map.hpp"

namespace rehost::mmio {

// A peripheral's register block, [base, end).
struct SvdPeripheral {
  std::string name;
  uint32_t base = 0;
  uint32_t end = 0;
  bool operator==(const SvdPeripheral&) const = default;
};

struct SvdDoc {
  std::vector<SvdPeripheral> peripherals;
};

struct CompareReport {
  std::vector<std::pair<Interval, std::string>> matched;
  std::vector<Interval> undocumented;
};

class SvdFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An interval is matched when it overlaps at least one peripheral range; the
// reported name is the first overlapping peripheral in document order.
CompareReport svd_compare(const MmioMap& m, const SvdDoc& svd);

// {"peripherals":[{"name":..., "base":N|"0x..", "end":N|"0x.."}]}
SvdDoc svd_from_json(const nlohmann::json& j);
nlohmann::ordered_json compare_report_to_json(const CompareReport& r);
nlohmann::ordered_json mmio_map_to_json(const MmioMap& m);
MmioMap mmio_map_from_json(const nlohmann::json& j);

// Accepts a JSON number or a "0x"-prefixed / decimal string.
uint32_t json_u32(const nlohmann::json& j, const char* what);
std::string hex32(uint32_t v);

}  // namespace rehost::mmio
