#pragma once

#include <bitset>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rehost::vm {

inline constexpr size_t kCoverageBits = 65536;
using CoverageMap = std::bitset<kCoverageBits>;

enum class CrashKind : uint8_t {
  kOobRead,
  kOobWrite,
  kNullDeref,
  kDivByZero,
  kAssertFail,
  kUnmappedAccess,
};

const char* crash_kind_name(CrashKind k);
std::optional<CrashKind> crash_kind_from_name(std::string_view s);

struct CrashRecord {
  CrashKind kind = CrashKind::kAssertFail;
  std::string function;
  uint32_t block = 0;
  uint32_t index = 0;
  std::vector<std::string> stack;  // innermost first
  // Kind-specific payload.
  std::optional<uint32_t> address;  // NullDeref, UnmappedAccess, stack/heap exhaustion
  std::optional<uint32_t> length;   // OobRead/OobWrite on a buffer: element count
  std::optional<uint32_t> attempted_index;
  std::optional<uint32_t> dividend;  // DivByZero
  std::string detail;

  bool operator==(const CrashRecord&) const = default;
};

// Site of the innermost tainted branch evaluated shortly before the budget
// ran out. Present only when such a branch exists.
struct HangSite {
  std::string function;
  uint32_t block = 0;
  uint32_t index = 0;
  std::vector<std::string> stack;
  bool operator==(const HangSite&) const = default;
};

enum class Outcome : uint8_t { kCleanExit, kCrash, kHang, kInputExhaustedExit };

const char* outcome_name(Outcome o);

struct ExecutionReport {
  Outcome outcome = Outcome::kCleanExit;
  std::optional<CrashRecord> crash;
  std::optional<HangSite> hang_site;
  CoverageMap coverage;
  uint64_t instructions_executed = 0;
  uint64_t bytes_consumed = 0;
  bool input_exhausted = false;
  std::set<std::string> disabled_isrs;

  bool operator==(const ExecutionReport&) const = default;
};

nlohmann::ordered_json crash_to_json(const CrashRecord& c);
nlohmann::ordered_json report_to_json(const ExecutionReport& r);

}  // namespace rehost::vm
