#include "rehost/vm/report.hpp"

#include "rehost/mmio/svd.hpp"

namespace rehost::vm {

namespace {

constexpr std::pair<CrashKind, const char*> kKindNames[] = {
    {CrashKind::kOobRead, "OobRead"},       {CrashKind::kOobWrite, "OobWrite"},
    {CrashKind::kNullDeref, "NullDeref"},   {CrashKind::kDivByZero, "DivByZero"},
    {CrashKind::kAssertFail, "AssertFail"}, {CrashKind::kUnmappedAccess, "UnmappedAccess"},
};

}  // namespace

const char* crash_kind_name(CrashKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<CrashKind> crash_kind_from_name(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (s == name) return kind;
  }
  return std::nullopt;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kCleanExit:
      return "CleanExit";
    case Outcome::kCrash:
      return "Crash";
    case Outcome::kHang:
      return "Hang";
    case Outcome::kInputExhaustedExit:
      return "InputExhaustedExit";
  }
  return "?";
}

nlohmann::ordered_json crash_to_json(const CrashRecord& c) {
  nlohmann::ordered_json j;
  j["kind"] = crash_kind_name(c.kind);
  j["function"] = c.function;
  j["block"] = c.block;
  j["index"] = c.index;
  j["stack"] = c.stack;
  if (c.address) j["address"] = mmio::hex32(*c.address);
  if (c.length) j["length"] = *c.length;
  if (c.attempted_index) j["attempted_index"] = *c.attempted_index;
  if (c.dividend) j["dividend"] = *c.dividend;
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

nlohmann::ordered_json report_to_json(const ExecutionReport& r) {
  nlohmann::ordered_json j;
  j["outcome"] = outcome_name(r.outcome);
  j["crash"] = r.crash ? crash_to_json(*r.crash) : nlohmann::ordered_json();
  if (r.hang_site) {
    j["hang_site"] = {{"function", r.hang_site->function},
                      {"block", r.hang_site->block},
                      {"index", r.hang_site->index},
                      {"stack", r.hang_site->stack}};
  } else {
    j["hang_site"] = nullptr;
  }
  j["instructions_executed"] = r.instructions_executed;
  j["bytes_consumed"] = r.bytes_consumed;
  j["input_exhausted"] = r.input_exhausted;
  j["blocks_covered"] = r.coverage.count();
  j["disabled_isrs"] = r.disabled_isrs;
  return j;
}

}  // namespace rehost::vm
