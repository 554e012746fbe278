#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rehost/fuzz/mutator.hpp"
#include "rehost/vm/vm.hpp"
#include "rehost/xform/instrumented.hpp"

namespace rehost::fuzz {

// Per-execution instruction budget used while fuzzing. A hanging input burns
// the whole budget, so this is far below the single-run default.
inline constexpr uint64_t kFuzzInstructionBudget = 50'000;
inline constexpr size_t kDefaultSeedSize = 64;

class BudgetZero : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exactly one of the two limits is used: executions when nonzero, else seconds.
struct Budget {
  uint64_t executions = 0;
  double seconds = 0;
};

struct FuzzOptions {
  uint64_t seed = 0;
  Budget budget{10'000, 0};
  vm::Limits limits{kFuzzInstructionBudget, 256};
  unsigned workers = 1;
  bool calibrate = true;
  size_t max_input = kMaxInputSize;
};

// A crash or a promoted hang, normalized for bucketing.
struct Finding {
  std::string kind;  // crash kind name or "Hang"
  std::string function;
  uint32_t block = 0;
  uint32_t index = 0;
  std::vector<std::string> stack;

  bool operator==(const Finding&) const = default;
};

// A hang becomes a finding only when a tainted branch controlled the loop.
std::optional<Finding> finding_of(const vm::ExecutionReport& r);
uint64_t signature(const Finding& f);

struct CorpusEntry {
  Bytes input;
  uint32_t new_bits = 0;
};

struct CrashEntry {
  Bytes input;
  Finding finding;
  std::optional<vm::CrashRecord> record;
  uint64_t signature = 0;
};

struct Campaign {
  std::vector<CorpusEntry> corpus;
  std::vector<CrashEntry> crashes;
  vm::CoverageMap bitmap;
  uint64_t executions = 0;
  uint64_t seed = 0;
  Budget budget;
  std::set<std::string> disabled_isrs;
  // popcount of the bitmap after each admission, for monotonicity checks.
  std::vector<size_t> admission_history;
};

struct CrashBucket {
  uint64_t signature = 0;
  Finding finding;
  Bytes representative;
  uint64_t count = 0;
  bool stable = true;
};

Campaign fuzz_whole(const xform::InstrumentedProgram& ip, const std::vector<Bytes>& seeds,
                    const FuzzOptions& opts);
Campaign fuzz_image(std::shared_ptr<const vm::Image> image, const std::vector<Bytes>& seeds,
                    const FuzzOptions& opts);

// Buckets by signature; each representative is replayed once and flagged
// unstable if it no longer reproduces the signature. Sorted by signature.
std::vector<CrashBucket> triage(const std::vector<CrashEntry>& crashes,
                                std::shared_ptr<const vm::Image> image, const vm::Limits& limits,
                                const std::set<std::string>& disabled);

std::string hex64(uint64_t v);
std::string to_hex(const Bytes& b);

nlohmann::ordered_json campaign_summary(const Campaign& c, const std::vector<CrashBucket>& buckets,
                                        size_t unique_blocks);

}  // namespace rehost::fuzz
