#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rehost/fir/ast.hpp"
#include "rehost/fuzz/campaign.hpp"
#include "rehost/xform/passes.hpp"

namespace rehost::fuzz {

inline constexpr uint32_t kDefaultArrayElements = 64;
inline constexpr uint32_t kArraySizeModulus = 65;
inline constexpr std::string_view kHarnessName = "__harness";

struct ArgSpec {
  enum class Kind : uint8_t { kInt, kArray };
  std::string param;
  Kind kind = Kind::kInt;
  std::optional<std::string> size_of;  // Array sized by another parameter
  uint32_t fixed = kDefaultArrayElements;  // Array with no size parameter

  bool operator==(const ArgSpec&) const = default;
};

class NoBufferParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SpecMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// "{p: Array SIZE n, n: Int}" / "{p: Array Fixed(64)}"
std::string format_arg_specs(const std::vector<ArgSpec>& specs);

// A buffer parameter b is sized by word parameter n when b is indexed by an
// induction variable i guarded by `ult i, n` / `ule i, n` inside a loop, or
// when b and n appear together in a `copy` call. Otherwise Fixed(64).
std::vector<ArgSpec> infer_arg_specs(const fir::Program& p, const std::string& fname);

// New program whose entry `__harness` builds the arguments from input and
// calls fname once, then halts. Tasks and the vector table are dropped.
fir::Program build_fn_harness(const fir::Program& p, const std::string& fname,
                              const std::vector<ArgSpec>& specs);

struct FunctionCampaign {
  std::vector<ArgSpec> specs;
  xform::InstrumentedProgram ip;
  Campaign campaign;
};

FunctionCampaign fuzz_function(const fir::Program& p, const std::string& fname,
                               const FuzzOptions& opts, const xform::PipelineOptions* pipeline = nullptr);

}  // namespace rehost::fuzz
