#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "rehost/fir/ast.hpp"

namespace rehost::xform {

// Static taint state of a value: bit kSourceBit means "may derive from an MMIO
// read (or tainted memory)", bit i < kSourceBit means "may derive from
// parameter i". Parameters beyond the tracked range fold into the source bit.
using TaintMask = uint64_t;
inline constexpr unsigned kSourceBit = 63;
inline constexpr TaintMask kSource = TaintMask{1} << kSourceBit;

struct FunctionSummary {
  TaintMask param_to_return = 0;  // params whose taint reaches the return value
  bool returns_source = false;    // return may be tainted with untainted arguments
  bool operator==(const FunctionSummary&) const = default;
};

struct TaintSummary {
  std::map<std::string, FunctionSummary> functions;
  // Locals that may carry MMIO-derived data in some calling context.
  std::map<std::string, std::set<std::string>> tainted_locals;
  // Parameters that some caller passes a possibly tainted value.
  std::map<std::string, TaintMask> tainted_params;
  bool memory_tainted = false;

  bool local_tainted(const std::string& fn, const std::string& local) const;
};

// Whole-program flow-insensitive propagation, iterated to a fixpoint across
// the call graph (recursion included).
TaintSummary compute_taint_summaries(const fir::Program& p);

// Whether `cond` evaluated inside `fn` may be tainted.
bool expr_possibly_tainted(const TaintSummary& s, const fir::Program& p, const std::string& fn,
                           const fir::Expr& cond);

}  // namespace rehost::xform
