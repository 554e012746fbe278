#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rehost/fir/ast.hpp"
#include "rehost/mmio/mmio_map.hpp"
#include "rehost/xform/instrumented.hpp"
#include "rehost/xform/taint.hpp"

namespace rehost::xform {

// Removes every inline-assembly instruction; each output local is assigned 0
// or 1 drawn from a generator seeded with `seed`.
fir::Program elide_asm(const fir::Program& p, uint64_t seed);

// Rewrites every load into `__mmio_load(addr, width)` and every store into
// `__mmio_store(addr, value, width)`. The VM decides per access whether the
// address is in the map: MMIO loads read the input stream and set the taint
// bit, MMIO stores are dropped, everything else touches real memory.
fir::Program instrument_mmio(const fir::Program& p, const mmio::MmioMap& m);

struct WeakenResult {
  fir::Program program;
  std::set<BranchSite> weakened;
};

// Marks every branch whose condition may be tainted. At runtime a weakened
// branch whose condition carries the taint bit consumes one input byte b and
// uses cond XOR (b & 1).
WeakenResult weaken_conditions(const fir::Program& p, const TaintSummary& summaries);

// Appends the `__dispatcher` task (priority max+1) when the vector table is
// non-empty. Each activation reads one byte b, calls vector_table[b mod n]
// unless that handler is disabled, then yields.
fir::Program inject_dispatcher(const fir::Program& p);

InstrumentedProgram insert_coverage_probes(StagedProgram staged);

struct PipelineOptions {
  bool elide_asm = true;
  bool mmio = true;
  bool weaken = true;
  bool dispatcher = true;
  uint64_t asm_seed = 0;
};

class PipelineConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate_options(const PipelineOptions& opts);

// elide_asm -> instrument_mmio -> weaken_conditions -> inject_dispatcher ->
// insert_coverage_probes, honoring the toggles.
InstrumentedProgram run_pipeline(const fir::Program& p, const PipelineOptions& opts = {});

}  // namespace rehost::xform
