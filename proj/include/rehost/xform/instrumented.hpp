#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rehost/fir/ast.hpp"
#include "rehost/mmio/mmio_map.hpp"

namespace rehost::xform {

inline constexpr std::string_view kPassElideAsm = "elide_asm";
inline constexpr std::string_view kPassInstrumentMmio = "instrument_mmio";
inline constexpr std::string_view kPassWeaken = "weaken_conditions";
inline constexpr std::string_view kPassDispatcher = "inject_dispatcher";
inline constexpr std::string_view kPassProbes = "insert_coverage_probes";

inline constexpr std::string_view kDispatcherName = "__dispatcher";

struct ProbeEntry {
  std::string function;
  uint32_t block = 0;
  uint16_t probe = 0;
  bool operator==(const ProbeEntry&) const = default;
};

struct BranchSite {
  std::string function;
  uint32_t block = 0;
  uint32_t index = 0;
  auto operator<=>(const BranchSite&) const = default;
};

// A pass that ran (`enabled`) or was deliberately switched off by a toggle.
struct PassRecord {
  std::string name;
  bool enabled = true;
  bool operator==(const PassRecord&) const = default;
};

// Output of the earlier passes, consumed by insert_coverage_probes.
struct StagedProgram {
  fir::Program program;
  std::vector<PassRecord> passes;
  mmio::MmioMap mmio_map;
  std::set<BranchSite> weakened;
};

struct InstrumentedProgram {
  fir::Program program;
  std::vector<ProbeEntry> block_table;
  mmio::MmioMap mmio_map;
  std::set<BranchSite> weakened_branches;
  std::string dispatcher_task;  // empty when no dispatcher was injected
  std::vector<PassRecord> passes_applied;

  bool pass_enabled(std::string_view name) const;
  bool operator==(const InstrumentedProgram&) const = default;
};

class PassOrderError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 64-bit FNV-1a of the function name, a NUL separator and the little-endian
// block index, reduced mod 65536.
uint16_t probe_id(std::string_view function, uint32_t block);

// Wraps a program with no passes and no probes; the baseline interpreter runs this.
InstrumentedProgram untransformed(fir::Program p);

// Versioned JSON container. to_artifact(from_artifact(s)) reproduces s byte for byte.
std::string to_artifact(const InstrumentedProgram& ip);
InstrumentedProgram from_artifact(std::string_view text);

}  // namespace rehost::xform
