#pragma once

#include <string>
#include <vector>

#include "rehost/fuzz/campaign.hpp"

namespace rehost::fuzz {

struct FunctionCoverage {
  std::string function;
  uint32_t blocks_total = 0;
  uint32_t blocks_hit = 0;
  double fraction() const { return blocks_total ? double(blocks_hit) / blocks_total : 0.0; }
};

struct CdfPoint {
  double pct_functions = 0;
  double coverage_fraction = 0;
};

struct CoverageReport {
  size_t unique_blocks = 0;
  std::vector<FunctionCoverage> functions;  // reachable functions, by name
  double triggered_pct = 0;
  std::vector<CdfPoint> cdf;
};

// Blocks whose probe bit is set in the bitmap.
size_t unique_blocks(const vm::CoverageMap& bitmap, const xform::InstrumentedProgram& ip);

// Entry, task functions and vector-table handlers.
std::vector<std::string> default_roots(const fir::Program& p);

// Rows cover functions reachable from `roots`, minus synthesized `__` helpers.
// The CDF sorts triggered functions by coverage (descending); point i is
// (100 * i / triggered, fraction_i).
CoverageReport coverage_report(const Campaign& c, const xform::InstrumentedProgram& ip,
                               const std::vector<std::string>& roots);

std::string coverage_csv(const CoverageReport& r);
std::string cdf_csv(const CoverageReport& r);

}  // namespace rehost::fuzz
