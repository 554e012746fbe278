#include "rehost/fuzz/coverage.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "rehost/fir/callgraph.hpp"

namespace rehost::fuzz {

size_t unique_blocks(const vm::CoverageMap& bitmap, const xform::InstrumentedProgram& ip) {
  size_t n = 0;
  for (const auto& e : ip.block_table) n += bitmap.test(e.probe) ? 1 : 0;
  return n;
}

std::vector<std::string> default_roots(const fir::Program& p) {
  std::vector<std::string> roots{p.entry};
  for (const auto& t : p.tasks) roots.push_back(t.function);
  for (const auto& v : p.vector_table) roots.push_back(v);
  return roots;
}

CoverageReport coverage_report(const Campaign& c, const xform::InstrumentedProgram& ip,
                               const std::vector<std::string>& roots) {
  CoverageReport r;
  r.unique_blocks = unique_blocks(c.bitmap, ip);
  std::map<std::string, FunctionCoverage> per_fn;
  for (const auto& e : ip.block_table) {
    auto& fc = per_fn[e.function];
    fc.function = e.function;
    ++fc.blocks_total;
    if (c.bitmap.test(e.probe)) ++fc.blocks_hit;
  }
  for (const auto& name : fir::reachable_functions(ip.program, roots)) {
    if (name.starts_with("__")) continue;
    auto it = per_fn.find(name);
    if (it != per_fn.end()) {
      r.functions.push_back(it->second);
    } else {
      const auto* fn = ip.program.find_function(name);
      r.functions.push_back({name, fn ? static_cast<uint32_t>(fn->blocks.size()) : 0u, 0});
    }
  }
  std::vector<double> triggered;
  for (const auto& f : r.functions) {
    if (f.blocks_hit > 0) triggered.push_back(f.fraction());
  }
  r.triggered_pct = r.functions.empty() ? 0.0 : 100.0 * triggered.size() / r.functions.size();
  std::sort(triggered.begin(), triggered.end(), std::greater<>());
  for (size_t i = 0; i < triggered.size(); ++i) {
    r.cdf.push_back({100.0 * static_cast<double>(i + 1) / triggered.size(), triggered[i]});
  }
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string coverage_csv(const CoverageReport& r) {
  std::string out = "fn,blocks_total,blocks_hit,fraction\n";
  for (const auto& f : r.functions) {
    out += f.function + "," + std::to_string(f.blocks_total) + "," + std::to_string(f.blocks_hit) +
           "," + fmt(f.fraction()) + "\n";
  }
  return out;
}

std::string cdf_csv(const CoverageReport& r) {
  std::string out = "pct_functions,coverage_fraction\n";
  for (const auto& p : r.cdf) out += fmt(p.pct_functions) + "," + fmt(p.coverage_fraction) + "\n";
  return out;
}

}  // namespace rehost::fuzz
