// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "mmio_oracle.hpp"
#include "progen.hpp"
#include "rehost/cli/cli.hpp"
#include "rehost/fir/layout.hpp"
#include "rehost/fuzz/function_mode.hpp"
#include "rehost/link/linkplan.hpp"
#include "rehost/mmio/constant_addresses.hpp"
#include "rehost/mmio/mmio_map.hpp"
#include "rehost/vm/vm.hpp"
#include "rehost/xform/passes.hpp"

namespace fs = std::filesystem;
using namespace rehost;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const fs::path& work_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "rehost_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = work_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string fx(const char* name) { return test::fixture_path(name); }

json read_json(const fs::path& p) { return json::parse(test::read_text(p.string())); }

size_t count_buckets(const json& summary, const std::string& kind, const std::string& function = "") {
  size_t n = 0;
  for (const auto& b : summary["buckets"]) {
    if (b["kind"] == kind && (function.empty() || b["function"] == function)) ++n;
  }
  return n;
}

uint32_t blocks_hit(const std::string& csv, const std::string& fn) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(fn + ",", 0) != 0) continue;
    std::istringstream f(line);
    std::string name, total, hit;
    std::getline(f, name, ',');
    std::getline(f, total, ',');
    std::getline(f, hit, ',');
    return static_cast<uint32_t>(std::stoul(hit));
  }
  return 0;
}

// First load or store reached from `fn` in program order, following calls
// and jumps. Stops at the first branch, which no fixture entry path takes
// before touching a peripheral.
struct MemSite {
  bool found = false;
  bool returned = false;
  std::string function;
  uint32_t block = 0;
  size_t index = 0;
};

MemSite first_memory_site(const fir::Program& p, const std::string& fn, int depth = 0) {
  using Op = fir::Instruction::Op;
  const auto& f = p.functions.at(fn);
  uint32_t b = 0;
  for (int steps = 0; steps < 64 && depth < 16; ++steps) {
    const auto& ins = f.blocks[b].instructions;
    for (size_t i = 0; i < ins.size(); ++i) {
      switch (ins[i].op) {
        case Op::kLoad:
        case Op::kStore:
        {
          MemSite site;
          site.found = true;
          site.function = fn;
          site.block = b;
          site.index = i;
          return site;
        }
        case Op::kCall:
          if (p.functions.count(ins[i].callee)) {
            auto inner = first_memory_site(p, ins[i].callee, depth + 1);
            if (!inner.returned) return inner;
          }
          break;
        case Op::kJump:
          b = ins[i].target;
          i = ins.size();
          break;
        case Op::kReturn: {
          MemSite done;
          done.returned = true;
          return done;
        }
        case Op::kBranch:
        case Op::kHalt:
          return {};
        default:
          break;
      }
    }
  }
  return {};
}

Verdict fuzz_rcc(const fs::path& dir) {
  const auto r = cli({"fuzz", "--seed", "0", "--execs", "10000", fx("rcc_clock.fir"), "--out", dir.string()});
  const json s = read_json(dir / "summary.json");
  const size_t n = count_buckets(s, "DivByZero", "HAL_RCC_GetSysClockFreq");
  return {n >= 1 && r.code == 1, std::to_string(n) + " DivByZero bucket(s) in HAL_RCC_GetSysClockFreq (need >= 1)"};
}

Verdict c1() { return fuzz_rcc(fresh_dir("c1")); }

Verdict c2() {
  const auto dir = fresh_dir("c2");
  const auto zeros = dir / "zeros.bin";
  std::ofstream(zeros, std::ios::binary) << std::string(4096, '\0');
  const uint64_t budget = 100000;
  const auto run = cli({"run", fx("gpio_latch.fir"), "--input", zeros.string(), "--budget", std::to_string(budget)});
  const json rep = json::parse(run.out);
  const bool hang = rep["outcome"] == "Hang" && rep["instructions_executed"] == budget;
  const auto fz = cli({"fuzz", fx("gpio_latch.fir"), "--execs", "5000", "--seed", "0", "--out", (dir / "f").string()});
  const size_t hangs = count_buckets(read_json(dir / "f" / "summary.json"), "Hang");
  return {hang && hangs >= 1, "run outcome " + rep["outcome"].get<std::string>() + " after " +
                                  std::to_string(rep["instructions_executed"].get<uint64_t>()) + "/" +
                                  std::to_string(budget) + " instructions; fuzz Hang buckets " + std::to_string(hangs)};
}

Verdict c3() {
  const auto dir = fresh_dir("c3");
  cli({"fuzz-fn", "tud_msc_read10_cb", fx("msc_read.fir"), "--execs", "5000", "--seed", "0", "--out",
       (dir / "fn").string()});
  cli({"fuzz", fx("msc_read.fir"), "--execs", "5000", "--seed", "0", "--out", (dir / "whole").string()});
  const size_t fn_oob = count_buckets(read_json(dir / "fn" / "summary.json"), "OobRead", "tud_msc_read10_cb");
  const size_t whole = read_json(dir / "whole" / "summary.json")["buckets"].size();
  return {fn_oob >= 1 && whole == 0, "function mode OobRead buckets " + std::to_string(fn_oob) +
                                         " (need >= 1); whole-program buckets " + std::to_string(whole) +
                                         " (need 0)"};
}

Verdict c4() {
  const auto dir = fresh_dir("c4");
  const auto zeros = dir / "zeros.bin";
  std::ofstream(zeros, std::ios::binary) << std::string(256, '\0');
  std::string detail;
  bool ok = true;
  int checked = 0;
  for (const char* f : {"rcc_clock.fir", "gpio_latch.fir", "clock_blocker.fir", "msc_read.fir", "stm32_sample.fir",
                        "isr_calib.fir", "loop_bounded.fir"}) {
    const auto p = test::load_fixture(f);
    const auto addrs = mmio::collect_constant_addresses(p, fir::layout_memory(p));
    if (addrs.empty()) continue;
    ++checked;
    const auto r = cli({"run", fx(f), "--input", zeros.string(), "--no-mmio", "--no-weaken", "--no-calibrate"});
    const json rep = json::parse(r.out);
    const auto site = first_memory_site(p, p.entry);
    const bool unmapped =
        rep["outcome"] == "Crash" && rep["crash"]["kind"] == "UnmappedAccess" &&
        std::count(addrs.begin(), addrs.end(),
                   static_cast<uint32_t>(std::stoul(rep["crash"]["address"].get<std::string>(), nullptr, 0))) > 0;
    const bool at_first = site.found && rep["crash"]["function"] == site.function &&
                          rep["crash"]["block"] == site.block && rep["crash"]["index"] == site.index;
    if (!unmapped || !at_first) {
      ok = false;
      detail += std::string(f) + " ";
    }
  }
  return {ok && checked > 0, std::to_string(checked) + " MMIO fixtures checked" +
                                 (ok ? ", all UnmappedAccess at first access" : "; failing: " + detail)};
}

Verdict c5() {
  const auto dir = fresh_dir("c5");
  cli({"fuzz", fx("clock_blocker.fir"), "--execs", "20000", "--seed", "0", "--out", (dir / "m2").string()});
  cli({"fuzz", fx("clock_blocker.fir"), "--execs", "20000", "--seed", "0", "--no-weaken", "--out",
       (dir / "m1").string()});
  const double with = read_json(dir / "m2" / "summary.json")["unique_blocks"].get<double>();
  const double without = read_json(dir / "m1" / "summary.json")["unique_blocks"].get<double>();
  const double ratio = without > 0 ? with / without : 0;
  const uint32_t hit_m2 = blocks_hit(test::read_text((dir / "m2" / "coverage.csv").string()), "interesting_function");
  const uint32_t hit_m1 = blocks_hit(test::read_text((dir / "m1" / "coverage.csv").string()), "interesting_function");
  char buf[160];
  std::snprintf(buf, sizeof buf, "unique blocks %.0f vs %.0f, ratio %.2f (need >= 1.50); interesting_function hit %u vs %u",
                with, without, ratio, hit_m2, hit_m1);
  return {ratio >= 1.5 && hit_m2 > 0 && hit_m1 == 0, buf};
}

Verdict c6() {
  std::mt19937_64 rng(6);
  const mmio::PageGeometry geoms[] = {{16, 8}, {64, 32}, {4096, 2048}};
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = geoms[trial % 3];
    const uint32_t space = g.page_size * 64;
    std::vector<uint32_t> addrs(rng() % 16);
    for (auto& a : addrs) a = static_cast<uint32_t>(rng() % space);
    if (!addrs.empty() && rng() % 2) addrs.push_back(addrs[rng() % addrs.size()]);
    if (mmio::build_mmio_map(addrs, g).intervals() != test::per_byte_classifier(addrs, space, g)) ++mismatches;
  }
  const auto dir = fresh_dir("c6");
  cli({"analyze", fx("stm32_sample.fir"), "--out", dir.string()});
  const json m = read_json(dir / "mmio_map.json");
  std::vector<std::pair<std::string, std::string>> got;
  for (const auto& iv : m["intervals"]) got.emplace_back(iv["lo"], iv["hi"]);
  const std::vector<std::pair<std::string, std::string>> want{
      {"0x40000000", "0x40000FFF"}, {"0x40009000", "0x40009FFF"}, {"0x40015000", "0x40015FFF"}};
  return {mismatches == 0 && got == want,
          std::to_string(mismatches) + " mismatches in 1000 trials; stm32_sample intervals " +
              (got == want ? "match" : "differ")};
}

Verdict c7() {
  const auto a = fresh_dir("c7a"), b = fresh_dir("c7b");
  fuzz_rcc(a);
  fuzz_rcc(b);
  const bool same_summary = test::read_text((a / "summary.json").string()) == test::read_text((b / "summary.json").string());
  const bool same_cov = test::read_text((a / "coverage.csv").string()) == test::read_text((b / "coverage.csv").string());
  return {same_summary && same_cov, std::string("summary.json ") + (same_summary ? "identical" : "differs") +
                                        ", coverage.csv " + (same_cov ? "identical" : "differs")};
}

Verdict c8() {
  const auto r = cli({"linkplan", "--manifest", fx("timers_scenario.json")});
  const json j = json::parse(r.out);
  bool app_timers = false;
  for (const auto& s : j["selected"]) app_timers |= s["name"] == "timers.o" && s["provenance"] == "App";
  const bool rename = j["renames"].size() == 1 && j["renames"][0]["object"] == "timers.o" &&
                      j["renames"][0]["provenance"] == "App" && j["renames"][0]["old"] == "prvInitialiseNewTimer" &&
                      j["renames"][0]["new"] == "prvInitialiseNewTimer__app";
  // Standalone validation of the plan against the manifest's universe.
  const auto m = link::manifest_from_json(read_json(fx("timers_scenario.json")));
  const auto v = link::validate_plan(link::resolve_links(m.roots, m.app_pool, m.lpl_pool), m.universe());
  return {r.code == 0 && app_timers && rename && v.ok(),
          std::string("app timers.o ") + (app_timers ? "selected" : "missing") + ", rename " +
              (rename ? "prvInitialiseNewTimer -> prvInitialiseNewTimer__app" : "wrong") + ", " +
              std::to_string(v.unresolved.size()) + " unresolved, " + std::to_string(v.duplicate_strong.size()) +
              " duplicate Strong"};
}

Verdict c9() {
  const std::string got = fuzz::format_arg_specs(fuzz::infer_arg_specs(test::load_fixture("loop_bounded.fir"), "fill"));
  return {got == "{p: Array SIZE n, n: Int}", got};
}

Verdict c10() {
  std::mt19937_64 rng(10);
  int differ = 0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const auto p = fir::parse_program(test::generate_program(0xA000 + seed));
    std::vector<uint8_t> input(rng() % 64);
    for (auto& b : input) b = static_cast<uint8_t>(rng());
    auto outcome = [&](const xform::InstrumentedProgram& ip) {
      const auto img = vm::compile_image(ip);
      vm::Vm m(img, vm::InputStream(input), {200000, 256});
      const auto r = m.run();
      const auto g = m.globals_memory();
      return std::make_tuple(r.outcome, r.crash ? std::optional(r.crash->kind) : std::nullopt,
                             std::vector<uint8_t>(g.begin(), g.end()));
    };
    if (outcome(xform::untransformed(p)) != outcome(xform::run_pipeline(p))) ++differ;
  }
  return {differ == 0, std::to_string(differ) + " of 200 generated programs differ"};
}

Verdict c11() {
  const auto img = vm::compile_image(xform::run_pipeline(test::load_fixture("isr_calib.fir")));
  const auto disabled = vm::calibrate_isrs(img);
  const bool exact = disabled == std::set<std::string>{"SPIM1_TWI1_IRQHandler"};
  const auto dir = fresh_dir("c11");
  cli({"fuzz", fx("isr_calib.fir"), "--execs", "10000", "--seed", "0", "--out", dir.string()});
  const json s = read_json(dir / "summary.json");
  size_t nulls_in_isr = 0;
  for (const auto& b : s["buckets"]) {
    if (b["kind"] != "NullDeref") continue;
    for (const auto& frame : b["stack"]) {
      if (frame == "SPIM1_TWI1_IRQHandler" || frame == "USBD_IRQHandler") {
        ++nulls_in_isr;
        break;
      }
    }
  }
  std::string names;
  for (const auto& d : disabled) names += d + " ";
  return {exact && nulls_in_isr == 0,
          "disabled {" + names + "}; NullDeref buckets in ISRs " + std::to_string(nulls_in_isr)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"div-by-zero reproduction", c1},  {"hang reproduction", c2},   {"function-mode OOB", c3},
      {"ablation without MMIO", c4},     {"ablation of weakening", c5}, {"MMIO map correctness", c6},
      {"determinism", c7},               {"link plan", c8},           {"arg-spec co-relation", c9},
      {"semantic preservation", c10},    {"ISR calibration", c11},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("[%s] %zu: %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  fs::remove_all(work_root());
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
