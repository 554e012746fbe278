#include <doctest.h>

#include <map>
#include <tuple>

#include "fixtures.hpp"
#include "rehost/fuzz/campaign.hpp"
#include "rehost/fuzz/coverage.hpp"
#include "rehost/fuzz/function_mode.hpp"
#include "rehost/fuzz/mutator.hpp"
#include "rehost/xform/passes.hpp"

using namespace rehost;
using namespace rehost::fuzz;

namespace {

FuzzOptions execs(uint64_t n, uint64_t seed = 0) {
  FuzzOptions o;
  o.seed = seed;
  o.budget = {n, 0};
  return o;
}

ArgSpec int_spec(std::string p) { return {std::move(p), ArgSpec::Kind::kInt, std::nullopt}; }
ArgSpec sized(std::string p, std::string n) { return {std::move(p), ArgSpec::Kind::kArray, std::move(n)}; }

std::shared_ptr<const vm::Image> harness_image(const fir::Program& p, const std::string& fn,
                                               const std::vector<ArgSpec>& specs) {
  xform::PipelineOptions o;
  o.dispatcher = false;
  return vm::compile_image(xform::run_pipeline(build_fn_harness(p, fn, specs), o));
}

std::vector<uint8_t> le32(uint32_t v) {
  return {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
}

}  // namespace

TEST_CASE("mutator respects the size cap and is deterministic") {
  const Bytes parent(64, 0);
  const Bytes other(16, 0xAB);
  const Bytes* others[] = {&parent, &other};
  Rng a(7), b(7);
  bool changed = false;
  for (int i = 0; i < 2000; ++i) {
    const Bytes x = mutate(parent, others, a, 80);
    CHECK(x == mutate(parent, others, b, 80));
    CHECK(x.size() <= 80);
    CHECK_FALSE(x.empty());
    changed |= x != parent;
  }
  CHECK(changed);
  Rng c(1);
  const Bytes empty;
  for (int i = 0; i < 200; ++i) CHECK(mutate(empty, {}, c, 8).size() <= 8);
}

TEST_CASE("Rng::below stays in range") {
  Rng r(3);
  for (uint64_t n : {1ull, 2ull, 3ull, 65ull, 1000003ull}) {
    for (int i = 0; i < 500; ++i) CHECK(r.below(n) < n);
  }
}

TEST_CASE("rcc_clock: a crashing divisor byte is within mutation reach") {
  // Reference search without weakening: RCC_CR, RCC_CFGR=PLL, then every
  // value of the low PLLCFGR byte that holds PLLM.
  xform::PipelineOptions o;
  o.weaken = false;
  const auto img = vm::compile_image(xform::run_pipeline(test::load_fixture("rcc_clock.fir"), o));
  int crashing = 0;
  for (int b = 0; b < 256; ++b) {
    const std::vector<uint8_t> input{0, 0, 0, 0, 0x08, 0, 0, 0, uint8_t(b), 0x40, 0, 0, 0, 0, 1, 0};
    const auto r = vm::run_program(img, input);
    crashing += r.outcome == vm::Outcome::kCrash && r.crash->kind == vm::CrashKind::kDivByZero;
    CHECK((r.outcome == vm::Outcome::kCrash) == ((b & 0x3F) == 0));
  }
  CHECK(crashing == 4);
}

TEST_CASE("rcc_clock campaign finds a DivByZero bucket") {
  const auto ip = xform::run_pipeline(test::load_fixture("rcc_clock.fir"));
  const auto c = fuzz_whole(ip, {}, execs(10000));
  CHECK(c.executions == 10000);
  const auto buckets = triage(c.crashes, vm::compile_image(ip), execs(1).limits, c.disabled_isrs);
  const auto div = std::count_if(buckets.begin(), buckets.end(), [](const CrashBucket& b) {
    return b.finding.kind == "DivByZero" && b.finding.function == "HAL_RCC_GetSysClockFreq";
  });
  CHECK(div >= 1);
  for (const auto& b : buckets) CHECK(b.stable);
}

TEST_CASE("straight-line program keeps a single corpus entry") {
  const auto ip = xform::run_pipeline(fir::parse_program("global g; entry f; fn f() { b0: store g, 3; return; }"));
  const auto c = fuzz_whole(ip, {}, execs(500));
  CHECK(c.corpus.size() == 1);
  CHECK(c.crashes.empty());
}

TEST_CASE("campaigns are deterministic for a fixed seed and execution budget") {
  const auto ip = xform::run_pipeline(test::load_fixture("clock_blocker.fir"));
  const auto img = vm::compile_image(ip);
  auto summary = [&](uint64_t seed) {
    const auto c = fuzz_image(img, {}, execs(1500, seed));
    return campaign_summary(c, triage(c.crashes, img, execs(1).limits, c.disabled_isrs), unique_blocks(c.bitmap, ip))
        .dump();
  };
  CHECK(summary(5) == summary(5));
  const auto a = fuzz_image(img, {}, execs(1500, 5));
  const auto b = fuzz_image(img, {}, execs(1500, 5));
  CHECK(a.bitmap == b.bitmap);
  CHECK(a.corpus.size() == b.corpus.size());
}

TEST_CASE("zero budget is rejected") {
  const auto ip = xform::run_pipeline(test::load_fixture("rcc_clock.fir"));
  CHECK_THROWS_AS(fuzz_whole(ip, {}, execs(0)), BudgetZero);
}

TEST_CASE("bitmap grows with every admission") {
  const auto ip = xform::run_pipeline(test::load_fixture("clock_blocker.fir"));
  const auto c = fuzz_whole(ip, {}, execs(3000, 2));
  REQUIRE_FALSE(c.admission_history.empty());
  for (size_t i = 1; i < c.admission_history.size(); ++i) {
    CHECK(c.admission_history[i] > c.admission_history[i - 1]);
  }
  CHECK(c.admission_history.back() == c.bitmap.count());
  CHECK(c.admission_history.size() == c.corpus.size());
  for (size_t i = 1; i < c.corpus.size(); ++i) CHECK(c.corpus[i].new_bits > 0);
}

TEST_CASE("stored crashes replay to the same signature") {
  for (const char* f : {"rcc_clock.fir", "isr_calib.fir"}) {
    const auto ip = xform::run_pipeline(test::load_fixture(f));
    const auto img = vm::compile_image(ip);
    FuzzOptions o = execs(3000, 1);
    o.calibrate = false;
    const auto c = fuzz_image(img, {}, o);
    CHECK_FALSE(c.crashes.empty());
    for (const auto& e : c.crashes) {
      const auto again = finding_of(vm::run_program(img, e.input, o.limits, c.disabled_isrs));
      REQUIRE(again.has_value());
      CHECK(signature(*again) == e.signature);
    }
  }
}

TEST_CASE("arg spec inference") {
  const auto loop = test::load_fixture("loop_bounded.fir");
  const auto specs = infer_arg_specs(loop, "fill");
  CHECK(specs == std::vector<ArgSpec>{sized("p", "n"), int_spec("n")});
  CHECK(format_arg_specs(specs) == "{p: Array SIZE n, n: Int}");

  const auto fixed = fir::parse_program("entry main; fn f(p: buf) { b0: x = p[3]; return; } fn main() { b0: return; }");
  const auto fs = infer_arg_specs(fixed, "f");
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].kind == ArgSpec::Kind::kArray);
  CHECK_FALSE(fs[0].size_of.has_value());
  CHECK(fs[0].fixed == 64u);

  const auto wrapper = fir::parse_program(R"(
    entry main;
    fn my_copy(dst: buf, src: buf, len) {
    b0:
      call copy(dst, src, len);
      return;
    }
    fn main() { b0: return; })");
  CHECK(infer_arg_specs(wrapper, "my_copy") ==
        std::vector<ArgSpec>{sized("dst", "len"), sized("src", "len"), int_spec("len")});

  const auto words = fir::parse_program("entry main; fn f(a, b) { b0: return; } fn main() { b0: return; }");
  CHECK_THROWS_AS(infer_arg_specs(words, "f"), NoBufferParams);
}

TEST_CASE("harness passes a buffer of s mod 65 elements and its length") {
  const auto p = fir::parse_program(R"(
    global got_n;
    global got_last;
    entry main;
    fn f(p: buf, n) {
    b0:
      store got_n, n;
      x = p[2];
      store got_last, x;
      y = p[n];
      return;
    }
    fn main() { b0: return; })");
  const auto img = harness_image(p, "f", {sized("p", "n"), int_spec("n")});
  std::vector<uint8_t> input{3};
  for (uint32_t v : {11u, 22u, 33u}) {
    const auto w = le32(v);
    input.insert(input.end(), w.begin(), w.end());
  }
  vm::Vm m(img, vm::InputStream(input));
  const auto r = m.run();
  CHECK(m.read_word(img->layout.globals.at("got_n").address) == 3u);
  CHECK(m.read_word(img->layout.globals.at("got_last").address) == 33u);
  REQUIRE(r.outcome == vm::Outcome::kCrash);
  CHECK(r.crash->kind == vm::CrashKind::kOobRead);
  CHECK(r.crash->length == 3u);

  const auto zero = vm::run_program(img, {65});
  REQUIRE(zero.outcome == vm::Outcome::kCrash);
  CHECK(zero.crash->kind == vm::CrashKind::kOobRead);
  CHECK(zero.crash->length == 0u);
}

TEST_CASE("harness spec mismatches") {
  const auto p = test::load_fixture("loop_bounded.fir");
  CHECK_THROWS_AS(build_fn_harness(p, "fill", {int_spec("n")}), SpecMismatch);
  CHECK_THROWS_AS(build_fn_harness(p, "fill", {int_spec("p"), int_spec("n")}), SpecMismatch);
  CHECK_THROWS_AS(build_fn_harness(p, "fill", {sized("p", "p"), int_spec("n")}), SpecMismatch);
  CHECK_THROWS_AS(build_fn_harness(p, "nope", {}), SpecMismatch);
}

TEST_CASE("msc_read: offsets past the disk crash exactly when the reference predicts") {
  const auto p = test::load_fixture("msc_read.fir");
  const auto img = harness_image(p, "tud_msc_read10_cb", infer_arg_specs(p, "tud_msc_read10_cb"));
  for (int off = 0; off < 256; ++off) {
    std::vector<uint8_t> input{4};
    input.resize(17, 0);
    for (uint8_t b : le32(0)) input.push_back(b);
    for (uint8_t b : le32(off)) input.push_back(b);
    const auto r = vm::run_program(img, input);
    const bool expect = off + 3 >= 16;
    CHECK((r.outcome == vm::Outcome::kCrash && r.crash->kind == vm::CrashKind::kOobRead) == expect);
  }
}

TEST_CASE("msc_read function campaign finds the OobRead") {
  const auto fc = fuzz_function(test::load_fixture("msc_read.fir"), "tud_msc_read10_cb", execs(5000));
  const auto buckets = triage(fc.campaign.crashes, vm::compile_image(fc.ip), execs(1).limits, {});
  CHECK(std::any_of(buckets.begin(), buckets.end(), [](const CrashBucket& b) {
    return b.finding.kind == "OobRead" && b.finding.function == "tud_msc_read10_cb";
  }));
  CHECK(format_arg_specs(fc.specs) == "{lba: Int, offset: Int, buffer: Array SIZE bufsize, bufsize: Int}");
}

TEST_CASE("pure function with word specs covers its block without crashes") {
  const auto p = fir::parse_program("entry main; fn plus(a, b) { b0: c = a + b; return c; } fn main() { b0: return; }");
  xform::PipelineOptions o;
  o.dispatcher = false;
  const auto ip = xform::run_pipeline(build_fn_harness(p, "plus", {int_spec("a"), int_spec("b")}), o);
  const auto c = fuzz_whole(ip, {}, execs(300));
  CHECK(c.crashes.empty());
  const auto rep = coverage_report(c, ip, {"plus"});
  REQUIRE(rep.functions.size() == 1);
  CHECK(rep.functions[0].blocks_hit == 1);
  CHECK(rep.functions[0].blocks_total == 1);
  CHECK(rep.triggered_pct == 100.0);
  REQUIRE_FALSE(rep.cdf.empty());
  CHECK(rep.cdf.back().pct_functions == 100.0);
  CHECK(rep.cdf.back().coverage_fraction == 1.0);
}

TEST_CASE("function mode never runs tasks or ISRs") {
  const auto p = fir::parse_program(R"(
    global task_ran;
    fn t() { b0: store task_ran, 1; call yield(); jump b0; }
    fn isr() { b0: store task_ran, 2; return; }
    fn sum(p: buf, n) {
    b0:
      i = 0;
      jump b1;
    b1:
      more = ult i, n;
      branch more, b2, b3;
    b2:
      v = p[i];
      i = i + 1;
      jump b1;
    b3:
      return;
    }
    fn main() { b0: return; }
    task worker priority 1 calls t;
    vector { isr }
    entry main;)");
  const auto fc = fuzz_function(p, "sum", execs(800));
  CHECK(fc.ip.program.tasks.empty());
  CHECK(fc.ip.program.vector_table.empty());
  CHECK(fc.ip.dispatcher_task.empty());
  CHECK_FALSE(fc.campaign.bitmap.test(xform::probe_id("t", 0)));
  CHECK_FALSE(fc.campaign.bitmap.test(xform::probe_id("isr", 0)));
  CHECK_FALSE(fc.campaign.bitmap.test(xform::probe_id("main", 0)));
  CHECK(fc.campaign.bitmap.test(xform::probe_id("sum", 2)));
}

TEST_CASE("triage buckets") {
  // Five crash sites selected by the first input byte.
  const auto p = fir::parse_program(R"(
    const SEL = 0x40000000;
    entry main;
    fn f0() { b0: x = div 1, 0; return; }
    fn f1() { b0: x = div 1, 0; return; }
    fn f2() { b0: v = load 0x20; return; }
    fn f3() { b0: assert 0; return; }
    fn f4() { b0: x = 0; jump b1; b1: y = mod 5, x; return; }
    fn main() {
    b0:
      s = load1 SEL;
      k = mod s, 5;
      c0 = eq k, 0;
      branch c0, b1, b2;
    b1: call f0(); return;
    b2: c1 = eq k, 1; branch c1, b3, b4;
    b3: call f1(); return;
    b4: c2 = eq k, 2; branch c2, b5, b6;
    b5: call f2(); return;
    b6: c3 = eq k, 3; branch c3, b7, b8;
    b7: call f3(); return;
    b8: call f4(); return;
    })");
  xform::PipelineOptions o;
  o.weaken = false;
  const auto img = vm::compile_image(xform::run_pipeline(p, o));
  const vm::Limits limits;
  std::vector<CrashEntry> raw;
  for (int i = 0; i < 20; ++i) {
    const Bytes input{uint8_t(i), uint8_t(i * 7)};
    const auto r = vm::run_program(img, input, limits);
    const auto f = finding_of(r);
    REQUIRE(f.has_value());
    raw.push_back({input, *f, r.crash, signature(*f)});
  }
  const auto buckets = triage(raw, img, limits, {});
  CHECK(buckets.size() == 5);
  // Reference grouping on the raw fields that define a site.
  std::map<std::tuple<std::string, std::string, uint32_t, uint32_t, std::vector<std::string>>, uint64_t> ref;
  for (const auto& e : raw) {
    std::vector<std::string> top(e.finding.stack.begin(),
                                 e.finding.stack.begin() + std::min<size_t>(3, e.finding.stack.size()));
    ++ref[{e.finding.kind, e.finding.function, e.finding.block, e.finding.index, top}];
  }
  CHECK(ref.size() == buckets.size());
  for (const auto& b : buckets) {
    CHECK(b.count == 4);
    CHECK(b.stable);
  }

  const std::vector<CrashEntry> same_site{raw[0], raw[5]};
  const auto one = triage(same_site, img, limits, {});
  REQUIRE(one.size() == 1);
  CHECK(one[0].count == 2);
  const std::vector<CrashEntry> two_fns{raw[0], raw[1]};
  CHECK(triage(two_fns, img, limits, {}).size() == 2);
}

TEST_CASE("coverage report with no executions") {
  const auto ip = xform::run_pipeline(test::load_fixture("rcc_clock.fir"));
  const Campaign empty;
  const auto r = coverage_report(empty, ip, default_roots(ip.program));
  CHECK(r.unique_blocks == 0);
  CHECK(r.triggered_pct == 0.0);
  CHECK(r.cdf.empty());
  CHECK(cdf_csv(r) == "pct_functions,coverage_fraction\n");
  for (const auto& f : r.functions) CHECK(f.blocks_hit == 0);
}

TEST_CASE("coverage report excludes synthesized functions") {
  const auto ip = xform::run_pipeline(test::load_fixture("gpio_latch.fir"));
  const auto c = fuzz_whole(ip, {}, execs(200));
  const auto r = coverage_report(c, ip, default_roots(ip.program));
  for (const auto& f : r.functions) CHECK_FALSE(f.function.starts_with("__"));
  CHECK(coverage_csv(r).starts_with("fn,blocks_total,blocks_hit,fraction\n"));
  CHECK(r.unique_blocks > 0);
}
