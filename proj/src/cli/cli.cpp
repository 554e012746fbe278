#include "rehost/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rehost/fir/layout.hpp"
#include "rehost/fir/parser.hpp"
#include "rehost/fuzz/campaign.hpp"
#include "rehost/fuzz/coverage.hpp"
#include "rehost/fuzz/function_mode.hpp"
#include "rehost/link/linkplan.hpp"
#include "rehost/mmio/constant_addresses.hpp"
#include "rehost/mmio/svd.hpp"
#include "rehost/vm/image.hpp"
#include "rehost/vm/vm.hpp"
#include "rehost/xform/passes.hpp"

namespace rehost::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Input-side failure: unreadable file, bad JSON, bad flag combination.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string out_dir;
  uint64_t seed = 0;
  bool json = false;
};

struct Toggles {
  bool no_mmio = false;
  bool no_weaken = false;
  bool no_dispatcher = false;
  bool no_asm_elide = false;

  xform::PipelineOptions options(uint64_t seed) const {
    xform::PipelineOptions o;
    o.mmio = !no_mmio;
    o.weaken = !no_weaken;
    o.dispatcher = !no_dispatcher;
    o.elide_asm = !no_asm_elide;
    o.asm_seed = seed;
    return o;
  }
};

struct LimitFlags {
  std::optional<uint64_t> budget;
  std::optional<uint32_t> max_depth;

  vm::Limits apply(vm::Limits l) const {
    if (budget) l.instruction_budget = *budget;
    if (max_depth) l.max_call_depth = *max_depth;
    return l;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<uint8_t> read_bytes(const std::string& path) {
  const std::string s = read_file(path);
  return {s.begin(), s.end()};
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

bool looks_like_json(const std::string& text) {
  auto it = std::find_if(text.begin(), text.end(), [](char c) { return !std::isspace(uint8_t(c)); });
  return it != text.end() && *it == '{';
}

// A program path names either FIR source, which goes through the pipeline, or
// a previously written instrumented artifact, which is used as is.
xform::InstrumentedProgram load_instrumented(const std::string& path, const Toggles& t, uint64_t seed) {
  const std::string text = read_file(path);
  if (looks_like_json(text)) return xform::from_artifact(text);
  return xform::run_pipeline(fir::parse_program(text), t.options(seed));
}

std::vector<fuzz::Bytes> read_seed_dir(const std::string& dir) {
  std::vector<fuzz::Bytes> seeds;
  if (dir.empty()) return seeds;
  if (!fs::is_directory(dir)) throw UsageError("seed directory '" + dir + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) seeds.push_back(read_bytes(f.string()));
  return seeds;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string program;
  std::string svd;
};

int cmd_analyze(const Common& c, const AnalyzeArgs& a, std::ostream& out) {
  const fir::Program p = fir::parse_program(read_file(a.program));
  const auto layout = fir::layout_memory(p);
  const auto addrs = mmio::collect_constant_addresses(p, layout);
  const auto map = mmio::build_mmio_map(addrs);
  ordered_json doc = mmio::mmio_map_to_json(map);
  std::optional<mmio::CompareReport> cmp;
  if (!a.svd.empty()) {
    cmp = mmio::svd_compare(map, mmio::svd_from_json(read_json(a.svd)));
  }
  if (!c.out_dir.empty()) {
    write_file(fs::path(c.out_dir) / "mmio_map.json", dump(doc));
    if (cmp) write_file(fs::path(c.out_dir) / "svd_compare.json", dump(mmio::compare_report_to_json(*cmp)));
  }
  if (c.json) {
    ordered_json j;
    j["mmio_map"] = doc;
    if (cmp) j["svd_compare"] = mmio::compare_report_to_json(*cmp);
    out << dump(j);
  } else {
    for (const auto& iv : map.intervals()) {
      out << mmio::hex32(iv.lo) << "-" << mmio::hex32(iv.hi) << "\n";
    }
    if (cmp) {
      for (const auto& [iv, name] : cmp->matched) {
        out << "matched " << mmio::hex32(iv.lo) << "-" << mmio::hex32(iv.hi) << " " << name << "\n";
      }
      for (const auto& iv : cmp->undocumented) {
        out << "undocumented " << mmio::hex32(iv.lo) << "-" << mmio::hex32(iv.hi) << "\n";
      }
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- instrument

int cmd_instrument(const Common& c, const std::string& program, const Toggles& t, std::ostream& out) {
  const fir::Program p = fir::parse_program(read_file(program));
  const std::string artifact = xform::to_artifact(xform::run_pipeline(p, t.options(c.seed)));
  if (c.out_dir.empty()) {
    out << artifact;
  } else {
    write_file(fs::path(c.out_dir) / "instrumented.json", artifact);
    if (c.json) {
      out << dump({{"artifact", (fs::path(c.out_dir) / "instrumented.json").string()}});
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- run

struct RunArgs {
  std::string program;
  std::string input;
  bool no_calibrate = false;
};

int cmd_run(const Common& c, const RunArgs& a, const Toggles& t, const LimitFlags& lf,
            std::ostream& out) {
  const auto ip = load_instrumented(a.program, t, c.seed);
  const auto image = vm::compile_image(ip);
  const vm::Limits limits = lf.apply({});
  std::set<std::string> disabled;
  if (!a.no_calibrate) disabled = vm::calibrate_isrs(image, limits);
  const auto report = vm::run_program(image, read_bytes(a.input), limits, disabled);
  const std::string text = dump(vm::report_to_json(report));
  if (!c.out_dir.empty()) write_file(fs::path(c.out_dir) / "report.json", text);
  out << text;
  return report.outcome == vm::Outcome::kCrash ? kExitFindings : kExitOk;
}

// ---------------------------------------------------------------- fuzz

struct FuzzArgs {
  std::string program;
  std::string function;  // fuzz-fn only
  std::string seeds;
  std::optional<uint64_t> execs;
  std::optional<double> seconds;
  unsigned workers = 1;
  bool no_calibrate = false;
};

fuzz::FuzzOptions fuzz_options(const Common& c, const FuzzArgs& a, const LimitFlags& lf) {
  fuzz::FuzzOptions o;
  o.seed = c.seed;
  if (a.seconds) {
    o.budget = {0, *a.seconds};
  } else if (a.execs) {
    o.budget = {*a.execs, 0};
  }
  o.limits = lf.apply(o.limits);
  o.workers = a.workers;
  o.calibrate = !a.no_calibrate;
  return o;
}

void write_campaign(const fs::path& dir, const fuzz::Campaign& camp,
                    const std::vector<fuzz::CrashBucket>& buckets, std::shared_ptr<const vm::Image> image,
                    const vm::Limits& limits, const std::string& summary, const fuzz::CoverageReport& cov,
                    const xform::InstrumentedProgram& ip) {
  write_file(dir / "summary.json", summary);
  write_file(dir / "coverage.csv", fuzz::coverage_csv(cov));
  write_file(dir / "cdf.csv", fuzz::cdf_csv(cov));
  write_file(dir / "instrumented.json", xform::to_artifact(ip));
  fs::create_directories(dir / "corpus");
  for (size_t i = 0; i < camp.corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "id_%06zu", i);
    const auto& in = camp.corpus[i].input;
    write_file(dir / "corpus" / name, std::string(in.begin(), in.end()));
  }
  fs::create_directories(dir / "crashes");
  for (const auto& b : buckets) {
    const std::string stem = fuzz::hex64(b.signature);
    write_file(dir / "crashes" / (stem + ".bin"), std::string(b.representative.begin(), b.representative.end()));
    const auto report = vm::run_program(image, b.representative, limits, camp.disabled_isrs);
    write_file(dir / "crashes" / (stem + ".json"), dump(vm::report_to_json(report)));
  }
}

int finish_fuzz(const Common& c, const fuzz::FuzzOptions& opts, const fuzz::Campaign& camp,
                const xform::InstrumentedProgram& ip, const std::vector<std::string>& roots,
                ordered_json extra, std::ostream& out) {
  const auto image = vm::compile_image(ip);
  const auto buckets = fuzz::triage(camp.crashes, image, opts.limits, camp.disabled_isrs);
  const auto cov = fuzz::coverage_report(camp, ip, roots);
  ordered_json summary = fuzz::campaign_summary(camp, buckets, cov.unique_blocks);
  for (auto& [k, v] : extra.items()) summary[k] = v;
  const std::string text = dump(summary);
  if (!c.out_dir.empty()) {
    write_campaign(c.out_dir, camp, buckets, image, opts.limits, text, cov, ip);
  }
  if (c.json) {
    out << text;
  } else {
    out << "executions " << camp.executions << "\n"
        << "corpus " << camp.corpus.size() << "\n"
        << "unique_blocks " << cov.unique_blocks << "\n"
        << "buckets " << buckets.size() << "\n";
    for (const auto& b : buckets) {
      out << "  " << fuzz::hex64(b.signature) << " " << b.finding.kind << " in " << b.finding.function
          << " b" << b.finding.block << "[" << b.finding.index << "] x" << b.count
          << (b.stable ? "" : " (unstable)") << "\n";
    }
  }
  return buckets.empty() ? kExitOk : kExitFindings;
}

int cmd_fuzz(const Common& c, const FuzzArgs& a, const Toggles& t, const LimitFlags& lf,
             std::ostream& out) {
  const auto ip = load_instrumented(a.program, t, c.seed);
  const auto opts = fuzz_options(c, a, lf);
  const auto camp = fuzz::fuzz_whole(ip, read_seed_dir(a.seeds), opts);
  return finish_fuzz(c, opts, camp, ip, fuzz::default_roots(ip.program), ordered_json::object(), out);
}

int cmd_fuzz_fn(const Common& c, const FuzzArgs& a, const Toggles& t, const LimitFlags& lf,
                std::ostream& out) {
  const fir::Program p = fir::parse_program(read_file(a.program));
  const auto opts = fuzz_options(c, a, lf);
  const auto po = t.options(c.seed);
  const auto fc = fuzz::fuzz_function(p, a.function, opts, &po);
  ordered_json extra;
  extra["function"] = a.function;
  extra["arg_specs"] = fuzz::format_arg_specs(fc.specs);
  return finish_fuzz(c, opts, fc.campaign, fc.ip, {a.function}, extra, out);
}

// ---------------------------------------------------------------- linkplan

struct LinkArgs {
  std::string manifest;
  std::string oracle;
};

// Renders the candidate as key=value lines and runs `oracle FILE`.
bool run_oracle(const std::string& command, const link::ConfigSet& configs, const fs::path& scratch) {
  std::string body;
  for (const auto& [k, v] : configs) body += k + "=" + v + "\n";
  write_file(scratch, body);
  const std::string cmd = command + " '" + scratch.string() + "'";
  const int status = std::system(cmd.c_str());
  return status == 0;
}

int cmd_linkplan(const Common& c, const LinkArgs& a, std::ostream& out) {
  const auto manifest = link::manifest_from_json(read_json(a.manifest));
  const auto universe = manifest.universe();
  const link::AliasTable* aliases = manifest.aliases.entries.empty() ? nullptr : &manifest.aliases;
  link::LinkPlan plan = link::resolve_links(manifest.roots, manifest.app_pool, manifest.lpl_pool, aliases);
  if (aliases) plan = link::bind_aliases(plan, *aliases, universe);
  std::optional<link::ArchivePlan> archives;
  if (!manifest.archives.empty()) {
    // Archive members are looked up by file name; LPL objects shadow App
    // objects of the same name because archives package the portable layer.
    std::vector<link::ObjectDesc> by_lpl = manifest.lpl_pool;
    by_lpl.insert(by_lpl.end(), manifest.app_pool.begin(), manifest.app_pool.end());
    by_lpl.insert(by_lpl.end(), manifest.roots.begin(), manifest.roots.end());
    archives = link::plan_archives(manifest.archives, by_lpl);
    plan.archives = archives->archives;
  }
  const auto report = link::validate_plan(plan, universe);
  ordered_json j = link::plan_to_json(plan, report);
  if (archives) {
    ordered_json prov = ordered_json::object();
    for (const auto& [sym, member] : archives->providers) prov[sym] = member;
    j["archive_providers"] = prov;
  }
  if (!a.oracle.empty()) {
    const fs::path scratch = fs::path(c.out_dir.empty() ? fs::temp_directory_path().string() : c.out_dir) /
                             "candidate_configs.txt";
    const auto selected = link::select_configs(
        manifest.configs, [&](const link::ConfigSet& cs) { return run_oracle(a.oracle, cs, scratch); });
    ordered_json cfg = ordered_json::array();
    for (const auto& [k, v] : selected) cfg.push_back({{"key", k}, {"value", v}});
    j["selected_configs"] = cfg;
  }
  const std::string text = dump(j);
  if (!c.out_dir.empty()) write_file(fs::path(c.out_dir) / "plan.json", text);
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string program;
  std::string corpus;
  std::vector<std::string> roots;
  bool no_calibrate = false;
};

int cmd_report(const Common& c, const ReportArgs& a, const Toggles& t, const LimitFlags& lf,
               std::ostream& out) {
  const auto ip = load_instrumented(a.program, t, c.seed);
  const auto image = vm::compile_image(ip);
  const vm::Limits limits = lf.apply({fuzz::kFuzzInstructionBudget, 256});
  fuzz::Campaign camp;
  if (!a.no_calibrate) camp.disabled_isrs = vm::calibrate_isrs(image, limits);
  for (const auto& input : read_seed_dir(a.corpus)) {
    camp.bitmap |= vm::run_program(image, input, limits, camp.disabled_isrs).coverage;
    ++camp.executions;
  }
  const auto roots = a.roots.empty() ? fuzz::default_roots(ip.program) : a.roots;
  const auto cov = fuzz::coverage_report(camp, ip, roots);
  ordered_json j;
  j["inputs"] = camp.executions;
  j["unique_blocks"] = cov.unique_blocks;
  j["triggered_pct"] = cov.triggered_pct;
  j["functions"] = ordered_json::array();
  for (const auto& f : cov.functions) {
    j["functions"].push_back(
        {{"fn", f.function}, {"blocks_total", f.blocks_total}, {"blocks_hit", f.blocks_hit}});
  }
  if (!c.out_dir.empty()) {
    write_file(fs::path(c.out_dir) / "coverage.csv", fuzz::coverage_csv(cov));
    write_file(fs::path(c.out_dir) / "cdf.csv", fuzz::cdf_csv(cov));
    write_file(fs::path(c.out_dir) / "coverage.json", dump(j));
  }
  if (c.json) {
    out << dump(j);
  } else {
    out << fuzz::coverage_csv(cov);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- errors

struct ErrorInfo {
  std::string kind;
  std::string message;
  int code = kExitInternal;
  int line = 0;
  int column = 0;
};

ErrorInfo classify(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const fir::SyntaxError& e) {
    return {"SyntaxError", e.what(), kExitUsage, e.line(), e.column()};
  } catch (const fir::ParseError& e) {
    return {"SemanticError", e.what(), kExitUsage, e.line(), e.column()};
  } catch (const xform::PipelineConfigError& e) {
    return {"PipelineConfigError", e.what(), kExitUsage};
  } catch (const xform::ArtifactError& e) {
    return {"ArtifactError", e.what(), kExitUsage};
  } catch (const mmio::SvdFormatError& e) {
    return {"SvdFormatError", e.what(), kExitUsage};
  } catch (const link::ManifestError& e) {
    return {"ManifestError", e.what(), kExitUsage};
  } catch (const link::LinkError& e) {
    return {"LinkError", e.what(), kExitUsage};
  } catch (const fuzz::NoBufferParams& e) {
    return {"NoBufferParams", e.what(), kExitUsage};
  } catch (const fuzz::SpecMismatch& e) {
    return {"SpecMismatch", e.what(), kExitUsage};
  } catch (const fuzz::BudgetZero& e) {
    return {"BudgetZero", e.what(), kExitUsage};
  } catch (const UsageError& e) {
    return {"UsageError", e.what(), kExitUsage};
  } catch (const std::invalid_argument& e) {
    return {"InvalidArgument", e.what(), kExitUsage};
  } catch (const std::exception& e) {
    return {"InternalError", e.what(), kExitInternal};
  } catch (...) {
    return {"InternalError", "unknown exception", kExitInternal};
  }
}

void report_error(const ErrorInfo& e, bool json, std::ostream& err) {
  if (json) {
    ordered_json j;
    j["error"] = e.kind;
    j["message"] = e.message;
    if (e.line) {
      j["line"] = e.line;
      j["column"] = e.column;
    }
    j["exit_code"] = e.code;
    err << j.dump() << "\n";
  } else {
    err << "rehost: ";
    if (e.line) err << e.line << ":" << e.column << ": ";
    err << e.message << "\n";
  }
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out_dir, "Output directory");
  sub->add_option("--seed", c.seed, "RNG seed for fuzzing and assembly elision");
  sub->add_flag("--json", c.json, "Machine-readable output and errors");
}

void add_toggles(CLI::App* sub, Toggles& t) {
  sub->add_flag("--no-mmio", t.no_mmio, "Skip MMIO instrumentation (requires --no-weaken)");
  sub->add_flag("--no-weaken", t.no_weaken, "Skip condition weakening");
  sub->add_flag("--no-dispatcher", t.no_dispatcher, "Do not inject the interrupt dispatcher");
  sub->add_flag("--no-asm-elide", t.no_asm_elide, "Keep inline assembly (outputs read as 0)");
}

void add_limits(CLI::App* sub, LimitFlags& l) {
  sub->add_option("--budget", l.budget, "Instruction budget per execution");
  sub->add_option("--max-depth", l.max_depth, "Maximum call depth");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rehosting, instrumentation and fuzzing for FIR firmware models", "rehost"};
  app.require_subcommand(1);

  Common common;
  Toggles toggles;
  LimitFlags limits;
  AnalyzeArgs analyze_args;
  std::string instrument_program;
  RunArgs run_args;
  FuzzArgs fuzz_args;
  LinkArgs link_args;
  ReportArgs report_args;

  auto* analyze = app.add_subcommand("analyze", "Derive the MMIO map of a program");
  analyze->add_option("program", analyze_args.program, "FIR source")->required();
  analyze->add_option("--svd", analyze_args.svd, "Vendor peripheral description (JSON)");
  add_common(analyze, common);

  auto* instrument = app.add_subcommand("instrument", "Apply the transform pipeline");
  instrument->add_option("program", instrument_program, "FIR source")->required();
  add_common(instrument, common);
  add_toggles(instrument, toggles);

  auto* run_cmd = app.add_subcommand("run", "Execute one input and print the report");
  run_cmd->add_option("program", run_args.program, "FIR source or instrumented artifact")->required();
  run_cmd->add_option("--input", run_args.input, "Input file")->required();
  run_cmd->add_flag("--no-calibrate", run_args.no_calibrate, "Keep every interrupt handler enabled");
  add_common(run_cmd, common);
  add_toggles(run_cmd, toggles);
  add_limits(run_cmd, limits);

  auto add_fuzz_flags = [&](CLI::App* sub) {
    auto* execs = sub->add_option("--execs", fuzz_args.execs, "Execution budget (default 10000)");
    auto* secs = sub->add_option("--seconds", fuzz_args.seconds, "Wall-clock budget");
    execs->excludes(secs);
    sub->add_option("--workers", fuzz_args.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seeds", fuzz_args.seeds, "Directory of seed inputs");
    sub->add_flag("--no-calibrate", fuzz_args.no_calibrate, "Skip interrupt handler calibration");
    add_common(sub, common);
    add_toggles(sub, toggles);
    add_limits(sub, limits);
  };
  auto* fuzz_cmd = app.add_subcommand("fuzz", "Fuzz the whole program");
  fuzz_cmd->add_option("program", fuzz_args.program, "FIR source or instrumented artifact")->required();
  add_fuzz_flags(fuzz_cmd);

  auto* fuzz_fn = app.add_subcommand("fuzz-fn", "Fuzz one function through a synthesized harness");
  fuzz_fn->add_option("function", fuzz_args.function, "Function to fuzz")->required();
  fuzz_fn->add_option("program", fuzz_args.program, "FIR source")->required();
  add_fuzz_flags(fuzz_fn);

  auto* linkplan = app.add_subcommand("linkplan", "Plan a link against the portable layer");
  linkplan->add_option("--manifest", link_args.manifest, "Object manifest (JSON)")->required();
  linkplan->add_option("--oracle", link_args.oracle,
                       "Build command run as `CMD FILE` per candidate config set; exit 0 accepts");
  add_common(linkplan, common);

  auto* report = app.add_subcommand("report", "Coverage report for a corpus directory");
  report->add_option("program", report_args.program, "FIR source or instrumented artifact")->required();
  report->add_option("--corpus", report_args.corpus, "Corpus directory")->required();
  report->add_option("--root", report_args.roots, "Reachability root (repeatable)");
  report->add_flag("--no-calibrate", report_args.no_calibrate, "Keep every interrupt handler enabled");
  add_common(report, common);
  add_toggles(report, toggles);
  add_limits(report, limits);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const bool json = std::find(args.begin(), args.end(), "--json") != args.end();
    report_error({"UsageError", e.what(), kExitUsage}, json, err);
    return kExitUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(common, analyze_args, out);
    if (instrument->parsed()) return cmd_instrument(common, instrument_program, toggles, out);
    if (run_cmd->parsed()) return cmd_run(common, run_args, toggles, limits, out);
    if (fuzz_cmd->parsed()) return cmd_fuzz(common, fuzz_args, toggles, limits, out);
    if (fuzz_fn->parsed()) return cmd_fuzz_fn(common, fuzz_args, toggles, limits, out);
    if (linkplan->parsed()) return cmd_linkplan(common, link_args, out);
    if (report->parsed()) return cmd_report(common, report_args, toggles, limits, out);
  } catch (...) {
    const auto info = classify(std::current_exception());
    report_error(info, common.json, err);
    return info.code;
  }
  return kExitInternal;
}

}  // namespace rehost::cli
