#include "rehost/xform/passes.hpp"

#include <algorithm>
#include <random>

#include "rehost/fir/layout.hpp"
#include "rehost/fir/parser.hpp"
#include "rehost/mmio/constant_addresses.hpp"

namespace rehost::xform {

using fir::BasicBlock;
using fir::Expr;
using fir::Function;
using fir::Instruction;
using fir::Program;
using Op = fir::Instruction::Op;

namespace {

Instruction make_let(std::string dst, Expr e) {
  Instruction ins;
  ins.op = Op::kLet;
  ins.dst = std::move(dst);
  ins.a = std::move(e);
  return ins;
}

Instruction make_call(std::string dst, std::string_view callee, std::vector<Expr> args) {
  Instruction ins;
  ins.op = Op::kCall;
  ins.dst = std::move(dst);
  ins.callee = std::string(callee);
  ins.args = std::move(args);
  return ins;
}

Instruction make_binop(std::string dst, fir::BinOp op, Expr a, Expr b) {
  Instruction ins;
  ins.op = Op::kBinOp;
  ins.dst = std::move(dst);
  ins.binop = op;
  ins.a = std::move(a);
  ins.b = std::move(b);
  return ins;
}

Instruction make_branch(std::string cond, uint32_t t, uint32_t e) {
  Instruction ins;
  ins.op = Op::kBranch;
  ins.a = Expr::ref(std::move(cond));
  ins.target = t;
  ins.else_target = e;
  return ins;
}

Instruction make_jump(uint32_t t) {
  Instruction ins;
  ins.op = Op::kJump;
  ins.target = t;
  return ins;
}

}  // namespace

Program elide_asm(const Program& p, uint64_t seed) {
  Program out = p;
  std::mt19937_64 rng(seed);
  for (auto& [name, fn] : out.functions) {
    for (auto& bb : fn.blocks) {
      std::vector<Instruction> next;
      next.reserve(bb.instructions.size());
      for (auto& ins : bb.instructions) {
        if (ins.op != Op::kAsm) {
          next.push_back(std::move(ins));
          continue;
        }
        for (const auto& o : ins.outputs) {
          next.push_back(make_let(o, Expr::integer(static_cast<uint32_t>(rng() & 1u))));
        }
      }
      bb.instructions = std::move(next);
    }
  }
  return out;
}

Program instrument_mmio(const Program& p, const mmio::MmioMap& m) {
  Program out = p;
  for (auto& [name, fn] : out.functions) {
    for (auto& bb : fn.blocks) {
      for (auto& ins : bb.instructions) {
        if (ins.op == Op::kLoad) {
          ins = make_call(ins.dst, fir::builtin::kMmioLoad,
                          {ins.a, Expr::integer(ins.width)});
        } else if (ins.op == Op::kStore) {
          ins = make_call("", fir::builtin::kMmioStore,
                          {ins.a, ins.b, Expr::integer(ins.width)});
        }
      }
    }
  }
  return out;
}

WeakenResult weaken_conditions(const Program& p, const TaintSummary& summaries) {
  WeakenResult r{p, {}};
  for (auto& [name, fn] : r.program.functions) {
    for (uint32_t b = 0; b < fn.blocks.size(); ++b) {
      auto& ins = fn.blocks[b].instructions;
      for (uint32_t i = 0; i < ins.size(); ++i) {
        if (ins[i].op != Op::kBranch) continue;
        if (ins[i].weakened || expr_possibly_tainted(summaries, p, name, ins[i].a)) {
          ins[i].weakened = true;
          r.weakened.insert({name, b, i});
        }
      }
    }
  }
  return r;
}

Program inject_dispatcher(const Program& p) {
  const std::string name(kDispatcherName);
  const bool present = p.functions.count(name) != 0 ||
                       std::any_of(p.tasks.begin(), p.tasks.end(),
                                   [&](const fir::TaskDecl& t) { return t.name == name; });
  if (p.vector_table.empty() || present) return p;

  Program out = p;
  const auto n = static_cast<uint32_t>(p.vector_table.size());
  const uint32_t yield_block = 1 + 3 * n;

  Function fn;
  fn.name = name;
  fn.blocks.resize(yield_block + 1);
  fn.blocks[0].instructions = {
      make_call("__sel", fir::builtin::kInput, {Expr::integer(1)}),
      make_binop("__k", fir::BinOp::kMod, Expr::ref("__sel"), Expr::integer(n)),
      make_jump(1),
  };
  for (uint32_t k = 0; k < n; ++k) {
    const uint32_t test = 1 + 3 * k;
    const uint32_t guard = test + 1;
    const uint32_t call = test + 2;
    const uint32_t next = k + 1 < n ? test + 3 : yield_block;
    fn.blocks[test].instructions = {
        make_binop("__hit", fir::BinOp::kEq, Expr::ref("__k"), Expr::integer(k)),
        make_branch("__hit", guard, next),
    };
    fn.blocks[guard].instructions = {
        make_call("__on", fir::builtin::kIsrEnabled, {Expr::integer(k)}),
        make_branch("__on", call, yield_block),
    };
    fn.blocks[call].instructions = {
        make_call("", p.vector_table[k], {}),
        make_jump(yield_block),
    };
  }
  fn.blocks[yield_block].instructions = {
      make_call("", fir::builtin::kYield, {}),
      make_jump(0),
  };
  out.functions.emplace(name, std::move(fn));

  uint32_t top = 0;
  for (const auto& t : p.tasks) top = std::max(top, t.priority);
  out.tasks.push_back({name, top + 1, name});
  return out;
}

InstrumentedProgram insert_coverage_probes(StagedProgram staged) {
  static constexpr std::string_view kOrder[] = {kPassElideAsm, kPassInstrumentMmio, kPassWeaken,
                                                kPassDispatcher};
  if (staged.passes.size() != std::size(kOrder)) {
    throw PassOrderError("coverage probes need the four preceding passes recorded, got " +
                         std::to_string(staged.passes.size()));
  }
  for (size_t i = 0; i < std::size(kOrder); ++i) {
    if (staged.passes[i].name != kOrder[i]) {
      throw PassOrderError("pass " + std::to_string(i) + " is '" + staged.passes[i].name +
                           "', expected '" + std::string(kOrder[i]) + "'");
    }
  }

  InstrumentedProgram ip;
  for (const auto& [name, fn] : staged.program.functions) {
    for (uint32_t b = 0; b < fn.blocks.size(); ++b) {
      ip.block_table.push_back({name, b, probe_id(name, b)});
    }
  }
  const bool has_dispatcher =
      std::any_of(staged.program.tasks.begin(), staged.program.tasks.end(),
                  [](const fir::TaskDecl& t) { return t.name == kDispatcherName; });
  ip.dispatcher_task = has_dispatcher ? std::string(kDispatcherName) : std::string();
  ip.program = std::move(staged.program);
  ip.mmio_map = std::move(staged.mmio_map);
  ip.weakened_branches = std::move(staged.weakened);
  ip.passes_applied = std::move(staged.passes);
  ip.passes_applied.push_back({std::string(kPassProbes), true});
  return ip;
}

void validate_options(const PipelineOptions& opts) {
  if (opts.weaken && !opts.mmio) {
    throw PipelineConfigError(
        "condition weakening needs MMIO instrumentation for its taint sources; "
        "disable weakening too");
  }
}

InstrumentedProgram run_pipeline(const Program& p, const PipelineOptions& opts) {
  validate_options(opts);
  StagedProgram st;
  st.program = p;

  st.program = opts.elide_asm ? elide_asm(st.program, opts.asm_seed) : st.program;
  st.passes.push_back({std::string(kPassElideAsm), opts.elide_asm});

  if (opts.mmio) {
    const auto layout = fir::layout_memory(st.program);
    const auto addrs = mmio::collect_constant_addresses(st.program, layout);
    st.mmio_map = mmio::build_mmio_map(addrs);
    st.program = instrument_mmio(st.program, st.mmio_map);
  }
  st.passes.push_back({std::string(kPassInstrumentMmio), opts.mmio});

  if (opts.weaken) {
    auto w = weaken_conditions(st.program, compute_taint_summaries(st.program));
    st.program = std::move(w.program);
    st.weakened = std::move(w.weakened);
  }
  st.passes.push_back({std::string(kPassWeaken), opts.weaken});

  if (opts.dispatcher) st.program = inject_dispatcher(st.program);
  st.passes.push_back({std::string(kPassDispatcher), opts.dispatcher});

  fir::validate_program(st.program);
  return insert_coverage_probes(std::move(st));
}

}  // namespace rehost::xform
