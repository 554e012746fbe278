#include "rehost/vm/image.hpp"

#include <map>
#include <stdexcept>

namespace rehost::vm {

using fir::Expr;
using fir::Instruction;
using Op = fir::Instruction::Op;

int32_t Image::function_index(std::string_view name) const {
  for (size_t i = 0; i < functions.size(); ++i) {
    if (functions[i].name == name) return static_cast<int32_t>(i);
  }
  return -1;
}

namespace {

Builtin builtin_of(std::string_view callee) {
  namespace b = fir::builtin;
  if (callee == b::kCopy) return Builtin::kCopy;
  if (callee == b::kYield) return Builtin::kYield;
  if (callee == b::kInput) return Builtin::kInput;
  if (callee == b::kIsrEnabled) return Builtin::kIsrEnabled;
  if (callee == b::kMmioLoad) return Builtin::kMmioLoad;
  if (callee == b::kMmioStore) return Builtin::kMmioStore;
  return Builtin::kNone;
}

class Compiler {
 public:
  Compiler(const xform::InstrumentedProgram& ip, const fir::MemoryLayout& layout)
      : p_(ip.program), ip_(ip) {
    img_.layout = layout;
    img_.mmio_map = ip.mmio_map;
  }

  Image run() {
    for (const auto& [name, fn] : p_.functions) {
      fn_index_[name] = static_cast<int32_t>(img_.functions.size());
      img_.functions.emplace_back().name = name;
    }
    std::map<std::pair<std::string, uint32_t>, uint16_t> probes;
    for (const auto& e : ip_.block_table) probes[{e.function, e.block}] = e.probe;

    for (const auto& [name, fn] : p_.functions) {
      compile_function(fn, img_.functions[fn_index_.at(name)], probes);
    }
    for (const auto& t : p_.tasks) img_.tasks.push_back({t.name, t.priority, fn_index_.at(t.function)});
    for (const auto& v : p_.vector_table) img_.vector_table.push_back(fn_index_.at(v));
    img_.entry = fn_index_.at(p_.entry);

    for (const auto& g : p_.globals) {
      const auto& slot = img_.layout.globals.at(g.name);
      const uint32_t words = g.elements.value_or(1);
      for (uint32_t i = 0; i < words; ++i) img_.initial_words.emplace_back(slot.address + 4 * i, g.init);
    }
    return std::move(img_);
  }

 private:
  void compile_function(const fir::Function& fn, CFunction& out,
                        const std::map<std::pair<std::string, uint32_t>, uint16_t>& probes) {
    slots_.clear();
    out.is_isr = fn.is_isr;
    out.param_count = static_cast<uint32_t>(fn.params.size());
    for (const auto& l : fir::collect_locals(fn)) slots_.try_emplace(l, static_cast<int32_t>(slots_.size()));
    for (const auto& prm : fn.params) {
      out.param_slots.push_back(slots_.at(prm.name));
      out.param_is_buffer.push_back(prm.type == fir::ParamType::kBuffer);
    }
    out.slot_count = static_cast<uint32_t>(slots_.size());
    out.slot_names.resize(slots_.size());
    for (const auto& [local, s] : slots_) out.slot_names[s] = local;
    for (uint32_t b = 0; b < fn.blocks.size(); ++b) {
      CBlock cb;
      if (auto it = probes.find({fn.name, b}); it != probes.end()) cb.probe = it->second;
      for (const auto& ins : fn.blocks[b].instructions) cb.instrs.push_back(compile_instr(ins));
      out.blocks.push_back(std::move(cb));
    }
  }

  int32_t slot_of(const std::string& name) const {
    auto it = slots_.find(name);
    return it == slots_.end() ? -1 : it->second;
  }

  int32_t compile_expr(const Expr& e) {
    CExpr c;
    switch (e.kind) {
      case Expr::Kind::kInt:
        c.value = e.value;
        break;
      case Expr::Kind::kName:
        if (int32_t s = slot_of(e.name); s >= 0) {
          c.kind = CExpr::Kind::kLocal;
          c.slot = s;
        } else if (auto it = p_.constants.find(e.name); it != p_.constants.end()) {
          c.value = it->second;
        } else if (auto g = img_.layout.globals.find(e.name); g != img_.layout.globals.end()) {
          c.value = g->second.address;
        } else {
          throw std::logic_error("unresolved name '" + e.name + "'");
        }
        break;
      case Expr::Kind::kBinary: {
        int32_t l = compile_expr(e.operands[0]);
        int32_t r = compile_expr(e.operands[1]);
        c.kind = CExpr::Kind::kBinary;
        c.op = e.op;
        c.lhs = l;
        c.rhs = r;
        break;
      }
    }
    img_.exprs.push_back(c);
    return static_cast<int32_t>(img_.exprs.size() - 1);
  }

  CBuffer compile_buffer(const std::string& name) const {
    CBuffer b;
    if (int32_t s = slot_of(name); s >= 0) {
      b.slot = s;
      return b;
    }
    const auto* g = p_.find_global(name);
    b.base = img_.layout.globals.at(name).address;
    b.elements = g->elements.value_or(1);
    return b;
  }

  CInstr compile_instr(const Instruction& ins) {
    CInstr c;
    c.op = ins.op;
    c.binop = ins.binop;
    c.width = ins.width;
    c.has_value = ins.has_value;
    c.weakened = ins.weakened;
    c.target = ins.target;
    c.else_target = ins.else_target;
    if (!ins.dst.empty()) c.dst = slot_of(ins.dst);
    switch (ins.op) {
      case Op::kLet:
      case Op::kLoad:
      case Op::kAlloc:
      case Op::kAssert:
      case Op::kBranch:
        c.a = compile_expr(ins.a);
        break;
      case Op::kReturn:
        if (ins.has_value) c.a = compile_expr(ins.a);
        break;
      case Op::kStore:
      case Op::kBinOp:
        c.a = compile_expr(ins.a);
        c.b = compile_expr(ins.b);
        break;
      case Op::kIndex:
        c.buffer = compile_buffer(ins.buffer);
        c.a = compile_expr(ins.a);
        break;
      case Op::kIndexStore:
        c.buffer = compile_buffer(ins.buffer);
        c.a = compile_expr(ins.a);
        c.b = compile_expr(ins.b);
        break;
      case Op::kCall: {
        c.builtin = builtin_of(ins.callee);
        const fir::Function* callee = nullptr;
        if (c.builtin == Builtin::kNone) {
          c.callee = fn_index_.at(ins.callee);
          callee = p_.find_function(ins.callee);
        }
        for (size_t i = 0; i < ins.args.size(); ++i) {
          bool buf = (callee && callee->params[i].type == fir::ParamType::kBuffer) ||
                     (c.builtin == Builtin::kCopy && i < 2);
          c.arg_is_buffer.push_back(buf);
          if (buf) {
            c.args.push_back(static_cast<int32_t>(c.buffer_args.size()));
            c.buffer_args.push_back(compile_buffer(ins.args[i].name));
          } else {
            c.args.push_back(compile_expr(ins.args[i]));
          }
        }
        break;
      }
      case Op::kAsm:
        for (const auto& o : ins.outputs) c.outputs.push_back(slot_of(o));
        break;
      case Op::kJump:
      case Op::kHalt:
        break;
    }
    return c;
  }

  const fir::Program& p_;
  const xform::InstrumentedProgram& ip_;
  Image img_;
  std::map<std::string, int32_t> fn_index_;
  std::map<std::string, int32_t> slots_;
};

}  // namespace

std::shared_ptr<const Image> compile_image(const xform::InstrumentedProgram& ip,
                                           const fir::MemoryLayout& layout) {
  return std::make_shared<const Image>(Compiler(ip, layout).run());
}

std::shared_ptr<const Image> compile_image(const xform::InstrumentedProgram& ip) {
  return compile_image(ip, fir::layout_memory(ip.program));
}

}  // namespace rehost::vm
