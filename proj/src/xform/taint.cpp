#include "rehost/xform/taint.hpp"

#include <vector>

namespace rehost::xform {

using fir::Expr;
using fir::Function;
using fir::Instruction;
using fir::Program;
using Op = fir::Instruction::Op;

namespace {

using LocalMasks = std::map<std::string, TaintMask>;

TaintMask param_bit(size_t i) { return i < kSourceBit ? (TaintMask{1} << i) : kSource; }

TaintMask expr_mask(const Expr& e, const LocalMasks& locals) {
  switch (e.kind) {
    case Expr::Kind::kInt:
      return 0;
    case Expr::Kind::kName: {
      auto it = locals.find(e.name);
      return it == locals.end() ? 0 : it->second;
    }
    case Expr::Kind::kBinary:
      return expr_mask(e.operands[0], locals) | expr_mask(e.operands[1], locals);
  }
  return 0;
}

class Analyzer {
 public:
  explicit Analyzer(const Program& p) : p_(p) {
    for (const auto& [name, fn] : p.functions) {
      auto& m = masks_[name];
      for (size_t i = 0; i < fn.params.size(); ++i) m[fn.params[i].name] = param_bit(i);
      for (const auto& l : fir::collect_locals(fn)) m.try_emplace(l, 0);
      out_.functions[name] = {};
      out_.tainted_params[name] = 0;
    }
  }

  TaintSummary run() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [name, fn] : p_.functions) changed |= visit(fn);
    }
    for (const auto& [name, m] : masks_) {
      auto& set = out_.tainted_locals[name];
      for (const auto& [local, mask] : m) {
        if (resolved(name, mask)) set.insert(local);
      }
    }
    return std::move(out_);
  }

 private:
  bool resolved(const std::string& fn, TaintMask m) const {
    return (m & kSource) != 0 || (m & out_.tainted_params.at(fn)) != 0;
  }

  static bool join(TaintMask& slot, TaintMask add) {
    TaintMask next = slot | add;
    if (next == slot) return false;
    slot = next;
    return true;
  }

  TaintMask call_result(const Instruction& ins, const LocalMasks& locals) const {
    const std::string& c = ins.callee;
    if (c == fir::builtin::kMmioLoad) return kSource;
    if (fir::is_builtin(c)) return 0;
    const auto& sum = out_.functions.at(c);
    TaintMask r = sum.returns_source ? kSource : 0;
    for (size_t i = 0; i < ins.args.size(); ++i) {
      if (sum.param_to_return & param_bit(i)) r |= expr_mask(ins.args[i], locals);
    }
    return r;
  }

  bool visit(const Function& fn) {
    bool changed = false;
    auto& locals = masks_[fn.name];
    TaintMask ret = 0;
    for (const auto& bb : fn.blocks) {
      for (const auto& ins : bb.instructions) {
        switch (ins.op) {
          case Op::kLet:
            changed |= join(locals[ins.dst], expr_mask(ins.a, locals));
            break;
          case Op::kBinOp:
            changed |= join(locals[ins.dst], expr_mask(ins.a, locals) | expr_mask(ins.b, locals));
            break;
          case Op::kLoad:
            changed |= join(locals[ins.dst], kSource);
            break;
          case Op::kIndex:
            if (out_.memory_tainted) changed |= join(locals[ins.dst], kSource);
            break;
          case Op::kStore:
          case Op::kIndexStore:
            if (!out_.memory_tainted && resolved(fn.name, expr_mask(ins.b, locals))) {
              out_.memory_tainted = true;
              changed = true;
            }
            break;
          case Op::kCall:
            changed |= visit_call(fn, ins, locals);
            break;
          case Op::kReturn:
            if (ins.has_value) ret |= expr_mask(ins.a, locals);
            break;
          default:
            break;
        }
      }
    }
    auto& sum = out_.functions[fn.name];
    FunctionSummary next{sum.param_to_return | (ret & ~kSource),
                         sum.returns_source || (ret & kSource) != 0};
    if (!(next == sum)) {
      sum = next;
      changed = true;
    }
    return changed;
  }

  bool visit_call(const Function& fn, const Instruction& ins, LocalMasks& locals) {
    bool changed = false;
    if (ins.callee == fir::builtin::kMmioStore && ins.args.size() >= 2) {
      if (!out_.memory_tainted && resolved(fn.name, expr_mask(ins.args[1], locals))) {
        out_.memory_tainted = true;
        changed = true;
      }
    }
    if (!fir::is_builtin(ins.callee)) {
      TaintMask& callee_params = out_.tainted_params[ins.callee];
      for (size_t i = 0; i < ins.args.size(); ++i) {
        if (resolved(fn.name, expr_mask(ins.args[i], locals))) {
          changed |= join(callee_params, param_bit(i));
        }
      }
    }
    if (!ins.dst.empty()) changed |= join(locals[ins.dst], call_result(ins, locals));
    return changed;
  }

  const Program& p_;
  std::map<std::string, LocalMasks> masks_;
  TaintSummary out_;
};

}  // namespace

bool TaintSummary::local_tainted(const std::string& fn, const std::string& local) const {
  auto it = tainted_locals.find(fn);
  return it != tainted_locals.end() && it->second.count(local) != 0;
}

TaintSummary compute_taint_summaries(const Program& p) { return Analyzer(p).run(); }

bool expr_possibly_tainted(const TaintSummary& s, const Program& p, const std::string& fn,
                           const Expr& cond) {
  switch (cond.kind) {
    case Expr::Kind::kInt:
      return false;
    case Expr::Kind::kName:
      return s.local_tainted(fn, cond.name);
    case Expr::Kind::kBinary:
      return expr_possibly_tainted(s, p, fn, cond.operands[0]) ||
             expr_possibly_tainted(s, p, fn, cond.operands[1]);
  }
  return false;
}

}  // namespace rehost::xform
