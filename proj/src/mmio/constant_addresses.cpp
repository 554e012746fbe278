#include "rehost/mmio/constant_addresses.hpp"

#include <algorithm>
#include <set>

namespace rehost::mmio {

using fir::Expr;
using fir::Instruction;

std::optional<uint32_t> fold_constant(const Expr& e, const fir::Program& p,
                                      const fir::MemoryLayout& layout,
                                      const std::map<std::string, uint32_t>& locals) {
  switch (e.kind) {
    case Expr::Kind::kInt:
      return e.value;
    case Expr::Kind::kName: {
      if (auto it = locals.find(e.name); it != locals.end()) return it->second;
      if (auto it = p.constants.find(e.name); it != p.constants.end()) return it->second;
      if (auto it = layout.globals.find(e.name); it != layout.globals.end()) {
        return it->second.address;
      }
      return std::nullopt;
    }
    case Expr::Kind::kBinary: {
      auto a = fold_constant(e.operands[0], p, layout, locals);
      auto b = fold_constant(e.operands[1], p, layout, locals);
      if (!a || !b) return std::nullopt;
      if ((e.op == fir::BinOp::kDiv || e.op == fir::BinOp::kMod) && *b == 0) return std::nullopt;
      return fir::eval_binop(e.op, *a, *b);
    }
  }
  return std::nullopt;
}

std::map<std::string, uint32_t> constant_locals(const fir::Function& fn, const fir::Program& p,
                                                const fir::MemoryLayout& layout) {
  std::map<std::string, int> def_count;
  for (const auto& prm : fn.params) def_count[prm.name] += 2;  // params never fold
  for (const auto& bb : fn.blocks) {
    for (const auto& ins : bb.instructions) {
      if (!ins.dst.empty()) ++def_count[ins.dst];
      for (const auto& o : ins.outputs) ++def_count[o];
    }
  }

  std::map<std::string, uint32_t> out;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& bb : fn.blocks) {
      for (const auto& ins : bb.instructions) {
        if (ins.dst.empty() || def_count[ins.dst] != 1 || out.contains(ins.dst)) continue;
        std::optional<uint32_t> v;
        if (ins.op == Instruction::Op::kLet) {
          v = fold_constant(ins.a, p, layout, out);
        } else if (ins.op == Instruction::Op::kBinOp) {
          v = fold_constant(Expr::binary(ins.binop, ins.a, ins.b), p, layout, out);
        }
        if (v) {
          out[ins.dst] = *v;
          changed = true;
        }
      }
    }
  }
  return out;
}

namespace {

bool in_any_segment(const fir::MemoryLayout& layout, uint32_t addr) {
  if (addr >= fir::kReservedLo && addr < fir::kReservedHi) return true;
  return layout.segment_for(addr) != nullptr;
}

}  // namespace

std::vector<uint32_t> collect_constant_addresses(const fir::Program& p,
                                                 const fir::MemoryLayout& layout) {
  std::set<uint32_t> found;
  for (const auto& [name, fn] : p.functions) {
    const auto locals = constant_locals(fn, p, layout);
    auto consider = [&](const Expr& addr) {
      auto c = fold_constant(addr, p, layout, locals);
      if (c && *c >= kMinDeviceAddress && !in_any_segment(layout, *c)) found.insert(*c);
    };
    for (const auto& bb : fn.blocks) {
      for (const auto& ins : bb.instructions) {
        if (ins.op == Instruction::Op::kLoad || ins.op == Instruction::Op::kStore) {
          consider(ins.a);
        } else if (ins.op == Instruction::Op::kCall && !ins.args.empty() &&
                   (ins.callee == fir::builtin::kMmioLoad ||
                    ins.callee == fir::builtin::kMmioStore)) {
          consider(ins.args[0]);
        }
      }
    }
  }
  return {found.begin(), found.end()};
}

}  // namespace rehost::mmio
