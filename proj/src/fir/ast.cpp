#include "rehost/fir/ast.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace rehost::fir {

namespace {

struct OpInfo {
  BinOp op;
  const char* mnemonic;
  const char* infix;
};

constexpr std::array<OpInfo, 15> kOps = {{
    {BinOp::kAdd, "add", "+"},
    {BinOp::kSub, "sub", "-"},
    {BinOp::kMul, "mul", "*"},
    {BinOp::kDiv, "div", "/"},
    {BinOp::kMod, "mod", "%"},
    {BinOp::kAnd, "and", "&"},
    {BinOp::kOr, "or", "|"},
    {BinOp::kXor, "xor", "^"},
    {BinOp::kShl, "shl", "<<"},
    {BinOp::kShr, "shr", ">>"},
    {BinOp::kEq, "eq", nullptr},
    {BinOp::kNe, "ne", nullptr},
    {BinOp::kUlt, "ult", nullptr},
    {BinOp::kUle, "ule", nullptr},
    {BinOp::kSlt, "slt", nullptr},
}};

}  // namespace

const char* binop_mnemonic(BinOp op) {
  return kOps[static_cast<size_t>(op)].mnemonic;
}

const char* binop_infix(BinOp op) { return kOps[static_cast<size_t>(op)].infix; }

std::optional<BinOp> binop_from_mnemonic(std::string_view s) {
  for (const auto& info : kOps) {
    if (s == info.mnemonic) return info.op;
  }
  return std::nullopt;
}

uint32_t eval_binop(BinOp op, uint32_t a, uint32_t b) {
  switch (op) {
    case BinOp::kAdd: return a + b;
    case BinOp::kSub: return a - b;
    case BinOp::kMul: return a * b;
    case BinOp::kDiv: return a / b;
    case BinOp::kMod: return a % b;
    case BinOp::kAnd: return a & b;
    case BinOp::kOr: return a | b;
    case BinOp::kXor: return a ^ b;
    case BinOp::kShl: return b >= 32 ? 0u : a << b;
    case BinOp::kShr: return b >= 32 ? 0u : a >> b;
    case BinOp::kEq: return a == b ? 1u : 0u;
    case BinOp::kNe: return a != b ? 1u : 0u;
    case BinOp::kUlt: return a < b ? 1u : 0u;
    case BinOp::kUle: return a <= b ? 1u : 0u;
    case BinOp::kSlt:
      return static_cast<int32_t>(a) < static_cast<int32_t>(b) ? 1u : 0u;
  }
  return 0;
}

Expr Expr::integer(uint32_t v) {
  Expr e;
  e.kind = Kind::kInt;
  e.value = v;
  return e;
}

Expr Expr::ref(std::string n) {
  Expr e;
  e.kind = Kind::kName;
  e.name = std::move(n);
  return e;
}

Expr Expr::binary(BinOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = Kind::kBinary;
  e.op = op;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

const GlobalDecl* Program::find_global(std::string_view name) const {
  for (const auto& g : globals) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

const Function* Program::find_function(std::string_view name) const {
  auto it = functions.find(std::string(name));
  return it == functions.end() ? nullptr : &it->second;
}

bool is_builtin(std::string_view callee) {
  return callee == builtin::kCopy || callee == builtin::kYield ||
         callee == builtin::kInput || callee == builtin::kIsrEnabled ||
         callee == builtin::kMmioLoad || callee == builtin::kMmioStore;
}

std::vector<std::string> collect_locals(const Function& fn) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& n) {
    if (!n.empty() && seen.insert(n).second) out.push_back(n);
  };
  for (const auto& p : fn.params) add(p.name);
  for (const auto& bb : fn.blocks) {
    for (const auto& ins : bb.instructions) {
      add(ins.dst);
      for (const auto& o : ins.outputs) add(o);
    }
  }
  return out;
}

}  // namespace rehost::fir
