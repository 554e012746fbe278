#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rehost::fir {

enum class BinOp : uint8_t {
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMod,
  kAnd,
  kOr,
  kXor,
  kShl,
  kShr,
  kEq,
  kNe,
  kUlt,
  kUle,
  kSlt,
};

// Mnemonic used by the `x = op a, b;` instruction form ("add", "ult", ...).
const char* binop_mnemonic(BinOp op);
std::optional<BinOp> binop_from_mnemonic(std::string_view s);
// Infix spelling for expression trees; nullptr for comparison ops, which only
// exist in the mnemonic form.
const char* binop_infix(BinOp op);

// Evaluates `a op b` with wrapping u32 semantics. Division and modulo by zero
// must be filtered by the caller. Shifts by >= 32 yield 0.
uint32_t eval_binop(BinOp op, uint32_t a, uint32_t b);

struct Expr {
  enum class Kind : uint8_t { kInt, kName, kBinary };

  Kind kind = Kind::kInt;
  uint32_t value = 0;
  std::string name;
  BinOp op = BinOp::kAdd;
  std::vector<Expr> operands;  // exactly two when kind == kBinary

  static Expr integer(uint32_t v);
  static Expr ref(std::string n);
  static Expr binary(BinOp op, Expr lhs, Expr rhs);

  bool is_name() const { return kind == Kind::kName; }
  bool operator==(const Expr&) const = default;
};

enum class ParamType : uint8_t { kWord, kBuffer };

struct Param {
  std::string name;
  ParamType type = ParamType::kWord;
  bool operator==(const Param&) const = default;
};

struct Instruction {
  enum class Op : uint8_t {
    kLet,         // dst = expr
    kLoad,        // dst = load<width> a
    kStore,       // store<width> a, b
    kBinOp,       // dst = binop a, b
    kCall,        // [dst =] call callee(args)
    kIndex,       // dst = buffer[a]
    kIndexStore,  // buffer[a] = b
    kAlloc,       // dst = alloc a
    kBranch,      // branch a, target, else_target
    kJump,        // jump target
    kReturn,      // return [a]
    kAsm,         // asm "text" -> outputs
    kAssert,      // assert a
    kHalt,
  };

  Op op = Op::kHalt;
  std::string dst;  // empty when the instruction defines nothing
  Expr a;
  Expr b;
  BinOp binop = BinOp::kAdd;
  uint8_t width = 4;
  std::string callee;
  std::vector<Expr> args;
  std::string buffer;
  uint32_t target = 0;
  uint32_t else_target = 0;
  bool has_value = false;  // kReturn with a value
  bool weakened = false;   // kBranch rewritten by condition weakening
  std::string text;        // kAsm
  std::vector<std::string> outputs;

  bool is_terminator() const {
    return op == Op::kBranch || op == Op::kJump || op == Op::kReturn ||
           op == Op::kHalt;
  }

  bool operator==(const Instruction&) const = default;
};

struct BasicBlock {
  std::vector<Instruction> instructions;
  bool operator==(const BasicBlock&) const = default;
};

struct Function {
  std::string name;
  std::vector<Param> params;
  std::vector<BasicBlock> blocks;
  bool is_isr = false;

  bool operator==(const Function&) const = default;
};

struct GlobalDecl {
  std::string name;
  // Element count for buffer globals; nullopt for a single word.
  std::optional<uint32_t> elements;
  uint32_t init = 0;

  bool is_buffer() const { return elements.has_value(); }
  uint32_t byte_size() const { return elements ? *elements * 4u : 4u; }
  bool operator==(const GlobalDecl&) const = default;
};

struct TaskDecl {
  std::string name;
  uint32_t priority = 0;
  std::string function;
  bool operator==(const TaskDecl&) const = default;
};

struct Program {
  std::map<std::string, uint32_t> constants;
  std::vector<GlobalDecl> globals;
  std::map<std::string, Function> functions;
  std::vector<TaskDecl> tasks;
  std::vector<std::string> vector_table;
  std::string entry;

  const GlobalDecl* find_global(std::string_view name) const;
  const Function* find_function(std::string_view name) const;
  bool operator==(const Program&) const = default;
};

// Runtime-provided callees. They are not FIR functions and never appear in
// the call graph.
namespace builtin {
inline constexpr std::string_view kCopy = "copy";
inline constexpr std::string_view kYield = "yield";
inline constexpr std::string_view kInput = "__input";
inline constexpr std::string_view kIsrEnabled = "__isr_enabled";
inline constexpr std::string_view kMmioLoad = "__mmio_load";
inline constexpr std::string_view kMmioStore = "__mmio_store";
}  // namespace builtin

bool is_builtin(std::string_view callee);

// Locals of a function: params plus every name written by an instruction.
std::vector<std::string> collect_locals(const Function& fn);

}  // namespace rehost::fir
