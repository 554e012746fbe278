#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rehost/fir/ast.hpp"
#include "rehost/fir/layout.hpp"
#include "rehost/mmio/mmio_map.hpp"
#include "rehost/xform/instrumented.hpp"

namespace rehost::vm {

// Resolved form of a FIR program: names become slot indices, constant or
// global addresses, and function indices. Built once, shared read-only by
// every Vm executing the same artifact.

struct CExpr {
  enum class Kind : uint8_t { kConst, kLocal, kBinary };
  Kind kind = Kind::kConst;
  fir::BinOp op = fir::BinOp::kAdd;
  uint32_t value = 0;
  int32_t slot = -1;
  int32_t lhs = -1;
  int32_t rhs = -1;
};

enum class Builtin : int8_t { kNone = -1, kCopy, kYield, kInput, kIsrEnabled, kMmioLoad, kMmioStore };

// A buffer operand: a local slot holding a buffer reference, or a global buffer.
struct CBuffer {
  int32_t slot = -1;
  uint32_t base = 0;
  uint32_t elements = 0;
};

struct CInstr {
  fir::Instruction::Op op = fir::Instruction::Op::kHalt;
  fir::BinOp binop = fir::BinOp::kAdd;
  uint8_t width = 4;
  bool has_value = false;
  bool weakened = false;
  int32_t dst = -1;
  int32_t a = -1;  // expression index
  int32_t b = -1;
  Builtin builtin = Builtin::kNone;
  int32_t callee = -1;  // function index for user calls
  // Expression index per argument, or an index into buffer_args when
  // arg_is_buffer is set.
  std::vector<int32_t> args;
  std::vector<bool> arg_is_buffer;
  std::vector<CBuffer> buffer_args;
  CBuffer buffer;
  uint32_t target = 0;
  uint32_t else_target = 0;
  std::vector<int32_t> outputs;  // kAsm
};

struct CBlock {
  std::vector<CInstr> instrs;
  int32_t probe = -1;
};

struct CFunction {
  std::string name;
  uint32_t param_count = 0;
  std::vector<int32_t> param_slots;
  std::vector<bool> param_is_buffer;
  uint32_t slot_count = 0;
  std::vector<std::string> slot_names;
  std::vector<CBlock> blocks;
  bool is_isr = false;
};

struct CTask {
  std::string name;
  uint32_t priority = 0;
  int32_t function = -1;
};

struct Image {
  std::vector<CFunction> functions;
  std::vector<CExpr> exprs;
  std::vector<CTask> tasks;
  std::vector<int32_t> vector_table;  // function indices
  int32_t entry = -1;
  fir::MemoryLayout layout;
  mmio::MmioMap mmio_map;
  // (address, initial word) for every global word and buffer element.
  std::vector<std::pair<uint32_t, uint32_t>> initial_words;

  int32_t function_index(std::string_view name) const;
};

std::shared_ptr<const Image> compile_image(const xform::InstrumentedProgram& ip,
                                           const fir::MemoryLayout& layout);
std::shared_ptr<const Image> compile_image(const xform::InstrumentedProgram& ip);

}  // namespace rehost::vm
