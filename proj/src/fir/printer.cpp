#include "rehost/fir/printer.hpp"

#include <cstdio>
#include <sstream>

namespace rehost::fir {

namespace {

std::string int_text(uint32_t v) {
  if (v < 4096) return std::to_string(v);
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%X", v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(c);
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string operand_text(const Expr& e) {
  if (e.kind == Expr::Kind::kBinary) return "(" + print_expr(e) + ")";
  return print_expr(e);
}

std::string width_suffix(uint8_t width) {
  return width == 4 ? "" : std::to_string(width);
}

std::string args_text(const std::vector<Expr>& args) {
  std::string out = "(";
  for (size_t k = 0; k < args.size(); ++k) {
    if (k) out += ", ";
    out += print_expr(args[k]);
  }
  return out + ")";
}

}  // namespace

std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kInt:
      return int_text(e.value);
    case Expr::Kind::kName:
      return e.name;
    case Expr::Kind::kBinary: {
      const char* infix = binop_infix(e.op);
      if (!infix) {
        // Comparisons have no infix spelling; they never come out of the parser.
        return std::string(binop_mnemonic(e.op)) + "?(" + print_expr(e.operands[0]) +
               ", " + print_expr(e.operands[1]) + ")";
      }
      return operand_text(e.operands[0]) + " " + infix + " " + operand_text(e.operands[1]);
    }
  }
  return {};
}

std::string print_instruction(const Instruction& ins) {
  using Op = Instruction::Op;
  switch (ins.op) {
    case Op::kLet:
      return ins.dst + " = " + print_expr(ins.a) + ";";
    case Op::kLoad:
      return ins.dst + " = load" + width_suffix(ins.width) + " " + print_expr(ins.a) + ";";
    case Op::kStore:
      return "store" + width_suffix(ins.width) + " " + print_expr(ins.a) + ", " +
             print_expr(ins.b) + ";";
    case Op::kBinOp:
      return ins.dst + " = " + binop_mnemonic(ins.binop) + " " + print_expr(ins.a) + ", " +
             print_expr(ins.b) + ";";
    case Op::kCall:
      return (ins.dst.empty() ? "" : ins.dst + " = ") + "call " + ins.callee +
             args_text(ins.args) + ";";
    case Op::kIndex:
      return ins.dst + " = " + ins.buffer + "[" + print_expr(ins.a) + "];";
    case Op::kIndexStore:
      return ins.buffer + "[" + print_expr(ins.a) + "] = " + print_expr(ins.b) + ";";
    case Op::kAlloc:
      return ins.dst + " = alloc " + print_expr(ins.a) + ";";
    case Op::kBranch:
      return std::string(ins.weakened ? "wbranch " : "branch ") + print_expr(ins.a) + ", b" +
             std::to_string(ins.target) + ", b" + std::to_string(ins.else_target) + ";";
    case Op::kJump:
      return "jump b" + std::to_string(ins.target) + ";";
    case Op::kReturn:
      return ins.has_value ? "return " + print_expr(ins.a) + ";" : "return;";
    case Op::kAsm: {
      std::string out = "asm " + quote(ins.text);
      for (size_t k = 0; k < ins.outputs.size(); ++k) {
        out += k ? ", " : " -> ";
        out += ins.outputs[k];
      }
      return out + ";";
    }
    case Op::kAssert:
      return "assert " + print_expr(ins.a) + ";";
    case Op::kHalt:
      return "halt;";
  }
  return {};
}

std::string print_program(const Program& p) {
  std::ostringstream os;
  for (const auto& [name, v] : p.constants) {
    os << "const " << name << " = " << int_text(v) << ";\n";
  }
  for (const auto& g : p.globals) {
    os << "global " << g.name;
    if (g.elements) os << "[" << *g.elements << "]";
    if (g.init) os << " = " << int_text(g.init);
    os << ";\n";
  }
  for (const auto& [name, fn] : p.functions) {
    os << "\nfn " << name << "(";
    for (size_t k = 0; k < fn.params.size(); ++k) {
      if (k) os << ", ";
      os << fn.params[k].name;
      if (fn.params[k].type == ParamType::kBuffer) os << ": buf";
    }
    os << ") {\n";
    for (size_t b = 0; b < fn.blocks.size(); ++b) {
      os << "b" << b << ":\n";
      for (const auto& ins : fn.blocks[b].instructions) {
        os << "  " << print_instruction(ins) << "\n";
      }
    }
    os << "}\n";
  }
  if (!p.tasks.empty() || !p.vector_table.empty()) os << "\n";
  for (const auto& t : p.tasks) {
    os << "task " << t.name << " priority " << t.priority << " calls " << t.function << ";\n";
  }
  if (!p.vector_table.empty()) {
    os << "vector { ";
    for (size_t k = 0; k < p.vector_table.size(); ++k) {
      if (k) os << ", ";
      os << p.vector_table[k];
    }
    os << " }\n";
  }
  os << "entry " << p.entry << ";\n";
  return os.str();
}

namespace {

const char* op_name(Instruction::Op op) {
  using Op = Instruction::Op;
  switch (op) {
    case Op::kLet: return "Let";
    case Op::kLoad: return "Load";
    case Op::kStore: return "Store";
    case Op::kBinOp: return "BinOp";
    case Op::kCall: return "Call";
    case Op::kIndex: return "Index";
    case Op::kIndexStore: return "IndexStore";
    case Op::kAlloc: return "Alloc";
    case Op::kBranch: return "Branch";
    case Op::kJump: return "Jump";
    case Op::kReturn: return "Return";
    case Op::kAsm: return "Asm";
    case Op::kAssert: return "Assert";
    case Op::kHalt: return "Halt";
  }
  return "?";
}

std::string dump_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kInt: return "Int(" + std::to_string(e.value) + ")";
    case Expr::Kind::kName: return "Name(" + e.name + ")";
    case Expr::Kind::kBinary:
      return std::string("Bin(") + binop_mnemonic(e.op) + ", " + dump_expr(e.operands[0]) +
             ", " + dump_expr(e.operands[1]) + ")";
  }
  return {};
}

}  // namespace

std::string dump_ast(const Program& p) {
  std::ostringstream os;
  for (const auto& [name, v] : p.constants) os << "Const " << name << " " << v << "\n";
  for (const auto& g : p.globals) {
    os << "Global " << g.name << " elements="
       << (g.elements ? std::to_string(*g.elements) : std::string("word")) << " init=" << g.init
       << "\n";
  }
  for (const auto& [name, fn] : p.functions) {
    os << "Function " << name << " isr=" << (fn.is_isr ? 1 : 0) << " params=[";
    for (size_t k = 0; k < fn.params.size(); ++k) {
      if (k) os << ",";
      os << fn.params[k].name << ":" << (fn.params[k].type == ParamType::kBuffer ? "Buffer" : "Word");
    }
    os << "]\n";
    for (size_t b = 0; b < fn.blocks.size(); ++b) {
      os << "  Block " << b << "\n";
      for (const auto& ins : fn.blocks[b].instructions) {
        os << "    " << op_name(ins.op);
        if (!ins.dst.empty()) os << " dst=" << ins.dst;
        switch (ins.op) {
          case Instruction::Op::kLoad:
          case Instruction::Op::kStore:
            os << " width=" << int(ins.width);
            break;
          case Instruction::Op::kBinOp:
            os << " op=" << binop_mnemonic(ins.binop);
            break;
          case Instruction::Op::kCall:
            os << " callee=" << ins.callee;
            for (const auto& a : ins.args) os << " arg=" << dump_expr(a);
            break;
          case Instruction::Op::kIndex:
          case Instruction::Op::kIndexStore:
            os << " buffer=" << ins.buffer;
            break;
          case Instruction::Op::kBranch:
            os << " then=" << ins.target << " else=" << ins.else_target
               << (ins.weakened ? " weakened" : "");
            break;
          case Instruction::Op::kJump:
            os << " target=" << ins.target;
            break;
          case Instruction::Op::kAsm:
            os << " text=" << quote(ins.text);
            for (const auto& o : ins.outputs) os << " out=" << o;
            break;
          default:
            break;
        }
        using Op = Instruction::Op;
        bool uses_a = ins.op != Op::kJump && ins.op != Op::kHalt && ins.op != Op::kAsm &&
                      ins.op != Op::kCall && !(ins.op == Op::kReturn && !ins.has_value);
        bool uses_b = ins.op == Op::kStore || ins.op == Op::kBinOp || ins.op == Op::kIndexStore;
        if (uses_a) os << " a=" << dump_expr(ins.a);
        if (uses_b) os << " b=" << dump_expr(ins.b);
        os << "\n";
      }
    }
  }
  for (const auto& t : p.tasks) {
    os << "Task " << t.name << " priority=" << t.priority << " fn=" << t.function << "\n";
  }
  os << "Vector [";
  for (size_t k = 0; k < p.vector_table.size(); ++k) os << (k ? "," : "") << p.vector_table[k];
  os << "]\n";
  os << "Entry " << p.entry << "\n";
  return os.str();
}

}  // namespace rehost::fir
