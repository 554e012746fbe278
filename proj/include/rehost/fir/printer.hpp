#pragma once

#include <string>

#include "rehost/fir/ast.hpp"

namespace rehost::fir {

// Canonical FIR text. parse_program(print_program(p)) == p for every valid p.
std::string print_program(const Program& p);
std::string print_expr(const Expr& e);
std::string print_instruction(const Instruction& ins);

// Structural dump used for golden files: one line per item, fully explicit.
std::string dump_ast(const Program& p);

}  // namespace rehost::fir
