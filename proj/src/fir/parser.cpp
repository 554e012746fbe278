#include "rehost/fir/parser.hpp"

#include <cctype>
#include <map>
#include <set>
#include <tuple>

namespace rehost::fir {

namespace {

struct Pos {
  int line = 0;
  int column = 0;
};

// Positions recorded while parsing so that semantic errors found on the AST
// can still point at source text.
struct SourceMap {
  std::map<std::string, Pos> functions;
  std::map<std::tuple<std::string, size_t, size_t>, Pos> instructions;
  std::map<std::string, Pos> items;  // "task:NAME", "entry", "vector", "global:NAME"
};

enum class Tok : uint8_t { kIdent, kInt, kString, kPunct, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  uint32_t value = 0;
  Pos pos;
};

const std::set<std::string, std::less<>> kKeywords = {
    "const",  "global", "fn",     "task",   "priority", "calls",  "vector",
    "entry",  "load",   "load1",  "load2",  "load4",    "store",  "store1",
    "store2", "store4", "call",   "alloc",  "asm",      "assert", "branch",
    "wbranch", "jump",  "return", "halt",   "buf",      "word",
};

bool is_reserved(std::string_view s) {
  return kKeywords.contains(s) || binop_from_mnemonic(s).has_value();
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.pos = {line_, col_};
      if (i_ >= src_.size()) {
        t.kind = Tok::kEnd;
        out.push_back(t);
        return out;
      }
      char c = src_[i_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = i_;
        while (i_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[i_])) ||
                src_[i_] == '_')) {
          advance();
        }
        t.kind = Tok::kIdent;
        t.text = std::string(src_.substr(start, i_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_int(t);
      } else if (c == '"') {
        lex_string(t);
      } else {
        t.kind = Tok::kPunct;
        static constexpr std::string_view kTwo[] = {"->", "<<", ">>"};
        bool matched = false;
        for (auto two : kTwo) {
          if (src_.substr(i_, 2) == two) {
            t.text = std::string(two);
            advance();
            advance();
            matched = true;
            break;
          }
        }
        if (!matched) {
          static constexpr std::string_view kOne = ";,:={}()[]+-*/%&|^";
          if (kOne.find(c) == std::string_view::npos) {
            throw SyntaxError(std::string("unexpected character '") + c + "'",
                              line_, col_);
          }
          t.text = std::string(1, c);
          advance();
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_space() {
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (src_.substr(i_, 2) == "//") {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  void lex_int(Token& t) {
    t.kind = Tok::kInt;
    Pos start = {line_, col_};
    uint64_t base = 10;
    if (src_.substr(i_, 2) == "0x" || src_.substr(i_, 2) == "0X") {
      base = 16;
      advance();
      advance();
    }
    uint64_t v = 0;
    int digits = 0;
    while (i_ < src_.size()) {
      char c = src_[i_];
      int d = -1;
      if (c == '_') {
        advance();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        d = c - '0';
      } else if (base == 16 && std::isxdigit(static_cast<unsigned char>(c))) {
        d = std::tolower(c) - 'a' + 10;
      }
      if (d < 0) break;
      v = v * base + static_cast<uint64_t>(d);
      if (v > 0xFFFFFFFFull) {
        throw SyntaxError("integer literal exceeds 32 bits", start.line,
                          start.column);
      }
      ++digits;
      advance();
    }
    if (digits == 0) {
      throw SyntaxError("malformed integer literal", start.line, start.column);
    }
    if (i_ < src_.size() && (std::isalpha(static_cast<unsigned char>(src_[i_])))) {
      throw SyntaxError("malformed integer literal", start.line, start.column);
    }
    t.value = static_cast<uint32_t>(v);
    t.text = std::string(src_.substr(0, 0));
  }

  void lex_string(Token& t) {
    Pos start = {line_, col_};
    advance();
    std::string s;
    while (i_ < src_.size() && src_[i_] != '"') {
      if (src_[i_] == '\n') break;
      if (src_[i_] == '\\' && i_ + 1 < src_.size()) {
        advance();
        char e = src_[i_];
        s.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
        advance();
        continue;
      }
      s.push_back(src_[i_]);
      advance();
    }
    if (i_ >= src_.size() || src_[i_] != '"') {
      throw SyntaxError("unterminated string literal", start.line, start.column);
    }
    advance();
    t.kind = Tok::kString;
    t.text = std::move(s);
  }

  std::string_view src_;
  size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, SourceMap& sm) : toks_(std::move(toks)), sm_(sm) {}

  Program parse() {
    Program p;
    bool have_entry = false;
    bool have_vector = false;
    while (peek().kind != Tok::kEnd) {
      const Token& t = peek();
      if (t.kind != Tok::kIdent) fail_expected("item keyword");
      if (t.text == "const") {
        parse_const(p);
      } else if (t.text == "global") {
        parse_global(p);
      } else if (t.text == "fn") {
        parse_function(p);
      } else if (t.text == "task") {
        parse_task(p);
      } else if (t.text == "vector") {
        if (have_vector) throw SemanticError("duplicate definition of vector table", t.pos.line, t.pos.column);
        have_vector = true;
        parse_vector(p);
      } else if (t.text == "entry") {
        if (have_entry) throw SemanticError("duplicate definition of entry", t.pos.line, t.pos.column);
        have_entry = true;
        sm_.items["entry"] = t.pos;
        next();
        p.entry = expect_name("function name");
        expect(";");
      } else {
        fail_expected("item keyword");
      }
    }
    return p;
  }

 private:
  const Token& peek(size_t ahead = 0) const {
    size_t k = std::min(i_ + ahead, toks_.size() - 1);
    return toks_[k];
  }
  const Token& next() {
    const Token& t = toks_[i_];
    if (i_ + 1 < toks_.size()) ++i_;
    return t;
  }
  bool is_punct(std::string_view s, size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::kPunct && t.text == s;
  }
  bool is_word(std::string_view s) const {
    return peek().kind == Tok::kIdent && peek().text == s;
  }

  [[noreturn]] void fail_expected(const std::string& what) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::kEnd      ? "end of input"
                      : t.kind == Tok::kInt    ? "integer"
                      : t.kind == Tok::kString ? "string"
                                               : "'" + t.text + "'";
    throw SyntaxError("expected " + what + ", found " + got, t.pos.line,
                      t.pos.column);
  }

  void expect(std::string_view punct) {
    if (!is_punct(punct)) fail_expected("'" + std::string(punct) + "'");
    next();
  }

  void expect_word(std::string_view w) {
    if (!is_word(w)) fail_expected("'" + std::string(w) + "'");
    next();
  }

  std::string expect_name(const std::string& what) {
    const Token& t = peek();
    if (t.kind != Tok::kIdent || is_reserved(t.text)) fail_expected(what);
    next();
    return t.text;
  }

  uint32_t expect_int(bool allow_negative = false) {
    bool neg = false;
    if (allow_negative && is_punct("-")) {
      neg = true;
      next();
    }
    if (peek().kind != Tok::kInt) fail_expected("integer");
    uint32_t v = next().value;
    return neg ? 0u - v : v;
  }

  void parse_const(Program& p) {
    Pos at = next().pos;
    std::string name = expect_name("constant name");
    expect("=");
    uint32_t v = expect_int(true);
    expect(";");
    if (p.constants.contains(name)) {
      throw SemanticError("duplicate definition of '" + name + "'", at.line, at.column);
    }
    p.constants[name] = v;
    sm_.items["const:" + name] = at;
  }

  void parse_global(Program& p) {
    Pos at = next().pos;
    GlobalDecl g;
    g.name = expect_name("global name");
    if (is_punct("[")) {
      next();
      g.elements = expect_int();
      expect("]");
    }
    if (is_punct("=")) {
      next();
      g.init = expect_int(true);
    }
    expect(";");
    if (!sm_.items.emplace("global:" + g.name, at).second) {
      throw SemanticError("duplicate definition of '" + g.name + "'", at.line, at.column);
    }
    p.globals.push_back(std::move(g));
  }

  void parse_task(Program& p) {
    Pos at = next().pos;
    TaskDecl t;
    t.name = expect_name("task name");
    expect_word("priority");
    t.priority = expect_int();
    expect_word("calls");
    t.function = expect_name("function name");
    expect(";");
    if (!sm_.items.emplace("task:" + t.name, at).second) {
      throw SemanticError("duplicate definition of task '" + t.name + "'", at.line, at.column);
    }
    p.tasks.push_back(std::move(t));
  }

  void parse_vector(Program& p) {
    sm_.items["vector"] = next().pos;
    expect("{");
    if (!is_punct("}")) {
      p.vector_table.push_back(expect_name("function name"));
      while (is_punct(",")) {
        next();
        p.vector_table.push_back(expect_name("function name"));
      }
    }
    expect("}");
    if (is_punct(";")) next();
  }

  void parse_function(Program& p) {
    Pos at = next().pos;
    Function fn;
    fn.name = expect_name("function name");
    if (p.functions.contains(fn.name) || is_builtin(fn.name)) {
      throw SemanticError("duplicate definition of function '" + fn.name + "'",
                          at.line, at.column);
    }
    sm_.functions[fn.name] = at;
    expect("(");
    if (!is_punct(")")) {
      for (;;) {
        Param prm;
        prm.name = expect_name("parameter name");
        if (is_punct(":")) {
          next();
          if (is_word("buf")) {
            prm.type = ParamType::kBuffer;
          } else if (is_word("word")) {
            prm.type = ParamType::kWord;
          } else {
            fail_expected("'buf' or 'word'");
          }
          next();
        }
        fn.params.push_back(std::move(prm));
        if (!is_punct(",")) break;
        next();
      }
    }
    expect(")");
    expect("{");
    while (!is_punct("}")) {
      parse_block(fn);
    }
    next();
    p.functions.emplace(fn.name, std::move(fn));
  }

  static std::optional<uint32_t> label_index(std::string_view s) {
    if (s.size() < 2 || s[0] != 'b') return std::nullopt;
    uint64_t v = 0;
    for (size_t k = 1; k < s.size(); ++k) {
      if (!std::isdigit(static_cast<unsigned char>(s[k]))) return std::nullopt;
      v = v * 10 + static_cast<uint64_t>(s[k] - '0');
      if (v > 0xFFFFFFFFull) return std::nullopt;
    }
    return static_cast<uint32_t>(v);
  }

  void parse_block(Function& fn) {
    const Token& lbl = peek();
    auto idx = lbl.kind == Tok::kIdent ? label_index(lbl.text) : std::nullopt;
    if (!idx || !is_punct(":", 1)) fail_expected("block label");
    if (*idx != fn.blocks.size()) {
      throw SemanticError("block label '" + lbl.text + "' out of sequence (expected b" +
                              std::to_string(fn.blocks.size()) + ")",
                          lbl.pos.line, lbl.pos.column);
    }
    next();
    next();
    BasicBlock bb;
    const size_t block_no = fn.blocks.size();
    for (;;) {
      if (is_punct("}")) break;
      if (peek().kind == Tok::kIdent && label_index(peek().text) && is_punct(":", 1)) break;
      Pos at = peek().pos;
      sm_.instructions[{fn.name, block_no, bb.instructions.size()}] = at;
      bb.instructions.push_back(parse_statement());
    }
    fn.blocks.push_back(std::move(bb));
  }

  uint32_t parse_target() {
    const Token& t = peek();
    if (t.kind == Tok::kInt) {
      next();
      return t.value;
    }
    if (t.kind == Tok::kIdent) {
      if (auto k = label_index(t.text)) {
        next();
        return *k;
      }
    }
    fail_expected("block target");
  }

  static uint8_t width_suffix(std::string_view word, std::string_view stem) {
    std::string_view rest = word.substr(stem.size());
    if (rest.empty() || rest == "4") return 4;
    if (rest == "2") return 2;
    return 1;
  }

  std::vector<Expr> parse_args() {
    std::vector<Expr> args;
    expect("(");
    if (!is_punct(")")) {
      args.push_back(parse_expr());
      while (is_punct(",")) {
        next();
        args.push_back(parse_expr());
      }
    }
    expect(")");
    return args;
  }

  std::string parse_callee() {
    const Token& t = peek();
    if (t.kind != Tok::kIdent || (is_reserved(t.text))) fail_expected("callee name");
    next();
    return t.text;
  }

  Instruction parse_statement() {
    Instruction ins;
    const Token& t = peek();
    if (t.kind != Tok::kIdent) fail_expected("statement");
    const std::string w = t.text;
    if (w == "store" || w == "store1" || w == "store2" || w == "store4") {
      next();
      ins.op = Instruction::Op::kStore;
      ins.width = width_suffix(w, "store");
      ins.a = parse_expr();
      expect(",");
      ins.b = parse_expr();
    } else if (w == "call") {
      next();
      ins.op = Instruction::Op::kCall;
      ins.callee = parse_callee();
      ins.args = parse_args();
    } else if (w == "asm") {
      next();
      ins.op = Instruction::Op::kAsm;
      if (peek().kind != Tok::kString) fail_expected("assembly string");
      ins.text = next().text;
      if (is_punct("->")) {
        next();
        ins.outputs.push_back(expect_name("output local"));
        while (is_punct(",")) {
          next();
          ins.outputs.push_back(expect_name("output local"));
        }
      }
    } else if (w == "assert") {
      next();
      ins.op = Instruction::Op::kAssert;
      ins.a = parse_expr();
    } else if (w == "branch" || w == "wbranch") {
      next();
      ins.op = Instruction::Op::kBranch;
      ins.weakened = w == "wbranch";
      ins.a = parse_expr();
      expect(",");
      ins.target = parse_target();
      expect(",");
      ins.else_target = parse_target();
    } else if (w == "jump") {
      next();
      ins.op = Instruction::Op::kJump;
      ins.target = parse_target();
    } else if (w == "return") {
      next();
      ins.op = Instruction::Op::kReturn;
      if (!is_punct(";")) {
        ins.has_value = true;
        ins.a = parse_expr();
      }
    } else if (w == "halt") {
      next();
      ins.op = Instruction::Op::kHalt;
    } else {
      ins = parse_assignment();
    }
    expect(";");
    return ins;
  }

  Instruction parse_assignment() {
    Instruction ins;
    std::string name = expect_name("statement");
    if (is_punct("[")) {
      next();
      ins.op = Instruction::Op::kIndexStore;
      ins.buffer = name;
      ins.a = parse_expr();
      expect("]");
      expect("=");
      ins.b = parse_expr();
      return ins;
    }
    expect("=");
    ins.dst = name;
    const Token& t = peek();
    if (t.kind == Tok::kIdent) {
      const std::string& w = t.text;
      if (w == "load" || w == "load1" || w == "load2" || w == "load4") {
        next();
        ins.op = Instruction::Op::kLoad;
        ins.width = width_suffix(w, "load");
        ins.a = parse_expr();
        return ins;
      }
      if (w == "call") {
        next();
        ins.op = Instruction::Op::kCall;
        ins.callee = parse_callee();
        ins.args = parse_args();
        return ins;
      }
      if (w == "alloc") {
        next();
        ins.op = Instruction::Op::kAlloc;
        ins.a = parse_expr();
        return ins;
      }
      if (auto op = binop_from_mnemonic(w)) {
        next();
        ins.op = Instruction::Op::kBinOp;
        ins.binop = *op;
        ins.a = parse_expr();
        expect(",");
        ins.b = parse_expr();
        return ins;
      }
      if (!is_reserved(w) && is_punct("[", 1)) {
        next();
        next();
        ins.op = Instruction::Op::kIndex;
        ins.buffer = w;
        ins.a = parse_expr();
        expect("]");
        return ins;
      }
    }
    ins.op = Instruction::Op::kLet;
    ins.a = parse_expr();
    return ins;
  }

  // Precedence climbing; higher binds tighter.
  static int precedence(const Token& t, BinOp& op) {
    if (t.kind != Tok::kPunct) return -1;
    static const std::map<std::string, std::pair<int, BinOp>, std::less<>> kTable = {
        {"|", {1, BinOp::kOr}},   {"^", {2, BinOp::kXor}},  {"&", {3, BinOp::kAnd}},
        {"<<", {4, BinOp::kShl}}, {">>", {4, BinOp::kShr}}, {"+", {5, BinOp::kAdd}},
        {"-", {5, BinOp::kSub}},  {"*", {6, BinOp::kMul}},  {"/", {6, BinOp::kDiv}},
        {"%", {6, BinOp::kMod}},
    };
    auto it = kTable.find(t.text);
    if (it == kTable.end()) return -1;
    op = it->second.second;
    return it->second.first;
  }

  Expr parse_expr(int min_prec = 1) {
    Expr lhs = parse_atom();
    for (;;) {
      BinOp op{};
      int prec = precedence(peek(), op);
      if (prec < min_prec) break;
      next();
      Expr rhs = parse_expr(prec + 1);
      lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_atom() {
    const Token& t = peek();
    if (t.kind == Tok::kInt) {
      next();
      return Expr::integer(t.value);
    }
    if (is_punct("(")) {
      next();
      Expr e = parse_expr();
      expect(")");
      return e;
    }
    if (t.kind == Tok::kIdent && !is_reserved(t.text)) {
      next();
      return Expr::ref(t.text);
    }
    fail_expected("expression");
  }

  std::vector<Token> toks_;
  size_t i_ = 0;
  SourceMap& sm_;
};

// ---------------------------------------------------------------------------
// Semantic validation.

class Validator {
 public:
  Validator(const Program& p, const SourceMap* sm) : p_(p), sm_(sm) {}

  void run() {
    for (const auto& [name, fn] : p_.functions) check_function(fn);

    std::set<std::string> global_names;
    for (const auto& g : p_.globals) {
      if (!global_names.insert(g.name).second) {
        fail_item("global:" + g.name, "duplicate definition of '" + g.name + "'");
      }
      if (p_.constants.contains(g.name)) {
        fail_item("global:" + g.name,
                  "duplicate definition of '" + g.name + "' (constant and global)");
      }
    }
    for (const auto& t : p_.tasks) {
      const Function* f = p_.find_function(t.function);
      if (!f) fail_item("task:" + t.name, "undefined function '" + t.function + "'");
      if (!f->params.empty()) {
        fail_item("task:" + t.name, "task function '" + t.function + "' must take no parameters");
      }
    }
    for (const auto& v : p_.vector_table) {
      const Function* f = p_.find_function(v);
      if (!f) fail_item("vector", "undefined function '" + v + "'");
      if (!f->params.empty()) {
        fail_item("vector", "interrupt handler '" + v + "' must take no parameters");
      }
    }
    for (const auto& [name, fn] : p_.functions) {
      bool listed = std::find(p_.vector_table.begin(), p_.vector_table.end(), name) !=
                    p_.vector_table.end();
      if (fn.is_isr != listed) {
        fail_fn(name, "function '" + name + "' isr flag disagrees with vector table");
      }
    }
    if (p_.entry.empty()) fail_item("entry", "missing entry declaration");
    const Function* e = p_.find_function(p_.entry);
    if (!e) fail_item("entry", "undefined function '" + p_.entry + "'");
    if (!e->params.empty()) fail_item("entry", "entry function must take no parameters");
  }

 private:
  [[noreturn]] void fail_at(Pos pos, const std::string& msg) const {
    throw SemanticError(msg, pos.line, pos.column);
  }
  [[noreturn]] void fail_item(const std::string& key, const std::string& msg) const {
    Pos pos;
    if (sm_) {
      auto it = sm_->items.find(key);
      if (it != sm_->items.end()) pos = it->second;
    }
    fail_at(pos, msg);
  }
  [[noreturn]] void fail_fn(const std::string& fn, const std::string& msg) const {
    Pos pos;
    if (sm_) {
      auto it = sm_->functions.find(fn);
      if (it != sm_->functions.end()) pos = it->second;
    }
    fail_at(pos, msg);
  }
  [[noreturn]] void fail_ins(const std::string& msg) const {
    Pos pos;
    if (sm_) {
      auto it = sm_->instructions.find({fn_->name, blk_, idx_});
      if (it != sm_->instructions.end()) pos = it->second;
    }
    fail_at(pos, msg);
  }

  enum class Kind { kWordLocal, kBufferLocal, kConst, kWordGlobal, kBufferGlobal };

  std::optional<Kind> lookup(const std::string& name) const {
    if (auto it = locals_.find(name); it != locals_.end()) return it->second;
    if (p_.constants.contains(name)) return Kind::kConst;
    if (const GlobalDecl* g = p_.find_global(name)) {
      return g->is_buffer() ? Kind::kBufferGlobal : Kind::kWordGlobal;
    }
    return std::nullopt;
  }

  void check_expr(const Expr& e) const {
    switch (e.kind) {
      case Expr::Kind::kInt:
        return;
      case Expr::Kind::kName:
        if (!lookup(e.name)) fail_ins("undefined name '" + e.name + "'");
        return;
      case Expr::Kind::kBinary:
        if (e.operands.size() != 2) fail_ins("malformed expression");
        check_expr(e.operands[0]);
        check_expr(e.operands[1]);
        return;
    }
  }

  void check_buffer_name(const std::string& name) const {
    auto k = lookup(name);
    if (!k) fail_ins("undefined name '" + name + "'");
    if (*k != Kind::kBufferLocal && *k != Kind::kBufferGlobal) {
      fail_ins("'" + name + "' is not a buffer");
    }
  }

  void check_buffer_arg(const Expr& e) const {
    if (!e.is_name()) fail_ins("buffer argument must be a buffer name");
    check_buffer_name(e.name);
  }

  void define(const std::string& name, Kind kind) {
    if (p_.constants.contains(name) || p_.find_global(name)) {
      fail_ins("duplicate definition of '" + name + "' (shadows a constant or global)");
    }
    auto [it, inserted] = locals_.emplace(name, kind);
    if (!inserted && it->second != kind) {
      fail_ins("local '" + name + "' used both as buffer and as word");
    }
  }

  void check_function(const Function& fn) {
    fn_ = &fn;
    locals_.clear();
    blk_ = 0;
    idx_ = 0;
    std::set<std::string> seen_params;
    for (const auto& prm : fn.params) {
      if (!seen_params.insert(prm.name).second) {
        fail_fn(fn.name, "duplicate parameter '" + prm.name + "'");
      }
      if (p_.constants.contains(prm.name) || p_.find_global(prm.name)) {
        fail_fn(fn.name, "duplicate definition of '" + prm.name + "' (shadows a constant or global)");
      }
      locals_[prm.name] = prm.type == ParamType::kBuffer ? Kind::kBufferLocal : Kind::kWordLocal;
    }
    if (fn.blocks.empty()) fail_fn(fn.name, "function '" + fn.name + "' has no blocks");

    // Pass 1: define locals so that uses may precede definitions textually.
    for (blk_ = 0; blk_ < fn.blocks.size(); ++blk_) {
      const auto& ins_list = fn.blocks[blk_].instructions;
      for (idx_ = 0; idx_ < ins_list.size(); ++idx_) {
        const Instruction& ins = ins_list[idx_];
        if (ins.op == Instruction::Op::kAlloc) {
          define(ins.dst, Kind::kBufferLocal);
        } else if (!ins.dst.empty()) {
          define(ins.dst, Kind::kWordLocal);
        }
        for (const auto& o : ins.outputs) define(o, Kind::kWordLocal);
      }
    }
    // Pass 2: uses, targets, block shape.
    for (blk_ = 0; blk_ < fn.blocks.size(); ++blk_) {
      const auto& ins_list = fn.blocks[blk_].instructions;
      if (ins_list.empty()) {
        idx_ = 0;
        fail_fn(fn.name, "block b" + std::to_string(blk_) + " of '" + fn.name + "' is empty");
      }
      for (idx_ = 0; idx_ < ins_list.size(); ++idx_) {
        const Instruction& ins = ins_list[idx_];
        bool last = idx_ + 1 == ins_list.size();
        if (ins.is_terminator() != last) {
          fail_ins(last ? "block must end with a terminator"
                        : "terminator must be the last instruction of a block");
        }
        check_instruction(ins);
      }
    }
  }

  void check_target(uint32_t t) const {
    if (t >= fn_->blocks.size()) {
      fail_ins("bad branch target " + std::to_string(t));
    }
  }

  void check_word_dst(const Instruction& ins) const {
    if (!ins.dst.empty() && locals_.at(ins.dst) != Kind::kWordLocal) {
      fail_ins("'" + ins.dst + "' is a buffer and cannot hold a word");
    }
  }

  void check_instruction(const Instruction& ins) const {
    using Op = Instruction::Op;
    switch (ins.op) {
      case Op::kLet:
      case Op::kAssert:
      case Op::kAlloc:
        check_expr(ins.a);
        break;
      case Op::kLoad:
      case Op::kStore:
        if (ins.width != 1 && ins.width != 2 && ins.width != 4) fail_ins("bad access width");
        check_expr(ins.a);
        if (ins.op == Op::kStore) check_expr(ins.b);
        break;
      case Op::kBinOp:
        check_expr(ins.a);
        check_expr(ins.b);
        break;
      case Op::kIndex:
        check_buffer_name(ins.buffer);
        check_expr(ins.a);
        break;
      case Op::kIndexStore:
        check_buffer_name(ins.buffer);
        check_expr(ins.a);
        check_expr(ins.b);
        break;
      case Op::kBranch:
        check_expr(ins.a);
        check_target(ins.target);
        check_target(ins.else_target);
        break;
      case Op::kJump:
        check_target(ins.target);
        break;
      case Op::kReturn:
        if (ins.has_value) check_expr(ins.a);
        break;
      case Op::kCall:
        check_call(ins);
        break;
      case Op::kAsm:
      case Op::kHalt:
        break;
    }
    if (ins.op != Op::kAlloc) check_word_dst(ins);
  }

  void check_arity(const Instruction& ins, size_t n) const {
    if (ins.args.size() != n) {
      fail_ins("call to '" + ins.callee + "' expects " + std::to_string(n) + " argument(s)");
    }
  }

  void check_call(const Instruction& ins) const {
    if (is_builtin(ins.callee)) {
      std::string_view c = ins.callee;
      if (c == builtin::kCopy) {
        check_arity(ins, 3);
        check_buffer_arg(ins.args[0]);
        check_buffer_arg(ins.args[1]);
        check_expr(ins.args[2]);
      } else if (c == builtin::kYield) {
        check_arity(ins, 0);
      } else if (c == builtin::kInput || c == builtin::kIsrEnabled) {
        check_arity(ins, 1);
        check_expr(ins.args[0]);
      } else if (c == builtin::kMmioLoad) {
        check_arity(ins, 2);
        check_expr(ins.args[0]);
        check_expr(ins.args[1]);
      } else if (c == builtin::kMmioStore) {
        check_arity(ins, 3);
        for (const auto& a : ins.args) check_expr(a);
      }
      if ((c == builtin::kInput || c == builtin::kMmioLoad || c == builtin::kMmioStore)) {
        const Expr& w = ins.args.back();
        if (w.kind != Expr::Kind::kInt || (w.value != 1 && w.value != 2 && w.value != 4)) {
          fail_ins("width argument of '" + ins.callee + "' must be 1, 2 or 4");
        }
      }
      return;
    }
    const Function* callee = p_.find_function(ins.callee);
    if (!callee) fail_ins("undefined function '" + ins.callee + "'");
    check_arity(ins, callee->params.size());
    for (size_t k = 0; k < ins.args.size(); ++k) {
      if (callee->params[k].type == ParamType::kBuffer) {
        check_buffer_arg(ins.args[k]);
      } else {
        check_expr(ins.args[k]);
      }
    }
  }

  const Program& p_;
  const SourceMap* sm_;
  const Function* fn_ = nullptr;
  size_t blk_ = 0;
  size_t idx_ = 0;
  std::map<std::string, Kind> locals_;
};

}  // namespace

Program parse_program(std::string_view text) {
  SourceMap sm;
  Parser parser(Lexer(text).run(), sm);
  Program p = parser.parse();
  for (const auto& v : p.vector_table) {
    auto it = p.functions.find(v);
    if (it != p.functions.end()) it->second.is_isr = true;
  }
  Validator(p, &sm).run();
  return p;
}

void validate_program(const Program& p) { Validator(p, nullptr).run(); }

}  // namespace rehost::fir
